#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>

namespace fppf {

using Index = Eigen::Index;
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using SpMat = Eigen::SparseMatrix<double>;
using SpMatI = Eigen::SparseMatrix<int>;
using Complex = std::complex<double>;
using SpMatC = Eigen::SparseMatrix<Complex>;
using VecC = Eigen::VectorXcd;

}  // namespace fppf
