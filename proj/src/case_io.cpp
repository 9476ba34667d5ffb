#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fppf/errors.hpp"
#include "fppf/netmodel.hpp"

namespace fppf {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Raw rows in file units before per-unit conversion.
struct RawCase {
  double base_mva = 0.0;
  bool have_base = false;
  std::vector<std::vector<double>> bus, gen, branch;
  std::vector<int> bus_line, gen_line, branch_line;
  std::map<int, double> participation;
};

CaseData finalize(const RawCase& raw) {
  if (!raw.have_base) throw ParseError("missing baseMVA", 0, "baseMVA");
  if (raw.bus.empty()) throw ParseError("missing or empty bus matrix", 0, "bus");

  const double base = raw.base_mva;
  CaseData c;
  c.base_mva = base;

  auto need = [](const std::vector<double>& row, std::size_t cols, int line, const char* what) {
    if (row.size() < cols)
      throw ParseError(std::string(what) + " row has " + std::to_string(row.size()) + " columns, expected at least " +
                           std::to_string(cols),
                       line, what);
  };

  std::vector<int> types;
  std::vector<int> isolated;
  for (std::size_t r = 0; r < raw.bus.size(); ++r) {
    const auto& row = raw.bus[r];
    need(row, 9, raw.bus_line[r], "bus");
    const int type = static_cast<int>(row[1]);
    if (type < 1 || type > 4) throw ParseError("invalid bus type " + std::to_string(type), raw.bus_line[r], "bus.TYPE");
    if (type == 4) {
      isolated.push_back(static_cast<int>(row[0]));
      continue;
    }
    Bus b;
    b.id = static_cast<int>(row[0]);
    b.Pd = row[2] / base;
    b.Qd = row[3] / base;
    b.Gs = row[4] / base;
    b.Bs = row[5] / base;
    b.Vm = row[7];
    b.Va = row[8] * kDeg;
    c.buses.push_back(b);
    types.push_back(type);
  }
  auto is_isolated = [&](int id) { return std::find(isolated.begin(), isolated.end(), id) != isolated.end(); };

  for (std::size_t r = 0; r < raw.gen.size(); ++r) {
    const auto& row = raw.gen[r];
    need(row, 8, raw.gen_line[r], "gen");
    if (row[7] <= 0.0) continue;
    const int bus = static_cast<int>(row[0]);
    if (is_isolated(bus)) continue;
    Generator g;
    g.bus = bus;
    g.Pg = row[1] / base;
    g.Qg = row[2] / base;
    g.Vg = row[5];
    c.gens.push_back(g);
  }

  for (std::size_t r = 0; r < raw.branch.size(); ++r) {
    const auto& row = raw.branch[r];
    need(row, 11, raw.branch_line[r], "branch");
    if (row[10] <= 0.0) continue;
    Branch br;
    br.from = static_cast<int>(row[0]);
    br.to = static_cast<int>(row[1]);
    if (is_isolated(br.from) || is_isolated(br.to)) continue;
    br.r = row[2];
    br.x = row[3];
    br.b_c = row[4];
    br.tap = row[8] == 0.0 ? 1.0 : row[8];
    br.shift = row[9] * kDeg;
    c.branches.push_back(br);
  }

  int slack_count = 0;
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    if (types[i] == 3) {
      c.slack_bus = c.buses[i].id;
      ++slack_count;
    }
  }
  if (slack_count == 0) throw ModelError("case has no reference (type 3) bus");
  if (slack_count > 1) throw ModelError("case has more than one reference bus");

  // Generator buses: any bus with an in-service unit, plus the reference bus.
  std::map<int, double> setpoint;
  for (const auto& g : c.gens) setpoint.try_emplace(g.bus, g.Vg);
  for (std::size_t i = 0; i < c.buses.size(); ++i) {
    auto& b = c.buses[i];
    const auto it = setpoint.find(b.id);
    if (it != setpoint.end()) {
      b.kind = BusKind::PV;
      b.Vm = it->second;
    } else {
      b.kind = types[i] == 3 ? BusKind::PV : BusKind::PQ;
    }
  }

  c.alpha.assign(c.buses.size(), 0.0);
  if (raw.participation.empty()) {
    c.alpha[static_cast<std::size_t>(c.bus_index(c.slack_bus))] = 1.0;
  } else {
    for (const auto& [id, a] : raw.participation) c.alpha[static_cast<std::size_t>(c.bus_index(id))] = a;
  }

  validate_case(c);
  return c;
}

double parse_number(const std::string& tok, int line, const char* field) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0') throw ParseError("invalid number '" + tok + "'", line, field);
  return v;
}

}  // namespace

CaseData parse_matpower(std::string_view text) {
  RawCase raw;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;

  std::vector<std::vector<double>>* target = nullptr;
  std::vector<int>* target_lines = nullptr;
  const char* field = "";
  std::vector<double> row;
  int row_line = 0;

  auto flush_row = [&] {
    if (!row.empty()) {
      target->push_back(row);
      target_lines->push_back(row_line);
      row.clear();
    }
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (auto pct = line.find('%'); pct != std::string::npos) line.erase(pct);

    std::size_t pos = 0;
    if (target == nullptr) {
      const auto mpc = line.find("mpc.");
      if (mpc == std::string::npos) continue;
      const auto eq = line.find('=', mpc);
      if (eq == std::string::npos) continue;
      std::string name = line.substr(mpc + 4, eq - mpc - 4);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back()))) name.pop_back();

      if (name == "baseMVA") {
        std::string val = line.substr(eq + 1);
        if (auto semi = val.find(';'); semi != std::string::npos) val.erase(semi);
        std::istringstream vs(val);
        std::string tok;
        vs >> tok;
        raw.base_mva = parse_number(tok, lineno, "baseMVA");
        raw.have_base = true;
        continue;
      }
      if (name == "bus") {
        target = &raw.bus, target_lines = &raw.bus_line, field = "bus";
      } else if (name == "gen") {
        target = &raw.gen, target_lines = &raw.gen_line, field = "gen";
      } else if (name == "branch") {
        target = &raw.branch, target_lines = &raw.branch_line, field = "branch";
      } else {
        continue;
      }
      const auto open = line.find('[', eq);
      if (open == std::string::npos) throw ParseError("expected '[' after mpc." + name, lineno, field);
      target->clear();
      target_lines->clear();
      pos = open + 1;
    }

    // Inside a matrix literal: numbers separated by blanks or commas, rows by ';' or newline.
    std::string tok;
    auto flush_tok = [&] {
      if (!tok.empty()) {
        if (row.empty()) row_line = lineno;
        row.push_back(parse_number(tok, lineno, field));
        tok.clear();
      }
    };
    bool closed = false;
    for (; pos < line.size(); ++pos) {
      const char ch = line[pos];
      if (ch == ']') {
        flush_tok();
        flush_row();
        closed = true;
        break;
      }
      if (ch == ';') {
        flush_tok();
        flush_row();
      } else if (std::isspace(static_cast<unsigned char>(ch)) || ch == ',') {
        flush_tok();
      } else {
        tok.push_back(ch);
      }
    }
    if (closed) {
      target = nullptr;
      continue;
    }
    flush_tok();
    flush_row();
  }
  if (target != nullptr) throw ParseError(std::string("unterminated matrix mpc.") + field, lineno, field);
  return finalize(raw);
}

CaseData parse_case_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(e.what());
  }
  RawCase raw;
  auto num = [](const nlohmann::json& obj, const char* key, double fallback, const char* field, int idx) {
    if (!obj.contains(key)) {
      if (std::isnan(fallback))
        throw ParseError(std::string("missing key '") + key + "' in " + field + "[" + std::to_string(idx) + "]", 0,
                         std::string(field) + "." + key);
      return fallback;
    }
    if (!obj[key].is_number())
      throw ParseError(std::string("non-numeric '") + key + "' in " + field + "[" + std::to_string(idx) + "]", 0,
                       std::string(field) + "." + key);
    return obj[key].get<double>();
  };
  const double req = std::nan("");

  if (!j.is_object()) throw ParseError("case JSON must be an object");
  if (!j.contains("base_mva") || !j["base_mva"].is_number()) throw ParseError("missing base_mva", 0, "base_mva");
  raw.base_mva = j["base_mva"].get<double>();
  raw.have_base = true;

  int idx = 0;
  for (const auto& b : j.value("buses", nlohmann::json::array())) {
    raw.bus.push_back({num(b, "id", req, "buses", idx), num(b, "type", req, "buses", idx),
                       num(b, "pd", 0.0, "buses", idx), num(b, "qd", 0.0, "buses", idx),
                       num(b, "gs", 0.0, "buses", idx), num(b, "bs", 0.0, "buses", idx), 1.0,
                       num(b, "vm", 1.0, "buses", idx), num(b, "va", 0.0, "buses", idx)});
    raw.bus_line.push_back(0);
    ++idx;
  }
  idx = 0;
  for (const auto& g : j.value("gens", nlohmann::json::array())) {
    raw.gen.push_back({num(g, "bus", req, "gens", idx), num(g, "pg", 0.0, "gens", idx), num(g, "qg", 0.0, "gens", idx),
                       0.0, 0.0, num(g, "vg", 1.0, "gens", idx), 0.0, num(g, "status", 1.0, "gens", idx)});
    raw.gen_line.push_back(0);
    ++idx;
  }
  idx = 0;
  for (const auto& br : j.value("branches", nlohmann::json::array())) {
    raw.branch.push_back({num(br, "from", req, "branches", idx), num(br, "to", req, "branches", idx),
                          num(br, "r", 0.0, "branches", idx), num(br, "x", req, "branches", idx),
                          num(br, "b", 0.0, "branches", idx), 0.0, 0.0, 0.0, num(br, "tap", 0.0, "branches", idx),
                          num(br, "shift", 0.0, "branches", idx), num(br, "status", 1.0, "branches", idx)});
    raw.branch_line.push_back(0);
    ++idx;
  }
  if (j.contains("participation")) {
    const auto& p = j["participation"];
    if (!p.is_object()) throw ParseError("participation must be an object", 0, "participation");
    for (auto it = p.begin(); it != p.end(); ++it) {
      if (!it.value().is_number()) throw ParseError("non-numeric participation factor", 0, "participation");
      int id = 0;
      try {
        id = std::stoi(it.key());
      } catch (const std::exception&) {
        throw ParseError("participation key '" + it.key() + "' is not a bus id", 0, "participation");
      }
      raw.participation[id] = it.value().get<double>();
    }
  }
  return finalize(raw);
}

std::string case_to_json(const CaseData& c) {
  const double base = c.base_mva;
  nlohmann::json j;
  j["base_mva"] = base;
  auto& buses = j["buses"] = nlohmann::json::array();
  for (const auto& b : c.buses) {
    const int type = b.id == c.slack_bus ? 3 : (b.kind == BusKind::PV ? 2 : 1);
    buses.push_back({{"id", b.id},
                     {"type", type},
                     {"pd", b.Pd * base},
                     {"qd", b.Qd * base},
                     {"gs", b.Gs * base},
                     {"bs", b.Bs * base},
                     {"vm", b.Vm},
                     {"va", b.Va / kDeg}});
  }
  auto& gens = j["gens"] = nlohmann::json::array();
  for (const auto& g : c.gens)
    gens.push_back({{"bus", g.bus}, {"pg", g.Pg * base}, {"qg", g.Qg * base}, {"vg", g.Vg}, {"status", 1}});
  auto& branches = j["branches"] = nlohmann::json::array();
  for (const auto& br : c.branches)
    branches.push_back({{"from", br.from},
                        {"to", br.to},
                        {"r", br.r},
                        {"x", br.x},
                        {"b", br.b_c},
                        {"tap", br.tap},
                        {"shift", br.shift / kDeg},
                        {"status", br.in_service ? 1 : 0}});
  if (c.distributed_slack()) {
    auto& p = j["participation"] = nlohmann::json::object();
    for (std::size_t i = 0; i < c.buses.size(); ++i)
      if (c.alpha[i] > 0.0) p[std::to_string(c.buses[i].id)] = c.alpha[i];
  }
  return j.dump(2);
}

CaseData parse_case(const std::filesystem::path& path, CaseFormat format) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open case file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return format == CaseFormat::Json ? parse_case_json(ss.str()) : parse_matpower(ss.str());
}

CaseData parse_case(const std::filesystem::path& path) {
  return parse_case(path, path.extension() == ".json" ? CaseFormat::Json : CaseFormat::MatpowerM);
}

}  // namespace fppf
