#include "depsim/harness/config.hpp"

#include "depsim/errors.hpp"
#include "depsim/flux.hpp"
#include "depsim/simulator.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace depsim::harness {

using nlohmann::json;

RateSpec build_model(const ModelConfig& m) {
  auto zrp_factor = [&]() -> FSpec {
    if (m.f == "geom-exp") return GeomExpF{m.beta};
    if (m.f == "const") return ConstF{};
    if (m.f == "linear") return LinearF{};
    if (m.f == "table") {
      TableF t;
      t.values = m.f_table;
      t.increment_ratio = m.increment_ratio;
      if (m.table_tail == "constant")
        t.tail = TableF::Tail::ConstantAfter;
      else if (m.table_tail == "geometric")
        t.tail = TableF::Tail::GeometricIncrement;
      else
        throw ConfigError("config: unknown table tail '" + m.table_tail + "'");
      return t;
    }
    throw ConfigError("config: unknown rate factor '" + m.f + "'");
  };

  if (m.family == "asep") return make_asep(m.p);
  if (m.family == "zrp") return make_zrp(zrp_factor(), m.p, m.q);
  if (m.family == "zrp-const") return make_zrp_const(m.p, m.q);
  if (m.family == "bricklayers") return make_bricklayers_exp(m.beta, m.p, m.q);
  if (m.family == "pap") return make_pap_exclusion(m.a, m.c, m.p);
  throw ConfigError("config: unknown model family '" + m.family + "'");
}

double micro_lambda(const ExperimentConfig& cfg) {
  return cfg.lambda >= 0.0 ? cfg.lambda : 0.8 * cfg.rho;
}

void check_config(const ExperimentConfig& cfg) {
  if (cfg.t_list.empty()) throw ConfigError("config: t_list is empty");
  for (std::size_t i = 0; i < cfg.t_list.size(); ++i) {
    if (!(cfg.t_list[i] >= 0.0) || !std::isfinite(cfg.t_list[i]))
      throw ConfigError("config: t_list entries must be finite and >= 0");
    if (i > 0 && !(cfg.t_list[i] > cfg.t_list[i - 1]))
      throw ConfigError("config: t_list must be strictly increasing");
  }
  if (cfg.replicates < 2) throw ConfigError("config: need >= 2 replicates");
  if (cfg.L != 0 && cfg.L < 4) throw ConfigError("config: ring too small");
  if (!(cfg.guard_factor >= 1.0))
    throw ConfigError("config: guard factor must be >= 1");
  if (cfg.occ_cap < 1) throw ConfigError("config: occupancy cap must be >= 1");
  if (!(cfg.rho > 0.0)) throw ConfigError("config: density must be positive");
  if (cfg.lambda >= 0.0 && !(cfg.lambda <= cfg.rho))
    throw ConfigError("config: lambda must not exceed rho");
  build_model(cfg.model); // surface model errors early
}

namespace {

template <class T>
T field(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " +
                      e.what());
  }
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");

  ExperimentConfig cfg;
  if (j.contains("model")) {
    const json& m = j["model"];
    if (!m.is_object()) throw ConfigError("config: 'model' must be an object");
    cfg.model.family = field<std::string>(m, "family", cfg.model.family);
    cfg.model.p = field<double>(m, "p", cfg.model.p);
    cfg.model.q = field<double>(m, "q", cfg.model.q);
    cfg.model.f = field<std::string>(m, "f", cfg.model.f);
    cfg.model.beta = field<double>(m, "beta", cfg.model.beta);
    cfg.model.f_table =
        field<std::vector<double>>(m, "f_table", cfg.model.f_table);
    cfg.model.table_tail =
        field<std::string>(m, "table_tail", cfg.model.table_tail);
    cfg.model.increment_ratio =
        field<double>(m, "increment_ratio", cfg.model.increment_ratio);
    cfg.model.a = field<double>(m, "a", cfg.model.a);
    cfg.model.c = field<double>(m, "c", cfg.model.c);
  }
  cfg.rho = field<double>(j, "rho", cfg.rho);
  cfg.lambda = field<double>(j, "lambda", cfg.lambda);
  if (j.contains("v")) cfg.v_override = field<double>(j, "v", 0.0);
  cfg.t_list = field<std::vector<double>>(j, "t_list", cfg.t_list);
  if (j.contains("L")) {
    const json& l = j["L"];
    if (l.is_string()) {
      if (l.get<std::string>() != "auto")
        throw ConfigError("config: L must be an integer or \"auto\"");
      cfg.L = 0;
    } else {
      cfg.L = field<int>(j, "L", 0);
    }
  }
  cfg.replicates = field<int>(j, "replicates", cfg.replicates);
  cfg.master_seed = field<std::uint64_t>(j, "master_seed", cfg.master_seed);
  cfg.guard_factor = field<double>(j, "guard_factor", cfg.guard_factor);
  cfg.occ_cap = field<int>(j, "occ_cap", cfg.occ_cap);
  cfg.csv_path = field<std::string>(j, "csv", cfg.csv_path);
  cfg.summary_path = field<std::string>(j, "summary", cfg.summary_path);

  check_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

int ring_size(const RateSpec& spec, const ExperimentConfig& cfg) {
  if (cfg.L != 0) return cfg.L;
  auto [lo, hi] = sim_window(spec.space, cfg.occ_cap);
  double rub = bond_rate_bound(compile_rates(spec, lo, hi));
  double t_max = cfg.t_list.back();
  double speed = std::abs(char_speed(spec, cfg.rho));
  if (cfg.v_override) speed = std::max(speed, std::abs(*cfg.v_override));
  int max_site = static_cast<int>(std::ceil(speed * t_max)) + 2;
  double need = cfg.guard_factor * (rub * t_max + max_site);
  int L = static_cast<int>(std::ceil(need));
  L += L % 2; // even ring keeps the cut exactly opposite the origin
  return std::max(L, 8);
}

} // namespace depsim::harness
