#pragma once
// Experiment configuration: a JSON document selecting a model, a density,
// a time grid and a replicate budget, with the ring size either fixed or
// derived from the wraparound guard.

#include "depsim/rates.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace depsim::harness {

struct ModelConfig {
  std::string family = "asep"; // asep | zrp | zrp-const | bricklayers | pap
  double p = 1.0, q = 0.0;
  std::string f = "geom-exp"; // zrp factor: geom-exp | const | linear | table
  double beta = 1.0;          // geom-exp decay, also bricklayers exponent
  std::vector<double> f_table;
  std::string table_tail = "constant"; // constant | geometric
  double increment_ratio = 0.5;
  double a = 1.0, c = 0.25; // pap annihilation / creation
};

RateSpec build_model(const ModelConfig& m);

struct ExperimentConfig {
  ModelConfig model;
  double rho = 0.5;
  double lambda = -1.0; // lower density of two-density runs; < 0: 0.8 * rho
  std::optional<double> v_override; // off-characteristic observation speed
  std::vector<double> t_list{1.0};
  int L = 0; // 0: derive from the wraparound guard at max(t_list)
  int replicates = 2000;
  std::uint64_t master_seed = 1;
  double guard_factor = 6.0;
  int occ_cap = 60;
  std::string csv_path;
  std::string summary_path;
};

double micro_lambda(const ExperimentConfig& cfg);

// throws ConfigError on malformed JSON or inconsistent values
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
void check_config(const ExperimentConfig& cfg);

// Smallest even ring satisfying the guard at max(t_list) when reading
// sites up to the characteristic (or overridden) displacement; returns
// cfg.L unchanged when it is explicit.
int ring_size(const RateSpec& spec, const ExperimentConfig& cfg);

} // namespace depsim::harness
