#pragma once

#include <cstdint>

#include "simgap/calibration.hpp"
#include "simgap/rng.hpp"

namespace simgap {

enum class ScenarioFamily { BoundedScalar, Bernoulli, Multinomial, Empirical1D };
const char* scenario_family_name(ScenarioFamily f) noexcept;
std::optional<ScenarioFamily> scenario_family_from_name(const std::string& name);

// Per-scenario ground-truth sample count; uniform over {lo..hi}, fixed when
// lo == hi.
struct NLaw {
  long lo = 500;
  long hi = 500;
};

struct GeneratorConfig {
  std::uint64_t seed = 1;
  long m_calibration = 100;
  long m_holdout = 1000;
  ScenarioFamily family = ScenarioFamily::BoundedScalar;
  int d = 3;           // Multinomial only
  double sigma = 1.0;  // Empirical1D only: known sub-Gaussian parameter
  NLaw n_law;
  long k = 200;
  // scalar truth p ~ U[truth_lo, truth_hi]; simplex truth ~ Dirichlet(1)
  double truth_lo = -0.8;
  double truth_hi = 0.8;
  // affine shift + clip for scalar families, exponential tilt for simplices
  double bias = 0.0;
  double bias_2 = 0.0;
  bool with_second_sim = false;
  bool identical_sims = false;  // q_hat_2 reuses q_hat's draws
  long replications = 20;
  long master_n = 100000;  // tightness runs: master sample treated as truth
};

// Truth withheld from calibration code paths; evaluators only.
struct ScenarioOracle {
  double scalar_p = 0.0;
  double scalar_q = 0.0;
  std::vector<double> simplex_p;
  std::vector<double> simplex_q;
  double mean_p = 0.0;  // Empirical1D truth law N(mean, sd)
  double mean_q = 0.0;
  double sd = 1.0;
};

struct GeneratedPool {
  Dataset dataset;
  std::vector<ScenarioOracle> oracle;
};

// Raises on invalid sizes; returns advisory findings (for example a holdout
// pool smaller than the recommended 10x the calibration pool).
std::vector<std::string> validate_generator_config(const GeneratorConfig& cfg);

// Deterministic in (cfg); per-scenario substreams make generation order- and
// thread-independent. Produces the calibration pool of size m_calibration.
GeneratedPool generate(const GeneratorConfig& cfg);

struct CoverageRow {
  double alpha = 0.0;
  double mean_holdout_coverage = 0.0;
  double frac_replications_meeting_bound = 0.0;
  double raw_bound = 0.0;  // 1 - alpha - eps/sqrt(m)
};

struct CoverageResult {
  std::vector<CoverageRow> rows;
  long replications = 0;
  long m = 0;
  double gamma = 0.0;
  double eta = 0.0;
};

// Calibrate on fresh pools, score the true target on fresh holdout
// scenarios (fresh simulator draws at budget k), compare against the
// finite-sample bound. TrueSimTarget switches to the joint-set target
// L(p, q).
CoverageResult coverage_experiment(const GeneratorConfig& cfg, double gamma, double eta,
                                   const LossSpec& loss, const std::vector<double>& alpha_grid,
                                   GapMode target = GapMode::SimEstimateTarget, int threads = 0);

struct TightnessRow {
  long n = 0;
  double mean_sup_distance = 0.0;
};

struct TightnessResult {
  std::vector<TightnessRow> rows;
  long seeds = 0;
};

// Master sample per scenario treated as the truth; the calibrated curve from
// subsampled estimates is compared against the oracle quantile curve along
// the n sweep.
TightnessResult tightness_experiment(const GeneratorConfig& cfg, const std::vector<long>& n_sweep,
                                     long k, const LossSpec& loss, int threads = 0);

struct BandExperimentRow {
  double tau = 0.0;
  double lower_violation_rate = 0.0;
  double upper_violation_rate = 0.0;
};

struct BandExperimentResult {
  std::vector<BandExperimentRow> rows;
  double replication_lower_violation_rate = 0.0;  // any-tau violation per replication
  double sandwich_ok_rate = 0.0;                  // lo <= hi across the grid
  long replications = 0;
};

BandExperimentResult band_experiment(const GeneratorConfig& cfg, double gamma,
                                     const std::vector<double>& tau_grid, const LossSpec& loss,
                                     int threads = 0);

// Exact W1 between a sorted sample and N(mean, sd) via per-segment
// antiderivatives of the normal quantile function.
double w1_empirical_normal(const std::vector<double>& sorted_samples, double mean, double sd);

double normal_quantile(double p);  // standard normal, refined to double precision

}  // namespace simgap
