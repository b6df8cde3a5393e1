#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "simgap/discrepancy.hpp"

namespace simgap {

struct QuantileCurve {
  std::vector<double> values;  // nondecreasing
  long m() const { return static_cast<long>(values.size()); }
  static QuantileCurve from_values(std::vector<double> v);
};

// Order-statistic quantile: the ceil(m*alpha)-th smallest value, alpha in (0,1].
double empirical_quantile(const QuantileCurve& curve, double alpha);

// Finite-sample remainder of the coverage guarantee.
double epsilon_correction(double alpha, long m, double eta);

struct CoverageBound {
  double threshold = 0.0;  // V_hat(1 - alpha/2)
  double raw = 0.0;        // 1 - alpha - eps(alpha,m,eta)/sqrt(m), may be negative
  double clamped = 0.0;
  bool vacuous = false;  // raw <= 0 at this m
};
CoverageBound guaranteed_coverage(const QuantileCurve& curve, double alpha, double eta);

// Index-adjusted curve V_hat((1+tau)/2).
double calibrated_curve(const QuantileCurve& curve, double tau);

// Exact step integrals of the index-adjusted curve; no quadrature.
double auc_cal(const QuantileCurve& curve);
double cvar_cal(const QuantileCurve& curve, double alpha);

// Confidence region for a new scenario's true parameter given its simulator
// estimate: {u : L(u, q_hat) <= tau}.
struct RegionDescriptor {
  double tau = 0.0;
  LossSpec loss;
  ParamPoint q_hat;
  bool has_interval = false;  // closed-form section for scalar and d=2 cases
  double interval_lo = 0.0;
  double interval_hi = 0.0;
  std::string description;

  bool contains(const ParamPoint& u) const;
};
RegionDescriptor new_scenario_set(const QuantileCurve& curve, const ParamPoint& q_hat_new,
                                  double alpha_bar, const LossSpec& loss);

struct BandPoint {
  double lo = 0.0;
  double hi = 0.0;  // carries an o_m(1) term; conservative near tau in {0,1}
  bool lo_at_minimum = false;
};
BandPoint band(const QuantileCurve& upper, const QuantileCurve& lower, double gamma, double tau);

struct AlphaRow {
  double alpha = 0.0;
  double threshold = 0.0;
  double raw = 0.0;
  double clamped = 0.0;
  bool vacuous = false;
};

struct CalibrateParams {
  double gamma = 0.5;
  double eta = 0.05;
  LossSpec loss;
  GapMode mode = GapMode::SimEstimateTarget;
  std::vector<double> alpha_grid;  // empty -> centesimal default
  std::vector<double> cvar_levels = {0.05, 0.10, 0.25};
  GridOptions grid;
  int threads = 0;
};

struct CalibrationReport {
  QuantileCurve curve;        // upper pseudo-discrepancies
  QuantileCurve lower_curve;  // lower pseudo-discrepancies
  long m = 0;
  CalibrateParams params;
  std::vector<AlphaRow> coverage_table;
  double auc = 0.0;
  std::vector<std::pair<double, double>> cvar;  // (alpha, value)
  std::vector<std::string> warnings;
  std::uint64_t input_hash = 0;
  std::string tool_version;
  std::string timestamp;
};

CalibrationReport calibrate(const Dataset& d, const CalibrateParams& params);

std::vector<double> default_alpha_grid();  // 0.01 .. 0.99
std::uint64_t dataset_hash(const Dataset& d);

extern const char* const kToolVersion;

}  // namespace simgap
