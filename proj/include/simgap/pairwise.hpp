#pragma once

#include "simgap/calibration.hpp"

namespace simgap {

struct DominanceRow {
  double alpha = 0.0;
  double threshold = 0.0;         // U_hat(1 - alpha/2)
  double raw_fraction = 0.0;      // 1 - alpha - eps/sqrt(m), may be negative
  double certified_fraction = 0;  // clamped to [0,1]
  bool certified = false;         // threshold <= 0 ("at least as good")
  bool tie = false;               // threshold exactly 0
};

struct PairwiseParams {
  double gamma = 0.5;
  double eta = 0.05;
  LossSpec loss;
  std::vector<double> alpha_grid;  // empty -> centesimal default
  GridOptions grid;
  int threads = 0;
};

struct PairwiseReport {
  QuantileCurve u_curve;               // pseudo performance discrepancies; can be negative
  std::vector<double> plug_in_deltas;  // L(p_hat,q1) - L(p_hat,q2) in dataset order
  long m = 0;
  PairwiseParams params;
  std::vector<DominanceRow> table;
  std::vector<std::string> warnings;
  std::uint64_t input_hash = 0;
  std::string tool_version;
  std::string timestamp;
};

// Pseudo performance discrepancies per scenario, their quantile curve, and
// per-alpha dominance certificates for simulator 1 vs simulator 2.
PairwiseReport compute_pairwise(const Dataset& d, const PairwiseParams& params);

}  // namespace simgap
