#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "simgap/confidence_sets.hpp"

namespace simgap {

enum class GapMethod { ClosedForm, EndpointConvexity, SignPatternDual, CertifiedGrid, TriangleBound };
const char* gap_method_name(GapMethod m) noexcept;

// Per-scenario pseudo-discrepancy. upper over-approximates the sup of the
// loss over the confidence set, lower under-approximates the inf, plug_in is
// the loss at the center. slack is the certified margin; 0 for exact methods.
struct PseudoGap {
  std::string scenario_id;
  double upper = 0.0;
  double lower = 0.0;
  double plug_in = 0.0;
  GapMethod method = GapMethod::ClosedForm;
  double slack = 0.0;
};

// SimEstimateTarget maximizes over the ground-truth set only (target
// L(p, q_hat)); TrueSimTarget also wraps a set around the simulator estimate
// (target L(p, q)) and splits gamma across the two sets.
enum class GapMode { SimEstimateTarget, TrueSimTarget };
const char* gap_mode_name(GapMode m) noexcept;

struct GridOptions {
  double mesh = 1e-4;       // target covering radius of boundary samples
  double slack_cap = 1e-3;  // certified runs refuse to report slack above this
  int d_exact = 12;         // sign-pattern enumeration limit
  std::size_t max_points = 40000000;  // direction budget per stratum
};

double sup_loss_interval(const ConfidenceSet& c, const ParamPoint& q_hat, const LossSpec& loss);
double inf_loss_interval(const ConfidenceSet& c, const ParamPoint& q_hat, const LossSpec& loss);

// Roots of KL(p_hat || u) = r around p_hat, to 1e-12; hits 0/1 exactly when
// the ball reaches the edge of [0,1].
std::pair<double, double> kl_ball_boundary_1d(double p_hat, double r);

// d = 2 KL loss over a KL ball: endpoint maximum (convexity), exact.
std::pair<double, double> sup_inf_kl_loss_bernoulli(const ConfidenceSet& c,
                                                    const ParamPoint& q_hat,
                                                    const LossSpec& loss);

// Exact max of TV over a KL ball by sign-pattern enumeration (subset mass
// aggregation, one 1-d root-find per pattern) for d <= d_exact; certified
// grid fallback above that (returns value + slack, a valid upper bound).
double sup_tv_kl_ball(const ConfidenceSet& c, const ParamPoint& q_hat,
                      const GridOptions& opts = {});

struct CertifiedValue {
  double value = 0.0;  // max over sampled feasible points, <= true sup
  double slack = 0.0;  // value + slack >= true sup
};

// Boundary scan of a KL ball with a certified Lipschitz margin. slack is
// loss_lipschitz * mesh, linear in mesh by construction.
CertifiedValue certified_grid_sup(const ConfidenceSet& c, const ParamPoint& q_hat,
                                  const LossSpec& loss, double mesh,
                                  const GridOptions& opts = {});

PseudoGap pseudo_gap_w1(const ConfidenceSet& c, const ParamPoint& q_hat);

// Exact sup of sum_i coef_i * u_i over {KL(p_hat||u) <= r} in the simplex
// (KKT cases of the one-dimensional tilted dual).
double sup_linear_kl_ball(const std::vector<double>& p_hat, double r,
                          const std::vector<double>& coef);

// Exact value or certified upper bound of sup_{u in C} L(u,q1) - L(u,q2).
double pairwise_sup(const ConfidenceSet& c, const ParamPoint& q1, const ParamPoint& q2,
                    const LossSpec& loss, const GridOptions& opts = {});

struct GapRunResult {
  std::vector<PseudoGap> gaps;  // dataset order
  std::vector<std::string> warnings;
};

GapRunResult compute_pseudo_gaps(const Dataset& d, double gamma, const LossSpec& loss,
                                 GapMode mode, const GridOptions& opts = {}, int threads = 0);

}  // namespace simgap
