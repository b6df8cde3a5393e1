#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "simgap/errors.hpp"

namespace simgap {

// A point in the parameter space: category probabilities, a bounded mean,
// or a one-dimensional empirical distribution.
struct SimplexPoint {
  std::vector<double> probs;
  bool operator==(const SimplexPoint&) const = default;
};

struct BoundedScalarPoint {
  double value = 0.0;
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const BoundedScalarPoint&) const = default;
};

struct Empirical1DPoint {
  std::vector<double> samples;  // nondecreasing
  std::optional<double> sigma;  // sub-Gaussian parameter when known
  bool operator==(const Empirical1DPoint&) const = default;
};

using ParamPoint = std::variant<SimplexPoint, BoundedScalarPoint, Empirical1DPoint>;

enum class PointKind { Simplex, BoundedScalar, Empirical1D };

PointKind point_kind(const ParamPoint& p);
const char* point_kind_name(PointKind k) noexcept;

// Validating factories; operations assume their inputs went through these
// (or were cleared by validate_point).
ParamPoint make_simplex(std::vector<double> probs);
ParamPoint make_bounded(double value, double lo, double hi);
ParamPoint make_empirical(std::vector<double> samples, std::optional<double> sigma = {});

std::optional<std::string> validate_point(const ParamPoint& p);

enum class LossKind { SquaredError, AbsoluteError, KL, TotalVariation, Wasserstein1 };

struct LossSpec {
  LossKind kind = LossKind::SquaredError;
  // KL only. With beta_smooth > 0 both arguments are mapped through
  // x -> (x + beta) / (1 + d*beta) before evaluation; 0 keeps the strict
  // convention 0*log(0/.) = 0 and zero simulator cells are an error.
  double beta_smooth = 0.0;
  bool operator==(const LossSpec&) const = default;
};

const char* loss_name(LossKind k) noexcept;
std::optional<LossKind> loss_from_name(const std::string& name);
bool loss_compatible(LossKind loss, PointKind kind);

struct ScenarioRecord {
  std::string scenario_id;
  ParamPoint p_hat;
  long n = 1;  // ground-truth sample count behind p_hat
  ParamPoint q_hat;
  std::optional<ParamPoint> q_hat_2;  // second simulator (pairwise runs)
  long k = 1;                         // simulator budget behind q_hat
  bool operator==(const ScenarioRecord&) const = default;
};

struct Dataset {
  // Record order is meaningful: downstream sorts break ties by input order.
  std::vector<ScenarioRecord> records;
  bool k_uniform = false;
  bool operator==(const Dataset&) const = default;
};

struct Finding {
  std::size_t record_index = 0;  // == records.size() for dataset-level findings
  std::string scenario_id;
  std::string message;
};

double evaluate_loss(const LossSpec& loss, const ParamPoint& u, const ParamPoint& v);

// Empty result iff every Dataset/ScenarioRecord invariant holds.
std::vector<Finding> validate_dataset(const Dataset& d);

// Exact W1 between sorted equal-weight samples via the piecewise-constant
// quantile functions; handles unequal sizes.
double wasserstein1_sorted(const std::vector<double>& x, const std::vector<double>& y);

// KL(Ber(p) || Ber(q)) with the 0*log 0 = 0 convention; +inf where undefined.
double kl_bernoulli(double p, double q);

// Fast path shared with the optimizers: KL/TV between raw simplex vectors
// without ParamPoint wrapping. Same conventions as evaluate_loss.
double loss_on_simplex(const LossSpec& loss, const std::vector<double>& u,
                       const std::vector<double>& v);

}  // namespace simgap
