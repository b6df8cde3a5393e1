#include "simgap/domain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <sstream>

namespace simgap {

namespace {

constexpr double kSimplexSumTol = 1e-12;

double xlogx_over(double x, double y) {
  // x * log(x / y) with the 0*log(0/.) = 0 convention
  if (x == 0.0) return 0.0;
  if (y == 0.0) return std::numeric_limits<double>::infinity();
  return x * std::log(x / y);
}

std::string describe_point(const ParamPoint& p) {
  return point_kind_name(point_kind(p));
}

}  // namespace

PointKind point_kind(const ParamPoint& p) {
  return static_cast<PointKind>(p.index());
}

const char* point_kind_name(PointKind k) noexcept {
  switch (k) {
    case PointKind::Simplex: return "Simplex";
    case PointKind::BoundedScalar: return "BoundedScalar";
    case PointKind::Empirical1D: return "Empirical1D";
  }
  return "Unknown";
}

ParamPoint make_simplex(std::vector<double> probs) {
  ParamPoint p = SimplexPoint{std::move(probs)};
  if (auto msg = validate_point(p)) raise(Errc::ValidationFailed, *msg);
  return p;
}

ParamPoint make_bounded(double value, double lo, double hi) {
  ParamPoint p = BoundedScalarPoint{value, lo, hi};
  if (auto msg = validate_point(p)) raise(Errc::ValidationFailed, *msg);
  return p;
}

ParamPoint make_empirical(std::vector<double> samples, std::optional<double> sigma) {
  ParamPoint p = Empirical1DPoint{std::move(samples), sigma};
  if (auto msg = validate_point(p)) raise(Errc::ValidationFailed, *msg);
  return p;
}

std::optional<std::string> validate_point(const ParamPoint& p) {
  if (const auto* s = std::get_if<SimplexPoint>(&p)) {
    if (s->probs.size() < 2) return "simplex needs d >= 2";
    double sum = 0.0;
    for (double v : s->probs) {
      if (!(v >= 0.0 && v <= 1.0)) return "simplex entry outside [0,1]";
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexSumTol) {
      std::ostringstream os;
      os << "simplex entries sum to " << sum << ", not 1";
      return os.str();
    }
    return std::nullopt;
  }
  if (const auto* b = std::get_if<BoundedScalarPoint>(&p)) {
    if (!(b->lo < b->hi)) return "bounded domain needs lo < hi";
    if (!(b->value >= b->lo && b->value <= b->hi)) return "bounded value outside its domain";
    return std::nullopt;
  }
  const auto& e = std::get<Empirical1DPoint>(p);
  if (e.samples.empty()) return "empirical distribution needs at least one sample";
  if (!std::is_sorted(e.samples.begin(), e.samples.end())) return "empirical samples not sorted";
  for (double v : e.samples) {
    if (!std::isfinite(v)) return "empirical sample not finite";
  }
  if (e.sigma && !(*e.sigma > 0.0)) return "sigma must be positive when present";
  return std::nullopt;
}

const char* loss_name(LossKind k) noexcept {
  switch (k) {
    case LossKind::SquaredError: return "squared";
    case LossKind::AbsoluteError: return "absolute";
    case LossKind::KL: return "kl";
    case LossKind::TotalVariation: return "tv";
    case LossKind::Wasserstein1: return "w1";
  }
  return "unknown";
}

std::optional<LossKind> loss_from_name(const std::string& name) {
  if (name == "squared") return LossKind::SquaredError;
  if (name == "absolute") return LossKind::AbsoluteError;
  if (name == "kl") return LossKind::KL;
  if (name == "tv") return LossKind::TotalVariation;
  if (name == "w1") return LossKind::Wasserstein1;
  return std::nullopt;
}

bool loss_compatible(LossKind loss, PointKind kind) {
  switch (loss) {
    case LossKind::SquaredError:
    case LossKind::AbsoluteError:
      return kind == PointKind::BoundedScalar;
    case LossKind::KL:
    case LossKind::TotalVariation:
      return kind == PointKind::Simplex;
    case LossKind::Wasserstein1:
      return kind == PointKind::Empirical1D;
  }
  return false;
}

double kl_bernoulli(double p, double q) {
  return xlogx_over(p, q) + xlogx_over(1.0 - p, 1.0 - q);
}

double wasserstein1_sorted(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  const std::size_t m = y.size();
  // sweep the merged quantile breakpoints in units of 1/(n*m); exact
  std::uint64_t pos = 0;
  const std::uint64_t denom = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(m);
  std::size_t i = 0, j = 0;
  double total = 0.0;
  while (i < n && j < m) {
    const std::uint64_t next_i = static_cast<std::uint64_t>(i + 1) * m;
    const std::uint64_t next_j = static_cast<std::uint64_t>(j + 1) * n;
    const std::uint64_t next = std::min(next_i, next_j);
    total += static_cast<double>(next - pos) * std::abs(x[i] - y[j]);
    pos = next;
    if (next == next_i) ++i;
    if (next == next_j) ++j;
  }
  return total / static_cast<double>(denom);
}

namespace {

double kl_simplex(const std::vector<double>& u, const std::vector<double>& v, double beta) {
  const std::size_t d = u.size();
  double out = 0.0;
  if (beta > 0.0) {
    const double z = 1.0 + static_cast<double>(d) * beta;
    for (std::size_t i = 0; i < d; ++i) {
      out += xlogx_over((u[i] + beta) / z, (v[i] + beta) / z);
    }
    return out;
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (v[i] == 0.0 && u[i] > 0.0) {
      raise(Errc::KLUndefined,
            "KL(u||v) with v_i = 0, u_i > 0 and beta_smooth = 0 in coordinate " +
                std::to_string(i));
    }
    out += xlogx_over(u[i], v[i]);
  }
  return out;
}

}  // namespace

double loss_on_simplex(const LossSpec& loss, const std::vector<double>& u,
                       const std::vector<double>& v) {
  if (loss.kind == LossKind::KL) return std::max(0.0, kl_simplex(u, v, loss.beta_smooth));
  if (loss.kind == LossKind::TotalVariation) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) l1 += std::abs(u[i] - v[i]);
    return 0.5 * l1;
  }
  raise(Errc::IncompatibleVariant,
        std::string(loss_name(loss.kind)) + " loss does not apply to simplex vectors");
}

double evaluate_loss(const LossSpec& loss, const ParamPoint& u, const ParamPoint& v) {
  if (point_kind(u) != point_kind(v)) {
    raise(Errc::IncompatibleVariant,
          std::string("loss arguments mix ") + describe_point(u) + " and " + describe_point(v));
  }
  if (!loss_compatible(loss.kind, point_kind(u))) {
    raise(Errc::IncompatibleVariant, std::string(loss_name(loss.kind)) +
                                         " loss does not apply to " + describe_point(u) +
                                         " points");
  }
  switch (loss.kind) {
    case LossKind::SquaredError:
    case LossKind::AbsoluteError: {
      const auto& a = std::get<BoundedScalarPoint>(u);
      const auto& b = std::get<BoundedScalarPoint>(v);
      if (a.lo != b.lo || a.hi != b.hi) {
        raise(Errc::IncompatibleVariant, "bounded points with different domains");
      }
      const double diff = a.value - b.value;
      return loss.kind == LossKind::SquaredError ? diff * diff : std::abs(diff);
    }
    case LossKind::KL:
    case LossKind::TotalVariation: {
      const auto& a = std::get<SimplexPoint>(u).probs;
      const auto& b = std::get<SimplexPoint>(v).probs;
      if (a.size() != b.size()) {
        raise(Errc::IncompatibleVariant, "simplex points with different dimensions");
      }
      if (loss.kind == LossKind::KL) return std::max(0.0, kl_simplex(a, b, loss.beta_smooth));
      double l1 = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) l1 += std::abs(a[i] - b[i]);
      return 0.5 * l1;
    }
    case LossKind::Wasserstein1: {
      const auto& a = std::get<Empirical1DPoint>(u).samples;
      const auto& b = std::get<Empirical1DPoint>(v).samples;
      return wasserstein1_sorted(a, b);
    }
  }
  raise(Errc::IncompatibleVariant, "unknown loss");
}

std::vector<Finding> validate_dataset(const Dataset& d) {
  std::vector<Finding> findings;
  const std::size_t dataset_level = d.records.size();
  if (d.records.empty()) {
    findings.push_back({dataset_level, "", "dataset has no records"});
    return findings;
  }

  std::set<std::string> seen;
  const PointKind kind = point_kind(d.records.front().p_hat);
  const long k0 = d.records.front().k;

  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& rec = d.records[i];
    auto add = [&](const std::string& msg) { findings.push_back({i, rec.scenario_id, msg}); };

    if (!seen.insert(rec.scenario_id).second) {
      add("duplicate scenario_id '" + rec.scenario_id + "'");
    }
    if (rec.n < 1) add("n must be >= 1");
    if (rec.k < 1) add("k must be >= 1");
    if (auto msg = validate_point(rec.p_hat)) add("p_hat: " + *msg);
    if (auto msg = validate_point(rec.q_hat)) add("q_hat: " + *msg);
    if (rec.q_hat_2) {
      if (auto msg = validate_point(*rec.q_hat_2)) add("q_hat_2: " + *msg);
    }

    if (point_kind(rec.p_hat) != kind) {
      add(std::string("record variant ") + point_kind_name(point_kind(rec.p_hat)) +
          " differs from dataset variant " + point_kind_name(kind));
    }
    auto same_shape = [&](const ParamPoint& other, const char* label) {
      if (point_kind(other) != point_kind(rec.p_hat)) {
        add(std::string(label) + " variant differs from p_hat");
        return;
      }
      if (const auto* sp = std::get_if<SimplexPoint>(&rec.p_hat)) {
        if (std::get<SimplexPoint>(other).probs.size() != sp->probs.size()) {
          add(std::string(label) + " dimension differs from p_hat");
        }
      } else if (const auto* bp = std::get_if<BoundedScalarPoint>(&rec.p_hat)) {
        const auto& ob = std::get<BoundedScalarPoint>(other);
        if (ob.lo != bp->lo || ob.hi != bp->hi) {
          add(std::string(label) + " domain differs from p_hat");
        }
      }
    };
    same_shape(rec.q_hat, "q_hat");
    if (rec.q_hat_2) same_shape(*rec.q_hat_2, "q_hat_2");

    if (d.k_uniform && rec.k != k0) {
      add("k_uniform set but k differs from first record");
    }
  }
  return findings;
}

}  // namespace simgap
