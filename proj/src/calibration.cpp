#include "simgap/calibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace simgap {

const char* const kToolVersion = "0.1.0";

QuantileCurve QuantileCurve::from_values(std::vector<double> v) {
  if (v.empty()) raise(Errc::ValidationFailed, "quantile curve needs at least one value");
  std::sort(v.begin(), v.end());
  return QuantileCurve{std::move(v)};
}

double empirical_quantile(const QuantileCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    std::ostringstream os;
    os << "alpha = " << alpha << " outside (0,1]";
    raise(Errc::AlphaOutOfRange, os.str());
  }
  const long m = curve.m();
  const long idx = static_cast<long>(std::ceil(static_cast<double>(m) * alpha));
  const long clamped = std::min(std::max(idx, 1L), m);
  return curve.values[static_cast<std::size_t>(clamped - 1)];
}

double epsilon_correction(double alpha, long m, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) raise(Errc::InvalidEta, "eta outside (0,1)");
  if (!(alpha > 0.0 && alpha < 1.0)) raise(Errc::AlphaOutOfRange, "alpha outside (0,1)");
  const double mm = static_cast<double>(m);
  const double L = std::log(2.0 * mm / eta);
  return std::sqrt(2.0 * alpha * L + (L * L + 4.0 * L) / mm) + (L + 2.0) / std::sqrt(mm) +
         std::sqrt(std::log(4.0 / eta) / 2.0);
}

CoverageBound guaranteed_coverage(const QuantileCurve& curve, double alpha, double eta) {
  CoverageBound out;
  out.threshold = empirical_quantile(curve, 1.0 - alpha / 2.0);
  const double eps = epsilon_correction(alpha, curve.m(), eta);
  out.raw = 1.0 - alpha - eps / std::sqrt(static_cast<double>(curve.m()));
  out.clamped = std::max(out.raw, 0.0);
  out.vacuous = out.raw <= 0.0;
  return out;
}

double calibrated_curve(const QuantileCurve& curve, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) raise(Errc::AlphaOutOfRange, "tau outside [0,1]");
  // tau = 0 maps through the same ceil rule to index ceil(m/2)
  const double alpha = (1.0 + tau) / 2.0;
  const long m = curve.m();
  const long idx =
      std::min(std::max(static_cast<long>(std::ceil(static_cast<double>(m) * alpha)), 1L), m);
  return curve.values[static_cast<std::size_t>(idx - 1)];
}

namespace {

// Integral of tau -> V_cal(tau) over (a, b] as an exact sum over the index
// breakpoints of ceil(m(1+tau)/2).
double step_integral(const QuantileCurve& curve, double a, double b) {
  const long m = curve.m();
  double total = 0.0;
  // index j is active on tau in (2(j-1)/m - 1, 2j/m - 1]
  const long j_first = static_cast<long>(std::ceil(static_cast<double>(m) * (1.0 + a) / 2.0));
  for (long j = std::max(j_first, 1L); j <= m; ++j) {
    const double lo = std::max(a, 2.0 * static_cast<double>(j - 1) / static_cast<double>(m) - 1.0);
    const double hi = std::min(b, 2.0 * static_cast<double>(j) / static_cast<double>(m) - 1.0);
    if (hi > lo) total += curve.values[static_cast<std::size_t>(j - 1)] * (hi - lo);
    if (hi >= b) break;
  }
  return total;
}

}  // namespace

double auc_cal(const QuantileCurve& curve) { return step_integral(curve, 0.0, 1.0); }

double cvar_cal(const QuantileCurve& curve, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) raise(Errc::AlphaOutOfRange, "cvar level outside (0,1)");
  return step_integral(curve, 1.0 - alpha, 1.0) / alpha;
}

bool RegionDescriptor::contains(const ParamPoint& u) const {
  return evaluate_loss(loss, u, q_hat) <= tau;
}

RegionDescriptor new_scenario_set(const QuantileCurve& curve, const ParamPoint& q_hat_new,
                                  double alpha_bar, const LossSpec& loss) {
  if (!(alpha_bar > 0.0 && alpha_bar < 1.0)) {
    raise(Errc::AlphaOutOfRange, "alpha_bar outside (0,1)");
  }
  RegionDescriptor out;
  out.tau = empirical_quantile(curve, 1.0 - alpha_bar / 2.0);
  out.loss = loss;
  out.q_hat = q_hat_new;

  std::ostringstream os;
  switch (loss.kind) {
    case LossKind::SquaredError:
    case LossKind::AbsoluteError: {
      const auto& q = std::get<BoundedScalarPoint>(q_hat_new);
      const double half =
          loss.kind == LossKind::SquaredError ? std::sqrt(std::max(out.tau, 0.0)) : out.tau;
      out.has_interval = true;
      out.interval_lo = std::max(q.lo, q.value - half);
      out.interval_hi = std::min(q.hi, q.value + half);
      os << "{u in [" << q.lo << "," << q.hi << "] : " << loss_name(loss.kind) << "(u, " << q.value
         << ") <= " << out.tau << "} = [" << out.interval_lo << ", " << out.interval_hi << "]";
      break;
    }
    case LossKind::KL:
    case LossKind::TotalVariation: {
      const auto& q = std::get<SimplexPoint>(q_hat_new).probs;
      if (q.size() == 2) {
        out.has_interval = true;
        if (loss.kind == LossKind::TotalVariation) {
          out.interval_lo = std::max(0.0, q[0] - out.tau);
          out.interval_hi = std::min(1.0, q[0] + out.tau);
        } else {
          // boundary of {u : KL(u || q) <= tau}; convex in u with minimum 0 at q
          const double beta = loss.beta_smooth;
          const double z = 1.0 + 2.0 * beta;
          const auto g = [&](double u) {
            return kl_bernoulli((u + beta) / z, (q[0] + beta) / z);
          };
          const auto bisect = [&](double lo, double hi, bool decreasing) {
            if (g(decreasing ? lo : hi) <= out.tau) return decreasing ? lo : hi;
            while (hi - lo > 1e-12) {
              const double mid = 0.5 * (lo + hi);
              const bool above = g(mid) > out.tau;
              if (decreasing == above) {
                lo = mid;
              } else {
                hi = mid;
              }
            }
            return decreasing ? hi : lo;
          };
          out.interval_lo = bisect(0.0, q[0], true);
          out.interval_hi = bisect(q[0], 1.0, false);
        }
        os << "{u : " << loss_name(loss.kind) << "(u || q_hat) <= " << out.tau
           << "}, first coordinate in [" << out.interval_lo << ", " << out.interval_hi << "]";
      } else {
        os << "{u in simplex(d=" << q.size() << ") : " << loss_name(loss.kind)
           << "(u || q_hat) <= " << out.tau << "} (membership predicate)";
      }
      break;
    }
    case LossKind::Wasserstein1: {
      os << "{Q : W1(Q, q_hat) <= " << out.tau << "} (ball descriptor)";
      break;
    }
  }
  out.description = os.str();
  return out;
}

BandPoint band(const QuantileCurve& upper, const QuantileCurve& lower, double gamma, double tau) {
  if (!(gamma > 0.0 && gamma <= 1.0)) raise(Errc::InvalidGamma, "gamma outside (0,1]");
  if (!(tau > 0.0 && tau < 1.0)) raise(Errc::AlphaOutOfRange, "tau outside (0,1)");
  BandPoint out;
  const double lo_level = gamma * tau;
  const long idx = static_cast<long>(std::ceil(static_cast<double>(lower.m()) * lo_level));
  if (idx < 1) {
    out.lo = lower.values.front();
    out.lo_at_minimum = true;
  } else {
    out.lo = empirical_quantile(lower, lo_level);
  }
  out.hi = empirical_quantile(upper, gamma + (1.0 - gamma) * tau);
  return out;
}

std::vector<double> default_alpha_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) grid.push_back(static_cast<double>(i) / 100.0);
  return grid;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_double(std::uint64_t h, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return fnv1a(h, &bits, sizeof(bits));
}

std::uint64_t hash_point(std::uint64_t h, const ParamPoint& p) {
  const int kind = static_cast<int>(point_kind(p));
  h = fnv1a(h, &kind, sizeof(kind));
  if (const auto* s = std::get_if<SimplexPoint>(&p)) {
    for (double v : s->probs) h = hash_double(h, v);
  } else if (const auto* b = std::get_if<BoundedScalarPoint>(&p)) {
    h = hash_double(h, b->value);
    h = hash_double(h, b->lo);
    h = hash_double(h, b->hi);
  } else {
    const auto& e = std::get<Empirical1DPoint>(p);
    for (double v : e.samples) h = hash_double(h, v);
    if (e.sigma) h = hash_double(h, *e.sigma);
  }
  return h;
}

}  // namespace

std::uint64_t dataset_hash(const Dataset& d) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& rec : d.records) {
    h = fnv1a(h, rec.scenario_id.data(), rec.scenario_id.size());
    h = hash_point(h, rec.p_hat);
    h = hash_point(h, rec.q_hat);
    if (rec.q_hat_2) h = hash_point(h, *rec.q_hat_2);
    h = fnv1a(h, &rec.n, sizeof(rec.n));
    h = fnv1a(h, &rec.k, sizeof(rec.k));
  }
  return h;
}

CalibrationReport calibrate(const Dataset& d, const CalibrateParams& params) {
  CalibrationReport report;
  report.params = params;
  if (report.params.alpha_grid.empty()) report.params.alpha_grid = default_alpha_grid();

  GapRunResult run =
      compute_pseudo_gaps(d, params.gamma, params.loss, params.mode, params.grid, params.threads);
  std::vector<double> uppers, lowers;
  uppers.reserve(run.gaps.size());
  lowers.reserve(run.gaps.size());
  for (const auto& g : run.gaps) {
    uppers.push_back(g.upper);
    lowers.push_back(g.lower);
  }
  report.curve = QuantileCurve::from_values(std::move(uppers));
  report.lower_curve = QuantileCurve::from_values(std::move(lowers));
  report.m = report.curve.m();
  report.warnings = std::move(run.warnings);

  for (double alpha : report.params.alpha_grid) {
    const CoverageBound cb = guaranteed_coverage(report.curve, alpha, params.eta);
    report.coverage_table.push_back({alpha, cb.threshold, cb.raw, cb.clamped, cb.vacuous});
  }
  report.auc = auc_cal(report.curve);
  for (double level : report.params.cvar_levels) {
    report.cvar.emplace_back(level, cvar_cal(report.curve, level));
  }
  report.input_hash = dataset_hash(d);
  report.tool_version = kToolVersion;

  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc;
  gmtime_r(&tt, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  report.timestamp = buf;
  return report;
}

}  // namespace simgap
