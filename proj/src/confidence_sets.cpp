#include "simgap/confidence_sets.hpp"

#include <cmath>
#include <sstream>

namespace simgap {

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    std::ostringstream os;
    os << "gamma = " << gamma << " outside (0,1)";
    raise(Errc::InvalidGamma, os.str());
  }
}

}  // namespace

const char* family_name(SetFamily f) noexcept {
  switch (f) {
    case SetFamily::IntervalAbs: return "IntervalAbs";
    case SetFamily::KLBall: return "KLBall";
    case SetFamily::W1Ball: return "W1Ball";
  }
  return "Unknown";
}

double radius_bounded(long n, double gamma, double a, double b) {
  check_gamma(gamma);
  return (b - a) * std::sqrt(std::log(2.0 / gamma) / (2.0 * static_cast<double>(n)));
}

double radius_bernoulli(long n, double gamma) {
  check_gamma(gamma);
  return std::log(2.0 / gamma) / static_cast<double>(n);
}

double radius_multinomial(long n, int d, double gamma) {
  check_gamma(gamma);
  const double dm1 = static_cast<double>(d - 1);
  return dm1 * std::log(2.0 * dm1 / gamma) / static_cast<double>(n);
}

bool multinomial_regime_ok(long n, int d) {
  const double c0 = std::exp(3.0) / (2.0 * M_PI);
  return static_cast<double>(d) <= std::cbrt(static_cast<double>(n) * c0 / 4.0);
}

double radius_w1(long n, double gamma, double sigma) {
  check_gamma(gamma);
  if (!(sigma > 0.0)) raise(Errc::NonpositiveSigma, "w1 radius needs sigma > 0");
  const double nn = static_cast<double>(n);
  return 512.0 * sigma / std::sqrt(nn) +
         sigma * std::sqrt(256.0 * M_E / nn * std::log(1.0 / (1.0 - gamma)));
}

ConfidenceSet build_confidence_set(const ParamPoint& center, long n, double gamma,
                                   std::optional<SetFamily> family_hint,
                                   std::vector<std::string>* warnings) {
  if (auto msg = validate_point(center)) raise(Errc::ValidationFailed, *msg);
  if (n < 1) raise(Errc::ValidationFailed, "confidence set needs n >= 1");

  SetFamily family;
  switch (point_kind(center)) {
    case PointKind::BoundedScalar: family = SetFamily::IntervalAbs; break;
    case PointKind::Simplex: family = SetFamily::KLBall; break;
    case PointKind::Empirical1D: family = SetFamily::W1Ball; break;
    default: raise(Errc::ValidationFailed, "unknown point kind");
  }
  if (family_hint && *family_hint != family) {
    raise(Errc::IncompatibleHint, std::string(family_name(*family_hint)) +
                                      " hint incompatible with " +
                                      point_kind_name(point_kind(center)) + " center");
  }

  ConfidenceSet out;
  out.family = family;
  out.center = center;
  out.gamma = gamma;
  out.n = n;
  switch (family) {
    case SetFamily::IntervalAbs: {
      const auto& b = std::get<BoundedScalarPoint>(center);
      out.radius = radius_bounded(n, gamma, b.lo, b.hi);
      break;
    }
    case SetFamily::KLBall: {
      const int d = static_cast<int>(std::get<SimplexPoint>(center).probs.size());
      out.radius = radius_multinomial(n, d, gamma);  // reduces to Bernoulli at d = 2
      if (!multinomial_regime_ok(n, d) && warnings) {
        std::ostringstream os;
        os << "multinomial tail-bound regime violated: d = " << d << " exceeds (n*C0/4)^(1/3) at n = "
           << n << "; the set stays valid but may be loose";
        warnings->push_back(os.str());
      }
      break;
    }
    case SetFamily::W1Ball: {
      const auto& e = std::get<Empirical1DPoint>(center);
      if (!e.sigma) raise(Errc::NonpositiveSigma, "w1 confidence set needs a sub-Gaussian sigma");
      out.radius = radius_w1(n, gamma, *e.sigma);
      break;
    }
  }
  return out;
}

ConfidenceSet build_confidence_set(const ScenarioRecord& rec, double gamma,
                                   std::optional<SetFamily> family_hint,
                                   std::vector<std::string>* warnings) {
  return build_confidence_set(rec.p_hat, rec.n, gamma, family_hint, warnings);
}

std::pair<double, double> split_gamma_joint(double gamma_joint) {
  if (!(gamma_joint > 0.0 && gamma_joint <= 1.0)) {
    raise(Errc::InvalidGamma, "joint gamma outside (0,1]");
  }
  const double g = std::sqrt(gamma_joint);
  return {g, g};
}

bool set_contains(const ConfidenceSet& c, const ParamPoint& p) {
  if (point_kind(p) != point_kind(c.center)) return false;
  switch (c.family) {
    case SetFamily::IntervalAbs: {
      const auto& ctr = std::get<BoundedScalarPoint>(c.center);
      const auto& x = std::get<BoundedScalarPoint>(p);
      return std::abs(x.value - ctr.value) <= c.radius && x.value >= ctr.lo && x.value <= ctr.hi;
    }
    case SetFamily::KLBall: {
      const auto& ctr = std::get<SimplexPoint>(c.center).probs;
      const auto& x = std::get<SimplexPoint>(p).probs;
      if (x.size() != ctr.size()) return false;
      double kl = 0.0;
      for (std::size_t i = 0; i < ctr.size(); ++i) {
        if (ctr[i] == 0.0) continue;
        if (x[i] == 0.0) return false;
        kl += ctr[i] * std::log(ctr[i] / x[i]);
      }
      return kl <= c.radius;
    }
    case SetFamily::W1Ball: {
      const auto& ctr = std::get<Empirical1DPoint>(c.center).samples;
      const auto& x = std::get<Empirical1DPoint>(p).samples;
      return wasserstein1_sorted(ctr, x) <= c.radius;
    }
  }
  return false;
}

}  // namespace simgap
