#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "simgap/domain.hpp"

namespace simgap {

enum class SetFamily { IntervalAbs, KLBall, W1Ball };

const char* family_name(SetFamily f) noexcept;

// Region around an estimate with coverage >= gamma at sample size n.
// KLBall membership means KL(center || u) <= radius (center first).
struct ConfidenceSet {
  SetFamily family = SetFamily::IntervalAbs;
  ParamPoint center;
  double radius = 0.0;  // outcome units for IntervalAbs/W1Ball, nats for KLBall
  double gamma = 0.5;
  long n = 1;
};

double radius_bounded(long n, double gamma, double a, double b);
double radius_bernoulli(long n, double gamma);
double radius_multinomial(long n, int d, double gamma);
double radius_w1(long n, double gamma, double sigma);

// Regime of the multinomial tail bound: d <= (n*C0/4)^(1/3), C0 = e^3/(2*pi).
// Violations warn and proceed; the set stays valid, only possibly loose.
bool multinomial_regime_ok(long n, int d);

ConfidenceSet build_confidence_set(const ParamPoint& center, long n, double gamma,
                                   std::optional<SetFamily> family_hint = {},
                                   std::vector<std::string>* warnings = nullptr);
ConfidenceSet build_confidence_set(const ScenarioRecord& rec, double gamma,
                                   std::optional<SetFamily> family_hint = {},
                                   std::vector<std::string>* warnings = nullptr);

// (sqrt(g), sqrt(g)) so the product recovers g; used when both the ground
// truth and the simulator estimate get their own set.
std::pair<double, double> split_gamma_joint(double gamma_joint);

bool set_contains(const ConfidenceSet& c, const ParamPoint& p);

}  // namespace simgap
