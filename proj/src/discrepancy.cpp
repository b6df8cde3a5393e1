#include "simgap/discrepancy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace simgap {

namespace {

constexpr double kRadiusFloor = 1e-15;  // below this a set is treated as its center
constexpr double kRootTol = 1e-12;

struct Interval {
  double lo, hi;
};

Interval clipped_interval(const ConfidenceSet& c) {
  const auto& ctr = std::get<BoundedScalarPoint>(c.center);
  Interval out{std::max(ctr.lo, ctr.value - c.radius), std::min(ctr.hi, ctr.value + c.radius)};
  if (!(out.lo <= out.hi)) raise(Errc::EmptyInterval, "clipped interval is empty");
  return out;
}

double scalar_loss(const LossSpec& loss, double u, double q) {
  const double diff = u - q;
  return loss.kind == LossKind::SquaredError ? diff * diff : std::abs(diff);
}

void require_scalar_loss(const LossSpec& loss) {
  if (loss.kind != LossKind::SquaredError && loss.kind != LossKind::AbsoluteError) {
    raise(Errc::IncompatibleVariant,
          std::string(loss_name(loss.kind)) + " loss does not apply to interval sets");
  }
}

const std::vector<double>& simplex_of(const ParamPoint& p) {
  return std::get<SimplexPoint>(p).probs;
}

double subset_mass(const std::vector<double>& v, unsigned mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask & (1u << i)) s += v[i];
  }
  return s;
}

double pinsker_tv_radius(double r) { return std::sqrt(std::max(r, 0.0) / 2.0); }

}  // namespace

const char* gap_method_name(GapMethod m) noexcept {
  switch (m) {
    case GapMethod::ClosedForm: return "ClosedForm";
    case GapMethod::EndpointConvexity: return "EndpointConvexity";
    case GapMethod::SignPatternDual: return "SignPatternDual";
    case GapMethod::CertifiedGrid: return "CertifiedGrid";
    case GapMethod::TriangleBound: return "TriangleBound";
  }
  return "Unknown";
}

const char* gap_mode_name(GapMode m) noexcept {
  switch (m) {
    case GapMode::SimEstimateTarget: return "sim-estimate";
    case GapMode::TrueSimTarget: return "true-sim";
  }
  return "unknown";
}

double sup_loss_interval(const ConfidenceSet& c, const ParamPoint& q_hat, const LossSpec& loss) {
  require_scalar_loss(loss);
  const Interval iv = clipped_interval(c);
  const double q = std::get<BoundedScalarPoint>(q_hat).value;
  // loss convex in u, max sits at an endpoint
  return std::max(scalar_loss(loss, iv.lo, q), scalar_loss(loss, iv.hi, q));
}

double inf_loss_interval(const ConfidenceSet& c, const ParamPoint& q_hat, const LossSpec& loss) {
  require_scalar_loss(loss);
  const Interval iv = clipped_interval(c);
  const double q = std::get<BoundedScalarPoint>(q_hat).value;
  if (q >= iv.lo && q <= iv.hi) return 0.0;
  return std::min(scalar_loss(loss, iv.lo, q), scalar_loss(loss, iv.hi, q));
}

std::pair<double, double> kl_ball_boundary_1d(double p_hat, double r) {
  assert(p_hat >= 0.0 && p_hat <= 1.0 && r >= 0.0);
  if (r <= 0.0) return {p_hat, p_hat};
  // the edges have closed forms: KL(0||u) = -log(1-u), KL(1||u) = -log(u)
  if (p_hat == 0.0) return {0.0, 1.0 - std::exp(-r)};
  if (p_hat == 1.0) return {std::exp(-r), 1.0};

  const auto bisect = [&](double lo, double hi, bool decreasing) {
    while (hi - lo > kRootTol) {
      const double mid = 0.5 * (lo + hi);
      const bool above = kl_bernoulli(p_hat, mid) > r;
      if (decreasing == above) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return decreasing ? hi : lo;  // the side inside the ball
  };
  return {bisect(0.0, p_hat, true), bisect(p_hat, 1.0, false)};
}

std::pair<double, double> sup_inf_kl_loss_bernoulli(const ConfidenceSet& c,
                                                    const ParamPoint& q_hat,
                                                    const LossSpec& loss) {
  const auto& ctr = simplex_of(c.center);
  const auto& q = simplex_of(q_hat);
  if (ctr.size() != 2 || q.size() != 2) {
    raise(Errc::IncompatibleVariant, "bernoulli endpoint method needs d = 2");
  }
  const auto [u_lo, u_hi] = kl_ball_boundary_1d(ctr[0], c.radius);
  const auto f = [&](double u) { return loss_on_simplex(loss, {u, 1.0 - u}, q); };
  const double upper = std::max(f(u_lo), f(u_hi));
  const double lower = (q[0] >= u_lo && q[0] <= u_hi) ? 0.0 : std::min(f(u_lo), f(u_hi));
  return {upper, lower};
}

// ---------------------------------------------------------------------------
// boundary sampling of KL balls
// ---------------------------------------------------------------------------

namespace {

struct BallGeometry {
  std::vector<double> coord_lo;  // per-coordinate minimum over the ball
  std::vector<double> coord_hi;
  double grad_bound = 0.0;  // sup of ||grad KL(p||.)||_2 near the ball
  double circum = 0.0;      // l2 radius bound around the center
  int zero_count = 0;
};

BallGeometry ball_geometry(const std::vector<double>& p, double r) {
  BallGeometry g;
  const std::size_t d = p.size();
  g.coord_lo.resize(d);
  g.coord_hi.resize(d);
  double grad_sq = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const auto roots = kl_ball_boundary_1d(p[i], r);
    g.coord_lo[i] = roots.first;
    g.coord_hi[i] = roots.second;
    if (p[i] > 0.0) {
      // per-coordinate floor over the ball; the ball is convex, so
      // Lipschitz constants taken on the ball cover any segment inside it
      grad_sq += (p[i] / g.coord_lo[i]) * (p[i] / g.coord_lo[i]);
    } else {
      ++g.zero_count;
    }
  }
  g.grad_bound = std::sqrt(grad_sq);
  g.circum = std::min(std::sqrt(2.0), std::sqrt(2.0 * r));  // Pinsker
  return g;
}

// Direction spacing that certifies a boundary covering radius <= mesh: the
// radial map of the ball is 2 R^2 L_g / r Lipschitz in the direction (for
// steps small enough that L_g R step <= r/2), directions themselves move
// points by at most R per unit, and each zero-coordinate face level hands
// off with a factor-2 projection.
double direction_step_for(const BallGeometry& geo, double r, double mesh) {
  const double per_level =
      geo.circum + 2.0 * geo.circum * geo.circum * geo.grad_bound / r;
  const double k_total = per_level * (1.0 + 2.0 * static_cast<double>(geo.zero_count));
  double step = mesh / std::max(k_total, 1e-12);
  if (geo.grad_bound > 0.0) {
    step = std::min(step, 0.5 * r / (geo.grad_bound * geo.circum));
  }
  return step;
}

// Lipschitz bound of the loss in its first argument over the ball; +inf when
// the gradient is unbounded there.
double loss_lipschitz_on_ball(const LossSpec& loss, const std::vector<double>& q,
                              const BallGeometry& geo) {
  const std::size_t d = q.size();
  if (loss.kind == LossKind::TotalVariation) return 0.5 * std::sqrt(static_cast<double>(d));
  if (loss.kind != LossKind::KL) {
    raise(Errc::IncompatibleVariant, "certified grid supports KL and TV losses");
  }
  const double beta = loss.beta_smooth;
  const double z = 1.0 + static_cast<double>(d) * beta;
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double qi = (q[i] + beta) / z;
    if (qi <= 0.0) return std::numeric_limits<double>::infinity();
    const double ulo = (geo.coord_lo[i] + beta) / z;
    const double uhi = (geo.coord_hi[i] + beta) / z;
    if (ulo <= 0.0) return std::numeric_limits<double>::infinity();
    const double worst =
        std::max(std::abs(std::log(ulo / qi)), std::abs(std::log(uhi / qi))) + 1.0;
    acc += worst * worst / (z * z);
  }
  return std::sqrt(acc);
}

// Orthonormal basis of {v : sum over active coords = 0}, embedded in R^d.
std::vector<std::vector<double>> tangent_basis(const std::vector<std::size_t>& active,
                                               std::size_t d) {
  const std::size_t m = active.size();
  std::vector<std::vector<double>> basis;
  basis.reserve(m - 1);
  for (std::size_t k = 1; k < m; ++k) {
    std::vector<double> b(d, 0.0);
    const double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (std::size_t j = 0; j < k; ++j) b[active[j]] = norm;
    b[active[k]] = -static_cast<double>(k) * norm;
    basis.push_back(std::move(b));
  }
  return basis;
}

using PointVisitor = std::function<void(const std::vector<double>&)>;

// Visits feasible points whose union covers every extreme point of
// {KL(p||.) <= r} in the simplex within the covering radius implied by
// dir_step: radial boundary samples per stratum, exact 1-d strata, vertices.
// Zero-mass coordinates of p spawn face strata, visited once each.
class BoundaryScan {
 public:
  BoundaryScan(const std::vector<double>& p, double r, double dir_step, std::size_t max_points)
      : p_(p), r_(r), step_(dir_step), max_points_(max_points) {}

  void run(const PointVisitor& visit) {
    visit_ = &visit;
    (*visit_)(p_);
    std::vector<std::size_t> active(p_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) active[i] = i;
    visit_stratum(active);
  }

 private:
  void visit_stratum(const std::vector<std::size_t>& active) {
    if (!seen_.insert(active).second) return;
    if (active.size() == 1) {
      // lone vertex; feasible because every dropped coordinate carried no mass
      std::vector<double> u(p_.size(), 0.0);
      u[active[0]] = 1.0;
      (*visit_)(u);
      return;
    }
    if (active.size() == 2) {
      const std::size_t a = active[0], b = active[1];
      const auto roots = kl_ball_boundary_1d(p_[a], r_);  // p restricted sums to 1
      for (double w : {roots.first, roots.second}) {
        std::vector<double> u(p_.size(), 0.0);
        u[a] = w;
        u[b] = 1.0 - w;
        (*visit_)(u);
      }
      return;
    }
    scan_sphere(active);
    for (std::size_t idx = 0; idx < active.size(); ++idx) {
      if (p_[active[idx]] == 0.0) {
        std::vector<std::size_t> sub = active;
        sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(idx));
        visit_stratum(sub);
      }
    }
  }

  void scan_sphere(const std::vector<std::size_t>& active) {
    const auto basis = tangent_basis(active, p_.size());
    const std::size_t k = basis.size();
    std::vector<double> dir(p_.size(), 0.0);
    if (k == 2) {
      const auto wanted = static_cast<std::size_t>(std::ceil(2.0 * M_PI / step_));
      const std::size_t n_dirs = std::max<std::size_t>(8, wanted);
      if (n_dirs > max_points_) {
        raise(Errc::MeshTooCoarse,
              "direction budget exhausted; coarsen the mesh or raise the slack cap");
      }
      for (std::size_t i = 0; i < n_dirs; ++i) {
        const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n_dirs);
        for (std::size_t c = 0; c < dir.size(); ++c) {
          dir[c] = std::cos(th) * basis[0][c] + std::sin(th) * basis[1][c];
        }
        sample_ray(active, dir);
      }
      return;
    }
    // product-angle grid on S^(k-1); per-angle spacing keeps the chordal
    // covering radius at or below step_
    const double per_angle = 2.0 * step_ / static_cast<double>(k - 1);
    std::vector<std::size_t> counts(k - 1);
    double total = 1.0;
    for (std::size_t a = 0; a + 1 < k; ++a) {
      const double span = (a + 2 == k) ? 2.0 * M_PI : M_PI;
      counts[a] = std::max<std::size_t>(4, static_cast<std::size_t>(std::ceil(span / per_angle)));
      total *= static_cast<double>(counts[a]);
      if (total > static_cast<double>(max_points_)) {
        raise(Errc::MeshTooCoarse,
              "direction budget exhausted; coarsen the mesh or raise the slack cap");
      }
    }
    std::vector<std::size_t> idx(k - 1, 0);
    std::vector<double> angles(k - 1, 0.0);
    for (;;) {
      for (std::size_t a = 0; a + 1 < k; ++a) {
        const double span = (a + 2 == k) ? 2.0 * M_PI : M_PI;
        angles[a] = span * (static_cast<double>(idx[a]) + 0.5) / static_cast<double>(counts[a]);
      }
      double sin_prod = 1.0;
      for (auto& c : dir) c = 0.0;
      for (std::size_t a = 0; a < k; ++a) {
        const double comp = (a + 1 < k) ? sin_prod * std::cos(angles[a]) : sin_prod;
        for (std::size_t c = 0; c < dir.size(); ++c) dir[c] += comp * basis[a][c];
        if (a + 1 < k) sin_prod *= std::sin(angles[a]);
      }
      sample_ray(active, dir);
      std::size_t a = 0;
      for (; a + 1 < k; ++a) {
        if (++idx[a] < counts[a]) break;
        idx[a] = 0;
      }
      if (a + 1 >= k) break;
    }
  }

  void sample_ray(const std::vector<std::size_t>& active, const std::vector<double>& dir) {
    double t_face = std::numeric_limits<double>::infinity();
    for (std::size_t i : active) {
      if (dir[i] < 0.0) t_face = std::min(t_face, -p_[i] / dir[i]);
    }
    if (!(t_face > 0.0)) return;  // the ray exits through a face the center sits on
    if (!std::isfinite(t_face)) t_face = std::sqrt(2.0);

    const auto g = [&](double t) {
      double kl = 0.0;
      for (std::size_t i : active) {
        if (p_[i] == 0.0) continue;
        const double ui = p_[i] + t * dir[i];
        if (ui <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p_[i] * std::log(p_[i] / ui);
      }
      return kl;
    };

    double t = t_face;
    if (g(t_face) > r_) {
      double lo = 0.0, hi = t_face;
      while (hi - lo > kRootTol) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) <= r_ ? lo : hi) = mid;
      }
      t = lo;  // stay inside the ball
    }
    scratch_.assign(p_.begin(), p_.end());
    for (std::size_t i : active) scratch_[i] = std::max(0.0, p_[i] + t * dir[i]);
    (*visit_)(scratch_);
  }

  const std::vector<double>& p_;
  double r_;
  double step_;
  std::size_t max_points_;
  const PointVisitor* visit_ = nullptr;
  std::set<std::vector<std::size_t>> seen_;
  std::vector<double> scratch_;
};

}  // namespace

double sup_tv_kl_ball(const ConfidenceSet& c, const ParamPoint& q_hat, const GridOptions& opts) {
  const auto& p = simplex_of(c.center);
  const auto& q = simplex_of(q_hat);
  const std::size_t d = p.size();
  const double r = c.radius;
  const LossSpec tv{LossKind::TotalVariation, 0.0};
  if (r <= kRadiusFloor) return loss_on_simplex(tv, p, q);
  if (static_cast<int>(d) > opts.d_exact) {
    const CertifiedValue cv = certified_grid_sup(c, q_hat, tv, opts.mesh, opts);
    return cv.value + cv.slack;
  }
  // TV(u,q) = max_A u(A) - q(A); per sign pattern A the largest reachable
  // mass u(A) over the ball aggregates to a 1-d bernoulli root.
  double best = 0.0;
  const unsigned full = (1u << d) - 1u;
  for (unsigned mask = 1; mask < full; ++mask) {
    const double pa = std::min(subset_mass(p, mask), 1.0);
    const double qa = subset_mass(q, mask);
    best = std::max(best, kl_ball_boundary_1d(pa, r).second - qa);
  }
  return best;
}

CertifiedValue certified_grid_sup(const ConfidenceSet& c, const ParamPoint& q_hat,
                                  const LossSpec& loss, double mesh, const GridOptions& opts) {
  if (!(mesh > 0.0)) raise(Errc::ValidationFailed, "mesh must be positive");
  const auto& p = simplex_of(c.center);
  const auto& q = simplex_of(q_hat);
  const double r = c.radius;
  if (r <= kRadiusFloor) return {loss_on_simplex(loss, p, q), 0.0};

  const BallGeometry geo = ball_geometry(p, r);
  const double lf = loss_lipschitz_on_ball(loss, q, geo);
  const double slack = lf * mesh;
  if (!(slack <= opts.slack_cap)) {
    std::ostringstream os;
    os << "certified slack " << slack << " exceeds cap " << opts.slack_cap
       << " (loss Lipschitz bound " << lf << ", mesh " << mesh << ")";
    raise(Errc::MeshTooCoarse, os.str());
  }

  double best = -std::numeric_limits<double>::infinity();
  const PointVisitor maximize = [&](const std::vector<double>& u) {
    best = std::max(best, loss_on_simplex(loss, u, q));
  };
  BoundaryScan scan(p, r, direction_step_for(geo, r, mesh), opts.max_points);
  scan.run(maximize);
  return {best, slack};
}

PseudoGap pseudo_gap_w1(const ConfidenceSet& c, const ParamPoint& q_hat) {
  const auto& ctr = std::get<Empirical1DPoint>(c.center).samples;
  const auto& q = std::get<Empirical1DPoint>(q_hat).samples;
  PseudoGap out;
  out.plug_in = wasserstein1_sorted(ctr, q);
  out.upper = out.plug_in + c.radius;  // triangle inequality
  out.lower = std::max(out.plug_in - c.radius, 0.0);
  out.method = GapMethod::TriangleBound;
  out.slack = c.radius;
  return out;
}

double sup_linear_kl_ball(const std::vector<double>& p_hat, double r,
                          const std::vector<double>& coef) {
  const std::size_t d = p_hat.size();
  double best = 0.0;
  for (std::size_t i = 0; i < d; ++i) best += coef[i] * p_hat[i];
  if (r <= 0.0) return best;

  std::vector<std::size_t> support, zeros;
  for (std::size_t i = 0; i < d; ++i) (p_hat[i] > 0.0 ? support : zeros).push_back(i);

  if (support.size() == 1) {
    // the ball degenerates to {u : u_a >= exp(-r)}
    const std::size_t a = support[0];
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < d; ++i) {
      if (i != a) other = std::max(other, coef[i]);
    }
    if (coef[a] >= other) return std::max(best, coef[a]);
    const double t = std::exp(-r);
    return std::max(best, coef[a] * t + (1.0 - t) * other);
  }

  double cmax = -std::numeric_limits<double>::infinity();
  double cmin = std::numeric_limits<double>::infinity();
  for (std::size_t i : support) {
    cmax = std::max(cmax, coef[i]);
    cmin = std::min(cmin, coef[i]);
  }

  if (cmax - cmin > 1e-15) {
    // tilted dual u_i = lambda p_i / (mu - c_i); the KL constraint is active,
    // so mu solves sum_i p_i log(mu - c_i) + log(sum_j p_j / (mu - c_j)) = r
    const auto dual_kl = [&](double mu) {
      double logs = 0.0, denom = 0.0;
      for (std::size_t i : support) {
        logs += p_hat[i] * std::log(mu - coef[i]);
        denom += p_hat[i] / (mu - coef[i]);
      }
      return logs + std::log(denom);
    };
    double lo = cmax + 1e-14 * std::max(1.0, std::abs(cmax));
    for (int guard = 0; guard < 200 && !(dual_kl(lo) > r); ++guard) {
      lo = cmax + (lo - cmax) * 0.25;
    }
    double hi = cmax + std::max(1.0, cmax - cmin);
    for (int guard = 0; guard < 200 && dual_kl(hi) > r; ++guard) hi = cmax + (hi - cmax) * 4.0;
    if (dual_kl(lo) > r && dual_kl(hi) <= r) {
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (dual_kl(mid) > r ? lo : hi) = mid;
      }
      const double mu = hi;
      double denom = 0.0, value = 0.0;
      for (std::size_t i : support) denom += p_hat[i] / (mu - coef[i]);
      const double lambda = 1.0 / denom;
      for (std::size_t i : support) value += coef[i] * lambda * p_hat[i] / (mu - coef[i]);
      best = std::max(best, value);
    }
  }

  if (!zeros.empty()) {
    // mass on an unsupported coordinate; stationarity pins mu to its score
    double cz = -std::numeric_limits<double>::infinity();
    for (std::size_t i : zeros) cz = std::max(cz, coef[i]);
    if (cz > cmax + 1e-12) {
      double logs = 0.0, denom = 0.0;
      for (std::size_t i : support) {
        logs += p_hat[i] * std::log(cz - coef[i]);
        denom += p_hat[i] / (cz - coef[i]);
      }
      const double lambda = std::exp(logs - r);
      const double t = 1.0 - lambda * denom;
      if (t >= -1e-15) {
        double value = cz * std::max(t, 0.0);
        for (std::size_t i : support) value += coef[i] * lambda * p_hat[i] / (cz - coef[i]);
        best = std::max(best, value);
      }
    }
  }
  return best;
}

namespace {

double sup_pairwise_interval(const ConfidenceSet& c, const ParamPoint& q1, const ParamPoint& q2,
                             const LossSpec& loss) {
  require_scalar_loss(loss);
  const Interval iv = clipped_interval(c);
  const double a = std::get<BoundedScalarPoint>(q1).value;
  const double b = std::get<BoundedScalarPoint>(q2).value;
  const auto diff = [&](double u) { return scalar_loss(loss, u, a) - scalar_loss(loss, u, b); };
  // squared: the difference is linear in u; absolute: piecewise linear with
  // breakpoints at a and b; both peak on a breakpoint or endpoint
  double best = std::max(diff(iv.lo), diff(iv.hi));
  if (loss.kind == LossKind::AbsoluteError) {
    if (a > iv.lo && a < iv.hi) best = std::max(best, diff(a));
    if (b > iv.lo && b < iv.hi) best = std::max(best, diff(b));
  }
  return best;
}

double sup_pairwise_kl_ball(const ConfidenceSet& c, const ParamPoint& q1, const ParamPoint& q2,
                            const LossSpec& loss, const GridOptions& opts) {
  const auto& p = simplex_of(c.center);
  const auto& a = simplex_of(q1);
  const auto& b = simplex_of(q2);
  const std::size_t d = p.size();
  const double r = c.radius;

  if (loss.kind == LossKind::KL) {
    // KL(u||a) - KL(u||b) = sum_i u'_i log(b'_i/a'_i): affine in u, so the
    // sup reduces to the exact linear dual over the ball
    const double beta = loss.beta_smooth;
    const double z = 1.0 + static_cast<double>(d) * beta;
    std::vector<double> coef(d);
    double shift = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double ai = (a[i] + beta) / z;
      const double bi = (b[i] + beta) / z;
      if (ai <= 0.0 || bi <= 0.0) {
        raise(Errc::KLUndefined, "pairwise KL needs interior simulator estimates or smoothing");
      }
      coef[i] = std::log(bi / ai);
      shift += beta / z * coef[i];
    }
    if (r <= kRadiusFloor) {
      double v = shift;
      for (std::size_t i = 0; i < d; ++i) v += coef[i] / z * p[i];
      return v;
    }
    return sup_linear_kl_ball(p, r, coef) / z + shift;
  }

  const LossSpec tv{LossKind::TotalVariation, 0.0};
  const double plug = loss_on_simplex(tv, p, a) - loss_on_simplex(tv, p, b);
  if (r <= kRadiusFloor) return plug;
  if (d == 2) {
    const auto roots = kl_ball_boundary_1d(p[0], r);
    const auto diff = [&](double u) { return std::abs(u - a[0]) - std::abs(u - b[0]); };
    double best = std::max(diff(roots.first), diff(roots.second));
    for (double brk : {a[0], b[0]}) {
      if (brk > roots.first && brk < roots.second) best = std::max(best, diff(brk));
    }
    return best;
  }
  // difference of TVs is not convex; report the tighter of two certified
  // upper bounds (both collapse to the plug-in as r -> 0)
  const double bound1 = loss_on_simplex(tv, a, b);
  const double inf2 = std::max(0.0, loss_on_simplex(tv, p, b) - pinsker_tv_radius(r));
  const double bound2 = sup_tv_kl_ball(c, q1, opts) - inf2;
  return std::min(bound1, bound2);
}

}  // namespace

double pairwise_sup(const ConfidenceSet& c, const ParamPoint& q1, const ParamPoint& q2,
                    const LossSpec& loss, const GridOptions& opts) {
  if (q1 == q2) return 0.0;
  switch (c.family) {
    case SetFamily::IntervalAbs:
      return sup_pairwise_interval(c, q1, q2, loss);
    case SetFamily::KLBall:
      return sup_pairwise_kl_ball(c, q1, q2, loss, opts);
    case SetFamily::W1Ball: {
      const auto& ctr = std::get<Empirical1DPoint>(c.center).samples;
      const auto& s1 = std::get<Empirical1DPoint>(q1).samples;
      const auto& s2 = std::get<Empirical1DPoint>(q2).samples;
      const double w1 = wasserstein1_sorted(ctr, s1);
      const double w2 = wasserstein1_sorted(ctr, s2);
      return w1 + c.radius - std::max(w2 - c.radius, 0.0);
    }
  }
  raise(Errc::IncompatibleVariant, "unknown confidence set family");
}

// ---------------------------------------------------------------------------
// dataset-level runs
// ---------------------------------------------------------------------------

namespace {

PseudoGap gap_single_set(const ScenarioRecord& rec, const ConfidenceSet& set,
                         const LossSpec& loss, const GridOptions& opts) {
  PseudoGap out;
  out.scenario_id = rec.scenario_id;
  out.plug_in = evaluate_loss(loss, rec.p_hat, rec.q_hat);

  switch (set.family) {
    case SetFamily::IntervalAbs: {
      out.upper = sup_loss_interval(set, rec.q_hat, loss);
      out.lower = inf_loss_interval(set, rec.q_hat, loss);
      out.method = GapMethod::EndpointConvexity;
      break;
    }
    case SetFamily::KLBall: {
      const auto& p = simplex_of(rec.p_hat);
      const auto& q = simplex_of(rec.q_hat);
      const std::size_t d = p.size();
      if (loss.kind == LossKind::KL) {
        if (d == 2) {
          const auto [up, lo] = sup_inf_kl_loss_bernoulli(set, rec.q_hat, loss);
          out.upper = up;
          out.lower = lo;
          out.method = GapMethod::EndpointConvexity;
        } else {
          const CertifiedValue cv = certified_grid_sup(set, rec.q_hat, loss, opts.mesh, opts);
          out.upper = cv.value + cv.slack;
          const double tv_gap =
              std::max(0.0, loss_on_simplex({LossKind::TotalVariation, 0.0}, p, q) -
                                pinsker_tv_radius(set.radius));
          out.lower = 2.0 * tv_gap * tv_gap;  // Pinsker
          out.method = GapMethod::CertifiedGrid;
          out.slack = cv.slack;
        }
      } else {
        if (static_cast<int>(d) <= opts.d_exact) {
          out.upper = sup_tv_kl_ball(set, rec.q_hat, opts);
          out.method = GapMethod::SignPatternDual;
        } else {
          const CertifiedValue cv =
              certified_grid_sup(set, rec.q_hat, {LossKind::TotalVariation, 0.0}, opts.mesh, opts);
          out.upper = cv.value + cv.slack;
          out.method = GapMethod::CertifiedGrid;
          out.slack = cv.slack;
        }
        if (d == 2) {
          const auto roots = kl_ball_boundary_1d(p[0], set.radius);
          if (q[0] >= roots.first && q[0] <= roots.second) {
            out.lower = 0.0;
          } else {
            out.lower = std::min(std::abs(roots.first - q[0]), std::abs(roots.second - q[0]));
          }
        } else {
          out.lower = std::max(0.0, out.plug_in - pinsker_tv_radius(set.radius));
        }
      }
      break;
    }
    case SetFamily::W1Ball: {
      out = pseudo_gap_w1(set, rec.q_hat);
      out.scenario_id = rec.scenario_id;
      break;
    }
  }
  return out;
}

PseudoGap gap_joint_sets(const ScenarioRecord& rec, const ConfidenceSet& p_set,
                         const ConfidenceSet& q_set, const LossSpec& loss,
                         const GridOptions& opts) {
  PseudoGap out;
  out.scenario_id = rec.scenario_id;
  out.plug_in = evaluate_loss(loss, rec.p_hat, rec.q_hat);

  switch (p_set.family) {
    case SetFamily::IntervalAbs: {
      const Interval ip = clipped_interval(p_set);
      const Interval iq = clipped_interval(q_set);
      double up = 0.0;
      for (double u : {ip.lo, ip.hi}) {
        for (double v : {iq.lo, iq.hi}) up = std::max(up, scalar_loss(loss, u, v));
      }
      out.upper = up;
      const double gap = std::max({iq.lo - ip.hi, ip.lo - iq.hi, 0.0});
      out.lower = loss.kind == LossKind::SquaredError ? gap * gap : gap;
      out.method = GapMethod::EndpointConvexity;
      break;
    }
    case SetFamily::KLBall: {
      const auto& p = simplex_of(rec.p_hat);
      const auto& q = simplex_of(rec.q_hat);
      const std::size_t d = p.size();
      const double rp = p_set.radius, rq = q_set.radius;
      if (d == 2) {
        const auto pu = kl_ball_boundary_1d(p[0], rp);
        const auto qu = kl_ball_boundary_1d(q[0], rq);
        const auto f = [&](double u, double v) {
          return loss_on_simplex(loss, {u, 1.0 - u}, {v, 1.0 - v});
        };
        double up = 0.0;
        for (double u : {pu.first, pu.second}) {
          for (double v : {qu.first, qu.second}) up = std::max(up, f(u, v));
        }
        out.upper = up;  // jointly convex: corner maximum over the box
        if (pu.second >= qu.first && qu.second >= pu.first) {
          out.lower = 0.0;
        } else if (pu.second < qu.first) {
          out.lower = f(pu.second, qu.first);
        } else {
          out.lower = f(pu.first, qu.second);
        }
        out.method = GapMethod::EndpointConvexity;
      } else if (loss.kind == LossKind::TotalVariation) {
        if (static_cast<int>(d) > opts.d_exact) {
          raise(Errc::MeshTooCoarse, "joint-set TV above d_exact is not supported");
        }
        // both sides aggregate per sign pattern: max_A [sup_u u(A) - inf_v v(A)]
        double best = 0.0;
        const unsigned full = (1u << d) - 1u;
        for (unsigned mask = 1; mask < full; ++mask) {
          const double reach_u =
              kl_ball_boundary_1d(std::min(subset_mass(p, mask), 1.0), rp).second;
          const double floor_v =
              kl_ball_boundary_1d(std::min(subset_mass(q, mask), 1.0), rq).first;
          best = std::max(best, reach_u - floor_v);
        }
        out.upper = std::max(best, 0.0);
        out.lower =
            std::max(0.0, out.plug_in - pinsker_tv_radius(rp) - pinsker_tv_radius(rq));
        out.method = GapMethod::SignPatternDual;
      } else {
        // certified outer scan of the q-ball boundary; certified inner scan
        // of the p-ball per outer sample (the loss is jointly convex, so the
        // sup over the product sits on extreme-point pairs)
        const double beta = loss.beta_smooth;
        const double z = 1.0 + static_cast<double>(d) * beta;
        const BallGeometry geo_q = ball_geometry(q, rq);
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double vmin = (geo_q.coord_lo[i] + beta) / z;
          if (vmin <= 0.0) {
            raise(Errc::MeshTooCoarse, "joint-set KL needs smoothing or interior estimates");
          }
          acc += 1.0 / (vmin * vmin * z * z);
        }
        const double l_outer = std::sqrt(acc);
        const double outer_slack = l_outer * opts.mesh;
        if (!(outer_slack <= opts.slack_cap)) {
          std::ostringstream os;
          os << "outer certified slack " << outer_slack << " exceeds cap " << opts.slack_cap;
          raise(Errc::MeshTooCoarse, os.str());
        }
        double best = -std::numeric_limits<double>::infinity();
        double inner_slack = 0.0;
        const PointVisitor inspect_outer = [&](const std::vector<double>& v) {
          const ParamPoint vp = SimplexPoint{v};
          const CertifiedValue cv = certified_grid_sup(p_set, vp, loss, opts.mesh, opts);
          inner_slack = std::max(inner_slack, cv.slack);
          best = std::max(best, cv.value);
        };
        BoundaryScan outer(q, rq, direction_step_for(geo_q, rq, opts.mesh), opts.max_points);
        outer.run(inspect_outer);
        out.upper = best + inner_slack + outer_slack;
        out.slack = inner_slack + outer_slack;
        const double tv_gap =
            std::max(0.0, loss_on_simplex({LossKind::TotalVariation, 0.0}, p, q) -
                              pinsker_tv_radius(rp) - pinsker_tv_radius(rq));
        out.lower = 2.0 * tv_gap * tv_gap;
        out.method = GapMethod::CertifiedGrid;
      }
      break;
    }
    case SetFamily::W1Ball: {
      const double rp = p_set.radius, rq = q_set.radius;
      out.upper = out.plug_in + rp + rq;
      out.lower = std::max(out.plug_in - rp - rq, 0.0);
      out.method = GapMethod::TriangleBound;
      out.slack = rp + rq;
      break;
    }
  }
  return out;
}

}  // namespace

GapRunResult compute_pseudo_gaps(const Dataset& d, double gamma, const LossSpec& loss,
                                 GapMode mode, const GridOptions& opts, int threads) {
  const auto findings = validate_dataset(d);
  if (!findings.empty()) {
    raise(Errc::ValidationFailed, "dataset invalid: " + findings.front().message + " (and " +
                                      std::to_string(findings.size() - 1) + " more)");
  }
  if (!loss_compatible(loss.kind, point_kind(d.records.front().p_hat))) {
    raise(Errc::IncompatibleVariant,
          std::string(loss_name(loss.kind)) + " loss does not apply to this dataset's variant");
  }

  double gamma_p = gamma, gamma_q = gamma;
  if (mode == GapMode::TrueSimTarget) {
    std::tie(gamma_p, gamma_q) = split_gamma_joint(gamma);
  }

  const std::size_t m = d.records.size();
  GapRunResult out;
  out.gaps.resize(m);
  std::vector<std::vector<std::string>> warn_slots(m);
  std::vector<std::exception_ptr> errors(m);

  const auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t j = begin; j < m; j += stride) {
      try {
        const auto& rec = d.records[j];
        const ConfidenceSet p_set =
            build_confidence_set(rec.p_hat, rec.n, gamma_p, {}, &warn_slots[j]);
        if (mode == GapMode::SimEstimateTarget) {
          out.gaps[j] = gap_single_set(rec, p_set, loss, opts);
        } else {
          const ConfidenceSet q_set =
              build_confidence_set(rec.q_hat, rec.k, gamma_q, {}, &warn_slots[j]);
          out.gaps[j] = gap_joint_sets(rec, p_set, q_set, loss, opts);
        }
        auto& g = out.gaps[j];
        g.lower = std::min(g.lower, g.plug_in);  // guard numerical wobble
        g.upper = std::max(g.upper, g.plug_in);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };

  std::size_t n_threads = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, m);
  if (n_threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
    for (auto& th : pool) th.join();
  }

  for (std::size_t j = 0; j < m; ++j) {
    if (errors[j]) {
      try {
        std::rethrow_exception(errors[j]);
      } catch (const Error& e) {
        raise(e.code(), "scenario '" + d.records[j].scenario_id + "': " + e.what());
      }
    }
    for (auto& w : warn_slots[j]) {
      out.warnings.push_back("scenario '" + d.records[j].scenario_id + "': " + w);
    }
  }
  return out;
}

}  // namespace simgap
