#include "simgap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

namespace simgap {

const char* scenario_family_name(ScenarioFamily f) noexcept {
  switch (f) {
    case ScenarioFamily::BoundedScalar: return "bounded";
    case ScenarioFamily::Bernoulli: return "bernoulli";
    case ScenarioFamily::Multinomial: return "multinomial";
    case ScenarioFamily::Empirical1D: return "empirical1d";
  }
  return "unknown";
}

std::optional<ScenarioFamily> scenario_family_from_name(const std::string& name) {
  if (name == "bounded") return ScenarioFamily::BoundedScalar;
  if (name == "bernoulli") return ScenarioFamily::Bernoulli;
  if (name == "multinomial") return ScenarioFamily::Multinomial;
  if (name == "empirical1d") return ScenarioFamily::Empirical1D;
  return std::nullopt;
}

namespace {

constexpr std::uint64_t kStreamCalibration = 0;
constexpr std::uint64_t kStreamHoldout = 1;
constexpr std::uint64_t kStreamTightness = 2;

std::uint64_t stream_tag(std::uint64_t purpose, std::uint64_t replication) {
  return (purpose << 32) | replication;
}

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

double scalar_truth(const GeneratorConfig& cfg, Rng& rng) {
  return rng.uniform(cfg.truth_lo, cfg.truth_hi);
}

double scalar_sim_truth(const GeneratorConfig& cfg, double p, double bias) {
  if (cfg.family == ScenarioFamily::Bernoulli) return clip(p + bias, 0.01, 0.99);
  if (cfg.family == ScenarioFamily::BoundedScalar) return clip(p + bias, -1.0, 1.0);
  return p + bias;  // Empirical1D location shift
}

std::vector<double> tilt_simplex(const std::vector<double>& p, double bias) {
  const std::size_t d = p.size();
  std::vector<double> q(d);
  double z = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double v = d > 1 ? -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    q[i] = p[i] * std::exp(bias * v);
    z += q[i];
  }
  for (auto& v : q) v /= z;
  return q;
}

double sample_mean_pm1(Rng& rng, double p, long n) {
  // outcomes in {-1, +1} with mean p
  const double prob_up = (1.0 + p) / 2.0;
  long up = 0;
  for (long i = 0; i < n; ++i) up += rng.bernoulli(prob_up) ? 1 : 0;
  return 2.0 * static_cast<double>(up) / static_cast<double>(n) - 1.0;
}

double sample_mean_bernoulli(Rng& rng, double p, long n) {
  long up = 0;
  for (long i = 0; i < n; ++i) up += rng.bernoulli(p) ? 1 : 0;
  return static_cast<double>(up) / static_cast<double>(n);
}

std::vector<double> sample_histogram(Rng& rng, const std::vector<double>& p, long n) {
  std::vector<double> counts(p.size(), 0.0);
  for (long i = 0; i < n; ++i) counts[rng.categorical(p)] += 1.0;
  for (auto& c : counts) c /= static_cast<double>(n);
  return counts;
}

std::vector<double> sample_sorted_normal(Rng& rng, double mean, double sd, long n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (auto& v : out) v = rng.normal(mean, sd);
  std::sort(out.begin(), out.end());
  return out;
}

struct ScenarioDraw {
  ScenarioRecord record;
  ScenarioOracle oracle;
};

ScenarioDraw draw_scenario(const GeneratorConfig& cfg, std::uint64_t tag, long index) {
  Rng rng = Rng::substream(cfg.seed, tag, static_cast<std::uint64_t>(index));
  ScenarioDraw out;
  out.record.scenario_id = "scn-" + std::to_string(tag) + "-" + std::to_string(index);
  out.record.n = cfg.n_law.lo == cfg.n_law.hi ? cfg.n_law.lo
                                              : rng.uniform_int(cfg.n_law.lo, cfg.n_law.hi);
  out.record.k = cfg.k;

  switch (cfg.family) {
    case ScenarioFamily::BoundedScalar: {
      const double p = scalar_truth(cfg, rng);
      const double q = scalar_sim_truth(cfg, p, cfg.bias);
      out.oracle.scalar_p = p;
      out.oracle.scalar_q = q;
      out.record.p_hat = make_bounded(sample_mean_pm1(rng, p, out.record.n), -1.0, 1.0);
      out.record.q_hat = make_bounded(sample_mean_pm1(rng, q, cfg.k), -1.0, 1.0);
      if (cfg.with_second_sim) {
        if (cfg.identical_sims) {
          out.record.q_hat_2 = out.record.q_hat;
        } else {
          const double q2 = scalar_sim_truth(cfg, p, cfg.bias_2);
          out.record.q_hat_2 = make_bounded(sample_mean_pm1(rng, q2, cfg.k), -1.0, 1.0);
        }
      }
      break;
    }
    case ScenarioFamily::Bernoulli: {
      const double p = scalar_truth(cfg, rng);
      const double q = scalar_sim_truth(cfg, p, cfg.bias);
      out.oracle.scalar_p = p;
      out.oracle.scalar_q = q;
      const double ph = sample_mean_bernoulli(rng, p, out.record.n);
      const double qh = sample_mean_bernoulli(rng, q, cfg.k);
      out.record.p_hat = make_simplex({ph, 1.0 - ph});
      out.record.q_hat = make_simplex({qh, 1.0 - qh});
      if (cfg.with_second_sim) {
        if (cfg.identical_sims) {
          out.record.q_hat_2 = out.record.q_hat;
        } else {
          const double q2 = scalar_sim_truth(cfg, p, cfg.bias_2);
          const double qh2 = sample_mean_bernoulli(rng, q2, cfg.k);
          out.record.q_hat_2 = make_simplex({qh2, 1.0 - qh2});
        }
      }
      break;
    }
    case ScenarioFamily::Multinomial: {
      const std::vector<double> alpha(static_cast<std::size_t>(cfg.d), 1.0);
      const std::vector<double> p = rng.dirichlet(alpha);
      const std::vector<double> q = tilt_simplex(p, cfg.bias);
      out.oracle.simplex_p = p;
      out.oracle.simplex_q = q;
      out.record.p_hat = make_simplex(sample_histogram(rng, p, out.record.n));
      out.record.q_hat = make_simplex(sample_histogram(rng, q, cfg.k));
      if (cfg.with_second_sim) {
        if (cfg.identical_sims) {
          out.record.q_hat_2 = out.record.q_hat;
        } else {
          out.record.q_hat_2 =
              make_simplex(sample_histogram(rng, tilt_simplex(p, cfg.bias_2), cfg.k));
        }
      }
      break;
    }
    case ScenarioFamily::Empirical1D: {
      const double mp = scalar_truth(cfg, rng);
      const double mq = mp + cfg.bias;
      out.oracle.mean_p = mp;
      out.oracle.mean_q = mq;
      out.oracle.sd = cfg.sigma;
      out.record.p_hat =
          make_empirical(sample_sorted_normal(rng, mp, cfg.sigma, out.record.n), cfg.sigma);
      out.record.q_hat = make_empirical(sample_sorted_normal(rng, mq, cfg.sigma, cfg.k), cfg.sigma);
      if (cfg.with_second_sim) {
        if (cfg.identical_sims) {
          out.record.q_hat_2 = out.record.q_hat;
        } else {
          out.record.q_hat_2 =
              make_empirical(sample_sorted_normal(rng, mp + cfg.bias_2, cfg.sigma, cfg.k), cfg.sigma);
        }
      }
      break;
    }
  }
  return out;
}

GeneratedPool generate_pool(const GeneratorConfig& cfg, long count, std::uint64_t tag) {
  GeneratedPool out;
  out.dataset.k_uniform = true;
  out.dataset.records.reserve(static_cast<std::size_t>(count));
  out.oracle.reserve(static_cast<std::size_t>(count));
  for (long j = 0; j < count; ++j) {
    ScenarioDraw draw = draw_scenario(cfg, tag, j);
    out.dataset.records.push_back(std::move(draw.record));
    out.oracle.push_back(std::move(draw.oracle));
  }
  return out;
}

// True per-scenario target: fresh simulator estimate at budget k for the
// SimEstimateTarget mode, the noiseless simulator parameter for the
// joint-set mode.
double holdout_discrepancy(const GeneratorConfig& cfg, const LossSpec& loss,
                           const ScenarioDraw& draw, GapMode target) {
  switch (cfg.family) {
    case ScenarioFamily::BoundedScalar: {
      const ParamPoint truth = make_bounded(draw.oracle.scalar_p, -1.0, 1.0);
      if (target == GapMode::TrueSimTarget) {
        return evaluate_loss(loss, truth, make_bounded(draw.oracle.scalar_q, -1.0, 1.0));
      }
      return evaluate_loss(loss, truth, draw.record.q_hat);
    }
    case ScenarioFamily::Bernoulli: {
      const ParamPoint truth = make_simplex({draw.oracle.scalar_p, 1.0 - draw.oracle.scalar_p});
      if (target == GapMode::TrueSimTarget) {
        return evaluate_loss(loss, truth,
                             make_simplex({draw.oracle.scalar_q, 1.0 - draw.oracle.scalar_q}));
      }
      return evaluate_loss(loss, truth, draw.record.q_hat);
    }
    case ScenarioFamily::Multinomial: {
      const ParamPoint truth = make_simplex(draw.oracle.simplex_p);
      if (target == GapMode::TrueSimTarget) {
        return evaluate_loss(loss, truth, make_simplex(draw.oracle.simplex_q));
      }
      return evaluate_loss(loss, truth, draw.record.q_hat);
    }
    case ScenarioFamily::Empirical1D: {
      if (target == GapMode::TrueSimTarget) {
        // both laws are normal with equal sd: W1 is the mean shift
        return std::abs(draw.oracle.mean_p - draw.oracle.mean_q);
      }
      const auto& q = std::get<Empirical1DPoint>(draw.record.q_hat).samples;
      return w1_empirical_normal(q, draw.oracle.mean_p, draw.oracle.sd);
    }
  }
  raise(Errc::ValidationFailed, "unknown scenario family");
}

void run_replications(long count, int threads, const std::function<void(long)>& body) {
  std::size_t n_threads = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min<std::size_t>(n_threads, static_cast<std::size_t>(count));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  const auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t r = begin; r < static_cast<std::size_t>(count); r += stride) {
      try {
        body(static_cast<long>(r));
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  if (n_threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

std::vector<std::string> validate_generator_config(const GeneratorConfig& cfg) {
  if (cfg.m_calibration < 1 || cfg.m_holdout < 1 || cfg.k < 1 || cfg.replications < 1 ||
      cfg.master_n < 1) {
    raise(Errc::ValidationFailed, "generator sizes must be >= 1");
  }
  if (cfg.n_law.lo < 1 || cfg.n_law.hi < cfg.n_law.lo) {
    raise(Errc::ValidationFailed, "n_law needs 1 <= lo <= hi");
  }
  if (cfg.family == ScenarioFamily::Multinomial && cfg.d < 2) {
    raise(Errc::ValidationFailed, "multinomial scenarios need d >= 2");
  }
  if (cfg.family == ScenarioFamily::Empirical1D && !(cfg.sigma > 0.0)) {
    raise(Errc::NonpositiveSigma, "empirical scenarios need sigma > 0");
  }
  std::vector<std::string> findings;
  if (cfg.m_holdout < 10 * cfg.m_calibration) {
    std::ostringstream os;
    os << "m_holdout = " << cfg.m_holdout << " is below the recommended 10 x m_calibration = "
       << 10 * cfg.m_calibration << "; holdout quantiles will be noisy";
    findings.push_back(os.str());
  }
  return findings;
}

GeneratedPool generate(const GeneratorConfig& cfg) {
  validate_generator_config(cfg);
  return generate_pool(cfg, cfg.m_calibration, stream_tag(kStreamCalibration, 0));
}

CoverageResult coverage_experiment(const GeneratorConfig& cfg, double gamma, double eta,
                                   const LossSpec& loss, const std::vector<double>& alpha_grid,
                                   GapMode target, int threads) {
  validate_generator_config(cfg);
  const long R = cfg.replications;
  const std::size_t n_alpha = alpha_grid.size();
  std::vector<std::vector<double>> coverage(static_cast<std::size_t>(R),
                                            std::vector<double>(n_alpha, 0.0));

  run_replications(R, threads, [&](long rep) {
    GeneratorConfig local = cfg;
    const GeneratedPool pool =
        generate_pool(local, cfg.m_calibration, stream_tag(kStreamCalibration, rep));
    const GapRunResult gaps =
        compute_pseudo_gaps(pool.dataset, gamma, loss, target, GridOptions{}, 1);
    std::vector<double> uppers;
    uppers.reserve(gaps.gaps.size());
    for (const auto& g : gaps.gaps) uppers.push_back(g.upper);
    const QuantileCurve curve = QuantileCurve::from_values(std::move(uppers));

    std::vector<double> thresholds(n_alpha);
    for (std::size_t a = 0; a < n_alpha; ++a) {
      thresholds[a] = empirical_quantile(curve, 1.0 - alpha_grid[a] / 2.0);
    }
    std::vector<long> hits(n_alpha, 0);
    for (long j = 0; j < cfg.m_holdout; ++j) {
      const ScenarioDraw draw =
          draw_scenario(local, stream_tag(kStreamHoldout, rep), j);
      const double delta = holdout_discrepancy(cfg, loss, draw, target);
      for (std::size_t a = 0; a < n_alpha; ++a) {
        if (delta <= thresholds[a]) ++hits[a];
      }
    }
    for (std::size_t a = 0; a < n_alpha; ++a) {
      coverage[static_cast<std::size_t>(rep)][a] =
          static_cast<double>(hits[a]) / static_cast<double>(cfg.m_holdout);
    }
  });

  CoverageResult out;
  out.replications = R;
  out.m = cfg.m_calibration;
  out.gamma = gamma;
  out.eta = eta;
  for (std::size_t a = 0; a < n_alpha; ++a) {
    CoverageRow row;
    row.alpha = alpha_grid[a];
    const double eps = epsilon_correction(row.alpha, cfg.m_calibration, eta);
    row.raw_bound = 1.0 - row.alpha - eps / std::sqrt(static_cast<double>(cfg.m_calibration));
    double mean = 0.0;
    long meeting = 0;
    for (long rep = 0; rep < R; ++rep) {
      const double cov = coverage[static_cast<std::size_t>(rep)][a];
      mean += cov;
      if (cov >= row.raw_bound) ++meeting;
    }
    row.mean_holdout_coverage = mean / static_cast<double>(R);
    row.frac_replications_meeting_bound = static_cast<double>(meeting) / static_cast<double>(R);
    out.rows.push_back(row);
  }
  return out;
}

TightnessResult tightness_experiment(const GeneratorConfig& cfg, const std::vector<long>& n_sweep,
                                     long k, const LossSpec& loss, int threads) {
  validate_generator_config(cfg);
  if (cfg.family != ScenarioFamily::BoundedScalar && cfg.family != ScenarioFamily::Bernoulli) {
    raise(Errc::ValidationFailed, "tightness experiment supports scalar families");
  }
  std::vector<long> sweep = n_sweep;
  std::sort(sweep.begin(), sweep.end());
  for (long n : sweep) {
    if (n < 1 || n > cfg.master_n) {
      raise(Errc::ValidationFailed, "n sweep entries must lie in [1, master_n]");
    }
  }
  const long seeds = cfg.replications;
  const auto tau_grid = default_alpha_grid();
  std::vector<std::vector<double>> sup_dist(static_cast<std::size_t>(seeds),
                                            std::vector<double>(sweep.size(), 0.0));

  run_replications(seeds, threads, [&](long seed_idx) {
    const long m = cfg.m_calibration;
    std::vector<double> oracle_gaps(static_cast<std::size_t>(m));
    std::vector<std::vector<double>> p_hats(sweep.size(),
                                            std::vector<double>(static_cast<std::size_t>(m)));
    std::vector<double> q_hats(static_cast<std::size_t>(m));
    std::vector<long> k_draws(static_cast<std::size_t>(m));

    for (long j = 0; j < m; ++j) {
      Rng rng = Rng::substream(cfg.seed, stream_tag(kStreamTightness, seed_idx),
                               static_cast<std::uint64_t>(j));
      const double p = rng.uniform(cfg.truth_lo, cfg.truth_hi);
      const double q = scalar_sim_truth(cfg, p, cfg.bias);
      // one pass over the master sample; capture prefix means at each n
      double sum = 0.0;
      std::size_t next = 0;
      const bool pm1 = cfg.family == ScenarioFamily::BoundedScalar;
      const double prob_up = pm1 ? (1.0 + p) / 2.0 : p;
      for (long i = 1; i <= cfg.master_n; ++i) {
        const bool up = rng.bernoulli(prob_up);
        sum += pm1 ? (up ? 1.0 : -1.0) : (up ? 1.0 : 0.0);
        while (next < sweep.size() && i == sweep[next]) {
          p_hats[next][static_cast<std::size_t>(j)] = sum / static_cast<double>(i);
          ++next;
        }
      }
      const double master_mean = sum / static_cast<double>(cfg.master_n);
      const double qh = pm1 ? sample_mean_pm1(rng, q, k) : sample_mean_bernoulli(rng, q, k);
      q_hats[static_cast<std::size_t>(j)] = qh;
      k_draws[static_cast<std::size_t>(j)] = k;
      // full-sample estimate treated as the underlying truth
      const ParamPoint truth = pm1 ? make_bounded(master_mean, -1.0, 1.0)
                                   : make_simplex({master_mean, 1.0 - master_mean});
      const ParamPoint sim = pm1 ? make_bounded(qh, -1.0, 1.0) : make_simplex({qh, 1.0 - qh});
      oracle_gaps[static_cast<std::size_t>(j)] = evaluate_loss(loss, truth, sim);
    }
    const QuantileCurve oracle_curve = QuantileCurve::from_values(oracle_gaps);

    for (std::size_t s = 0; s < sweep.size(); ++s) {
      Dataset ds;
      ds.k_uniform = true;
      for (long j = 0; j < m; ++j) {
        ScenarioRecord rec;
        rec.scenario_id = "tgt-" + std::to_string(j);
        rec.n = sweep[s];
        rec.k = k;
        const double ph = p_hats[s][static_cast<std::size_t>(j)];
        const double qh = q_hats[static_cast<std::size_t>(j)];
        if (cfg.family == ScenarioFamily::BoundedScalar) {
          rec.p_hat = make_bounded(ph, -1.0, 1.0);
          rec.q_hat = make_bounded(qh, -1.0, 1.0);
        } else {
          rec.p_hat = make_simplex({ph, 1.0 - ph});
          rec.q_hat = make_simplex({qh, 1.0 - qh});
        }
        ds.records.push_back(std::move(rec));
      }
      const GapRunResult gaps =
          compute_pseudo_gaps(ds, 0.5, loss, GapMode::SimEstimateTarget, GridOptions{}, 1);
      std::vector<double> uppers;
      uppers.reserve(gaps.gaps.size());
      for (const auto& g : gaps.gaps) uppers.push_back(g.upper);
      const QuantileCurve curve = QuantileCurve::from_values(std::move(uppers));
      double worst = 0.0;
      for (double tau : tau_grid) {
        const double diff =
            std::abs(calibrated_curve(curve, tau) - empirical_quantile(oracle_curve, tau));
        worst = std::max(worst, diff);
      }
      sup_dist[static_cast<std::size_t>(seed_idx)][s] = worst;
    }
  });

  TightnessResult out;
  out.seeds = seeds;
  for (std::size_t s = 0; s < sweep.size(); ++s) {
    double mean = 0.0;
    for (long r = 0; r < seeds; ++r) mean += sup_dist[static_cast<std::size_t>(r)][s];
    out.rows.push_back({sweep[s], mean / static_cast<double>(seeds)});
  }
  return out;
}

BandExperimentResult band_experiment(const GeneratorConfig& cfg, double gamma,
                                     const std::vector<double>& tau_grid, const LossSpec& loss,
                                     int threads) {
  validate_generator_config(cfg);
  const long R = cfg.replications;
  const std::size_t n_tau = tau_grid.size();
  std::vector<std::vector<int>> lower_viol(static_cast<std::size_t>(R),
                                           std::vector<int>(n_tau, 0));
  std::vector<std::vector<int>> upper_viol(static_cast<std::size_t>(R),
                                           std::vector<int>(n_tau, 0));
  std::vector<int> sandwich_ok(static_cast<std::size_t>(R), 1);

  run_replications(R, threads, [&](long rep) {
    const GeneratedPool pool =
        generate_pool(cfg, cfg.m_calibration, stream_tag(kStreamCalibration, rep));
    const GapRunResult gaps =
        compute_pseudo_gaps(pool.dataset, gamma, loss, GapMode::SimEstimateTarget, GridOptions{}, 1);
    std::vector<double> uppers, lowers;
    for (const auto& g : gaps.gaps) {
      uppers.push_back(g.upper);
      lowers.push_back(g.lower);
    }
    const QuantileCurve upper_curve = QuantileCurve::from_values(std::move(uppers));
    const QuantileCurve lower_curve = QuantileCurve::from_values(std::move(lowers));

    std::vector<double> holdout(static_cast<std::size_t>(cfg.m_holdout));
    for (long j = 0; j < cfg.m_holdout; ++j) {
      const ScenarioDraw draw = draw_scenario(cfg, stream_tag(kStreamHoldout, rep), j);
      holdout[static_cast<std::size_t>(j)] =
          holdout_discrepancy(cfg, loss, draw, GapMode::SimEstimateTarget);
    }
    const QuantileCurve oracle = QuantileCurve::from_values(std::move(holdout));

    for (std::size_t t = 0; t < n_tau; ++t) {
      const BandPoint bp = band(upper_curve, lower_curve, gamma, tau_grid[t]);
      const double v_oracle = empirical_quantile(oracle, tau_grid[t]);
      if (bp.lo > v_oracle + 1e-12) lower_viol[static_cast<std::size_t>(rep)][t] = 1;
      if (v_oracle > bp.hi + 1e-12) upper_viol[static_cast<std::size_t>(rep)][t] = 1;
      if (bp.lo > bp.hi + 1e-12) sandwich_ok[static_cast<std::size_t>(rep)] = 0;
    }
  });

  BandExperimentResult out;
  out.replications = R;
  long any_lower = 0, all_sandwich = 0;
  for (long rep = 0; rep < R; ++rep) {
    bool any = false;
    for (std::size_t t = 0; t < n_tau; ++t) any = any || lower_viol[static_cast<std::size_t>(rep)][t];
    if (any) ++any_lower;
    if (sandwich_ok[static_cast<std::size_t>(rep)]) ++all_sandwich;
  }
  out.replication_lower_violation_rate = static_cast<double>(any_lower) / static_cast<double>(R);
  out.sandwich_ok_rate = static_cast<double>(all_sandwich) / static_cast<double>(R);
  for (std::size_t t = 0; t < n_tau; ++t) {
    BandExperimentRow row;
    row.tau = tau_grid[t];
    long lv = 0, uv = 0;
    for (long rep = 0; rep < R; ++rep) {
      lv += lower_viol[static_cast<std::size_t>(rep)][t];
      uv += upper_viol[static_cast<std::size_t>(rep)][t];
    }
    row.lower_violation_rate = static_cast<double>(lv) / static_cast<double>(R);
    row.upper_violation_rate = static_cast<double>(uv) / static_cast<double>(R);
    out.rows.push_back(row);
  }
  return out;
}

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) raise(Errc::AlphaOutOfRange, "normal quantile needs p in (0,1)");
  // Acklam's rational initialisation, then two Newton steps through erfc
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int it = 0; it < 2; ++it) {
    const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    if (pdf <= 0.0) break;
    x -= (cdf - p) / pdf;
  }
  return x;
}

double w1_empirical_normal(const std::vector<double>& sorted_samples, double mean, double sd) {
  const std::size_t k = sorted_samples.size();
  if (k == 0) raise(Errc::ValidationFailed, "empty sample");
  const auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); };
  const auto cdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  // int_a^b Phi^{-1}(t) dt = phi(z_a) - phi(z_b)
  double total = 0.0;
  double z_lo = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < k; ++j) {
    const double b = static_cast<double>(j + 1) / static_cast<double>(k);
    const double a = static_cast<double>(j) / static_cast<double>(k);
    const double z_hi = (j + 1 == k) ? std::numeric_limits<double>::infinity()
                                     : normal_quantile(b);
    const double y = sorted_samples[j];
    const double zy = (y - mean) / sd;
    const double phi_lo = std::isinf(z_lo) ? 0.0 : phi(z_lo);
    const double phi_hi = std::isinf(z_hi) ? 0.0 : phi(z_hi);
    if (zy <= z_lo) {
      // normal quantile above y on the whole segment
      total += mean * (b - a) + sd * (phi_lo - phi_hi) - y * (b - a);
    } else if (zy >= z_hi) {
      total += y * (b - a) - mean * (b - a) - sd * (phi_lo - phi_hi);
    } else {
      const double ty = cdf(zy);
      const double phi_y = phi(zy);
      total += (y - mean) * (ty - a) + sd * (phi_y - phi_lo);   // quantile below y
      total += (mean - y) * (b - ty) + sd * (phi_y - phi_hi);   // quantile above y
    }
    z_lo = z_hi;
  }
  return total;
}

}  // namespace simgap
