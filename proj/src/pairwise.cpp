#include "simgap/pairwise.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <thread>

namespace simgap {

PairwiseReport compute_pairwise(const Dataset& d, const PairwiseParams& params) {
  const auto findings = validate_dataset(d);
  if (!findings.empty()) {
    raise(Errc::ValidationFailed, "dataset invalid: " + findings.front().message);
  }
  for (const auto& rec : d.records) {
    if (!rec.q_hat_2) {
      raise(Errc::MissingSecondSimulator,
            "scenario '" + rec.scenario_id + "' has no second simulator estimate");
    }
  }
  // the comparison guarantee holds per fixed simulation budget
  const long k0 = d.records.front().k;
  for (const auto& rec : d.records) {
    if (rec.k != k0) {
      raise(Errc::MixedBudgets, "pairwise comparison needs one simulator budget k; scenario '" +
                                    rec.scenario_id + "' has k = " + std::to_string(rec.k));
    }
  }
  if (!loss_compatible(params.loss.kind, point_kind(d.records.front().p_hat))) {
    raise(Errc::IncompatibleVariant, "loss does not apply to this dataset's variant");
  }

  const std::size_t m = d.records.size();
  std::vector<double> deltas(m), plug(m);
  std::vector<std::vector<std::string>> warn_slots(m);
  std::vector<std::exception_ptr> errors(m);

  const auto worker = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t j = begin; j < m; j += stride) {
      try {
        const auto& rec = d.records[j];
        const ConfidenceSet set =
            build_confidence_set(rec.p_hat, rec.n, params.gamma, {}, &warn_slots[j]);
        deltas[j] = pairwise_sup(set, rec.q_hat, *rec.q_hat_2, params.loss, params.grid);
        plug[j] = evaluate_loss(params.loss, rec.p_hat, rec.q_hat) -
                  evaluate_loss(params.loss, rec.p_hat, *rec.q_hat_2);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  std::size_t n_threads = params.threads > 0 ? static_cast<std::size_t>(params.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
  n_threads = std::min(n_threads, m);
  if (n_threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker, t, n_threads);
    for (auto& th : pool) th.join();
  }

  PairwiseReport report;
  report.params = params;
  if (report.params.alpha_grid.empty()) report.params.alpha_grid = default_alpha_grid();
  for (std::size_t j = 0; j < m; ++j) {
    if (errors[j]) {
      try {
        std::rethrow_exception(errors[j]);
      } catch (const Error& e) {
        raise(e.code(), "scenario '" + d.records[j].scenario_id + "': " + e.what());
      }
    }
    for (auto& w : warn_slots[j]) {
      report.warnings.push_back("scenario '" + d.records[j].scenario_id + "': " + w);
    }
  }

  report.u_curve = QuantileCurve::from_values(deltas);
  report.plug_in_deltas = std::move(plug);
  report.m = static_cast<long>(m);
  for (double alpha : report.params.alpha_grid) {
    DominanceRow row;
    row.alpha = alpha;
    row.threshold = empirical_quantile(report.u_curve, 1.0 - alpha / 2.0);
    const double eps = epsilon_correction(alpha, report.m, params.eta);
    row.raw_fraction = 1.0 - alpha - eps / std::sqrt(static_cast<double>(report.m));
    row.certified_fraction = std::min(std::max(row.raw_fraction, 0.0), 1.0);
    row.certified = row.threshold <= 0.0;  // non-strict claim
    row.tie = row.threshold == 0.0;
    report.table.push_back(row);
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
