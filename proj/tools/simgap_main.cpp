#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "simgap/io.hpp"

namespace {

using namespace simgap;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::SchemaError:
    case Errc::ValidationFailed:
    case Errc::IncompatibleVariant:
    case Errc::IncompatibleHint:
    case Errc::InvalidGamma:
    case Errc::InvalidEta:
    case Errc::AlphaOutOfRange:
    case Errc::NonpositiveSigma:
    case Errc::MissingSecondSimulator:
    case Errc::MixedBudgets:
      return 2;
    case Errc::MeshTooCoarse:
    case Errc::KLUndefined:
    case Errc::EmptyInterval:
      return 3;
    case Errc::IoFailure:
      return 4;
  }
  return 3;
}

struct CommonOpts {
  std::string input;
  std::string out_dir = "simgap-out";
  double gamma = 0.5;
  double eta = 0.05;
  std::string loss = "squared";
  std::string mode = "sim-estimate";
  double smoothing = 0.0;
  double sigma = 0.0;
  double mesh = 1e-4;
  double slack_cap = 1e-3;
  std::string alpha_grid;  // "start:stop:step" or comma list; empty -> default
  int threads = 0;
};

LossSpec parse_loss(const CommonOpts& o) {
  const auto kind = loss_from_name(o.loss);
  if (!kind) raise(Errc::ValidationFailed, "unknown loss '" + o.loss + "'");
  LossSpec spec;
  spec.kind = *kind;
  spec.beta_smooth = o.smoothing;
  return spec;
}

GapMode parse_mode(const CommonOpts& o) {
  if (o.mode == "sim-estimate") return GapMode::SimEstimateTarget;
  if (o.mode == "true-sim") return GapMode::TrueSimTarget;
  raise(Errc::ValidationFailed, "unknown mode '" + o.mode + "' (sim-estimate|true-sim)");
}

std::vector<double> parse_grid(const std::string& text) {
  if (text.empty()) return {};
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    double start, stop, step;
    if (std::sscanf(text.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 || step <= 0.0) {
      raise(Errc::ValidationFailed, "bad grid spec '" + text + "', expected start:stop:step");
    }
    for (double a = start; a <= stop + 1e-12; a += step) out.push_back(a);
    return out;
  }
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

void attach_common(CLI::App* cmd, CommonOpts& o, bool needs_input) {
  if (needs_input) {
    cmd->add_option("input", o.input, "scenario dataset (JSON lines)")->required();
  }
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--gamma", o.gamma, "per-scenario confidence-set coverage");
  cmd->add_option("--eta", o.eta, "calibration failure probability");
  cmd->add_option("--loss", o.loss, "squared|absolute|kl|tv|w1");
  cmd->add_option("--mode", o.mode, "sim-estimate|true-sim");
  cmd->add_option("--smoothing", o.smoothing, "KL smoothing beta");
  cmd->add_option("--sigma", o.sigma, "sub-Gaussian parameter for w1 sets");
  cmd->add_option("--mesh", o.mesh, "certified grid mesh");
  cmd->add_option("--slack-cap", o.slack_cap, "certified slack cap");
  cmd->add_option("--alpha-grid", o.alpha_grid, "alpha grid: comma list or start:stop:step");
  cmd->add_option("--threads", o.threads, "worker threads (0 = auto)");
}

Dataset load_dataset(const CommonOpts& o) {
  Dataset d = ingest(o.input);
  if (o.sigma > 0.0) {
    for (auto& rec : d.records) {
      for (ParamPoint* p : {&rec.p_hat, &rec.q_hat}) {
        if (auto* e = std::get_if<Empirical1DPoint>(p)) e->sigma = o.sigma;
      }
      if (rec.q_hat_2) {
        if (auto* e = std::get_if<Empirical1DPoint>(&*rec.q_hat_2)) e->sigma = o.sigma;
      }
    }
  }
  return d;
}

CalibrateParams calibrate_params(const CommonOpts& o) {
  CalibrateParams params;
  params.gamma = o.gamma;
  params.eta = o.eta;
  params.loss = parse_loss(o);
  params.mode = parse_mode(o);
  params.alpha_grid = parse_grid(o.alpha_grid);
  params.grid.mesh = o.mesh;
  params.grid.slack_cap = o.slack_cap;
  params.threads = o.threads;
  return params;
}

int cmd_calibrate(const CommonOpts& o) {
  const Dataset d = load_dataset(o);
  const CalibrationReport report = calibrate(d, calibrate_params(o));
  for (const auto& path : emit_report(report, o.out_dir)) {
    std::cout << "wrote " << path.string() << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_compare(const CommonOpts& o) {
  const Dataset d = load_dataset(o);
  PairwiseParams params;
  params.gamma = o.gamma;
  params.eta = o.eta;
  params.loss = parse_loss(o);
  params.alpha_grid = parse_grid(o.alpha_grid);
  params.grid.mesh = o.mesh;
  params.grid.slack_cap = o.slack_cap;
  params.threads = o.threads;
  const PairwiseReport report = compute_pairwise(d, params);
  for (const auto& path : emit_report(report, o.out_dir)) {
    std::cout << "wrote " << path.string() << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_band(const CommonOpts& o) {
  const Dataset d = load_dataset(o);
  const CalibrationReport report = calibrate(d, calibrate_params(o));
  BandTable table;
  table.gamma = o.gamma;
  std::vector<double> taus = parse_grid(o.alpha_grid);
  if (taus.empty()) taus = default_alpha_grid();
  for (double tau : taus) {
    table.taus.push_back(tau);
    table.points.push_back(band(report.curve, report.lower_curve, o.gamma, tau));
  }
  for (const auto& path : emit_band(report, table, o.out_dir)) {
    std::cout << "wrote " << path.string() << "\n";
  }
  return 0;
}

int cmd_new_scenario(const CommonOpts& o, const std::string& q_hat_text, double alpha_bar,
                     const std::string& domain_text) {
  const Dataset d = load_dataset(o);
  const CalibrationReport report = calibrate(d, calibrate_params(o));

  std::vector<double> values;
  std::stringstream ss(q_hat_text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) values.push_back(std::stod(item));
  }
  if (values.empty()) raise(Errc::ValidationFailed, "--q-hat needs at least one value");

  ParamPoint q_hat;
  const LossSpec loss = parse_loss(o);
  switch (loss.kind) {
    case LossKind::SquaredError:
    case LossKind::AbsoluteError: {
      double lo = -1.0, hi = 1.0;
      if (!domain_text.empty()) {
        if (std::sscanf(domain_text.c_str(), "%lf,%lf", &lo, &hi) != 2) {
          raise(Errc::ValidationFailed, "--domain expects a,b");
        }
      }
      q_hat = make_bounded(values.at(0), lo, hi);
      break;
    }
    case LossKind::KL:
    case LossKind::TotalVariation:
      if (values.size() == 1) values = {values[0], 1.0 - values[0]};
      q_hat = make_simplex(values);
      break;
    case LossKind::Wasserstein1: {
      std::sort(values.begin(), values.end());
      q_hat = make_empirical(values, o.sigma > 0.0 ? std::optional<double>(o.sigma)
                                                   : std::optional<double>());
      break;
    }
  }
  const RegionDescriptor region = new_scenario_set(report.curve, q_hat, alpha_bar, loss);
  for (const auto& path : emit_region(region, o.out_dir)) {
    std::cout << "wrote " << path.string() << "\n";
  }
  std::cout << "tau = " << format_double(region.tau) << "\n" << region.description << "\n";
  return 0;
}

GeneratorConfig generator_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{
      "experiment", "seed",     "m_calibration", "m_holdout", "family",
      "d",          "sigma",    "n_law",         "k",         "truth_lo",
      "truth_hi",   "bias",     "bias_2",        "identical_sims",
      "replications", "master_n", "alpha_grid",  "n_sweep"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) {
      raise(Errc::SchemaError, "unknown config key \"" + key + "\"");
    }
  }
  GeneratorConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("m_calibration")) cfg.m_calibration = j["m_calibration"].get<long>();
  if (j.contains("m_holdout")) cfg.m_holdout = j["m_holdout"].get<long>();
  if (j.contains("family")) {
    const auto fam = scenario_family_from_name(j["family"].get<std::string>());
    if (!fam) raise(Errc::ValidationFailed, "unknown family in config");
    cfg.family = *fam;
  }
  if (j.contains("d")) cfg.d = j["d"].get<int>();
  if (j.contains("sigma")) cfg.sigma = j["sigma"].get<double>();
  if (j.contains("n_law")) {
    const auto& n = j["n_law"];
    if (n.is_number()) {
      cfg.n_law.lo = cfg.n_law.hi = n.get<long>();
    } else if (n.is_object() && n.contains("fixed")) {
      cfg.n_law.lo = cfg.n_law.hi = n["fixed"].get<long>();
    } else if (n.is_object() && n.contains("uniform")) {
      cfg.n_law.lo = n["uniform"][0].get<long>();
      cfg.n_law.hi = n["uniform"][1].get<long>();
    } else {
      raise(Errc::ValidationFailed, "n_law must be a number, {fixed: v}, or {uniform: [lo, hi]}");
    }
  }
  if (j.contains("k")) cfg.k = j["k"].get<long>();
  if (j.contains("truth_lo")) cfg.truth_lo = j["truth_lo"].get<double>();
  if (j.contains("truth_hi")) cfg.truth_hi = j["truth_hi"].get<double>();
  if (j.contains("bias")) cfg.bias = j["bias"].get<double>();
  if (j.contains("bias_2")) {
    cfg.bias_2 = j["bias_2"].get<double>();
    cfg.with_second_sim = true;
  }
  if (j.contains("identical_sims")) {
    cfg.identical_sims = j["identical_sims"].get<bool>();
    if (cfg.identical_sims) cfg.with_second_sim = true;
  }
  if (j.contains("replications")) cfg.replications = j["replications"].get<long>();
  if (j.contains("master_n")) cfg.master_n = j["master_n"].get<long>();
  return cfg;
}

int cmd_simulate(const CommonOpts& o, const std::string& config_path, std::uint64_t seed_override,
                 bool seed_set) {
  std::ifstream in(config_path);
  if (!in) raise(Errc::IoFailure, "cannot open " + config_path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    raise(Errc::SchemaError, config_path + ": " + e.what());
  }
  GeneratorConfig cfg = generator_from_json(j);
  if (seed_set) cfg.seed = seed_override;
  for (const auto& w : validate_generator_config(cfg)) std::cerr << "warning: " << w << "\n";

  const std::string experiment = j.value("experiment", "generate");
  const LossSpec loss = parse_loss(o);
  std::vector<double> grid = parse_grid(o.alpha_grid);
  if (grid.empty() && j.contains("alpha_grid")) {
    grid = j["alpha_grid"].get<std::vector<double>>();
  }

  if (experiment == "generate") {
    const GeneratedPool pool = generate(cfg);
    std::filesystem::create_directories(o.out_dir);
    const auto path = std::filesystem::path(o.out_dir) / "dataset.jsonl";
    emit_dataset(pool.dataset, path);
    std::cout << "wrote " << path.string() << "\n";
    return 0;
  }
  if (experiment == "coverage") {
    if (grid.empty()) grid = {0.05, 0.1, 0.2, 0.3, 0.5};
    const CoverageResult result =
        coverage_experiment(cfg, o.gamma, o.eta, loss, grid, parse_mode(o), o.threads);
    for (const auto& path : emit_coverage(result, o.out_dir)) {
      std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
  }
  if (experiment == "tightness") {
    std::vector<long> sweep = {100, 200, 500, 1000};
    if (j.contains("n_sweep")) sweep = j["n_sweep"].get<std::vector<long>>();
    const TightnessResult result = tightness_experiment(cfg, sweep, cfg.k, loss, o.threads);
    for (const auto& path : emit_tightness(result, o.out_dir)) {
      std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
  }
  if (experiment == "band") {
    std::vector<double> taus = grid;
    if (taus.empty()) taus = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    const BandExperimentResult result =
        band_experiment(cfg, o.gamma, taus, loss, o.threads);
    for (const auto& path : emit_band_experiment(result, o.out_dir)) {
      std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
  }
  raise(Errc::ValidationFailed, "unknown experiment '" + experiment + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-sample calibrated quantile curves of the sim-to-real gap"};
  // a defaults file merges under explicit CLI flags
  app.set_config("--defaults", "", "read option defaults from a config file");
  app.require_subcommand(1);

  CommonOpts calibrate_opts, compare_opts, band_opts, region_opts, simulate_opts;
  std::string q_hat_text, domain_text, sim_config;
  double alpha_bar = 0.1;
  std::uint64_t seed_override = 0;

  auto* c1 = app.add_subcommand("calibrate", "calibrated quantile curve of the sim-to-real gap");
  attach_common(c1, calibrate_opts, true);
  auto* c2 = app.add_subcommand("compare", "pairwise simulator comparison");
  attach_common(c2, compare_opts, true);
  auto* c3 = app.add_subcommand("band", "two-sided quantile band");
  attach_common(c3, band_opts, true);
  auto* c4 = app.add_subcommand("new-scenario", "confidence region for a fresh scenario");
  attach_common(c4, region_opts, true);
  c4->add_option("--q-hat", q_hat_text, "simulator estimate (scalar or comma list)")->required();
  c4->add_option("--alpha", alpha_bar, "target miscoverage level");
  c4->add_option("--domain", domain_text, "bounded outcome domain a,b");
  auto* c5 = app.add_subcommand("simulate", "synthetic experiments with known truth");
  attach_common(c5, simulate_opts, false);
  auto* cfg_opt = c5->add_option("--config", sim_config, "experiment config (JSON)");
  cfg_opt->required();
  auto* seed_opt = c5->add_option("--seed", seed_override, "override the config seed");

  for (auto* cmd : {c1, c2, c3, c4, c5}) {
    for (auto* opt : cmd->get_options()) {
      if (opt->get_positional()) continue;
      const std::string name = opt->get_single_name();
      if (name.empty() || name == "help" || name == "config" || name == "defaults") continue;
      std::string env = "SIMGAP_" + name;
      for (auto& ch : env) {
        if (ch == '-') ch = '_';
        ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      }
      opt->envname(env);
    }
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (c1->parsed()) return cmd_calibrate(calibrate_opts);
    if (c2->parsed()) return cmd_compare(compare_opts);
    if (c3->parsed()) return cmd_band(band_opts);
    if (c4->parsed()) return cmd_new_scenario(region_opts, q_hat_text, alpha_bar, domain_text);
    if (c5->parsed()) {
      return cmd_simulate(simulate_opts, sim_config, seed_override, seed_opt->count() > 0);
    }
  } catch (const simgap::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
