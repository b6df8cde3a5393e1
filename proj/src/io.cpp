#include "simgap/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace simgap {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_double_short(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

[[noreturn]] void schema_error(const std::string& source, std::size_t line,
                               const std::string& what) {
  raise(Errc::SchemaError, source + ":" + std::to_string(line) + ": " + what);
}

double need_number(const json& j, const char* key, const std::string& src, std::size_t line) {
  if (!j.contains(key) || !j[key].is_number()) {
    schema_error(src, line, std::string("missing or non-numeric \"") + key + "\"");
  }
  return j[key].get<double>();
}

std::vector<double> need_array(const json& j, const char* key, const std::string& src,
                               std::size_t line) {
  if (!j.contains(key) || !j[key].is_array()) {
    schema_error(src, line, std::string("missing or non-array \"") + key + "\"");
  }
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number()) schema_error(src, line, std::string("non-numeric entry in \"") + key + "\"");
    out.push_back(v.get<double>());
  }
  return out;
}

std::vector<double> normalized(std::vector<double> counts, const std::string& src,
                               std::size_t line) {
  double sum = 0.0;
  for (double c : counts) {
    if (c < 0.0) schema_error(src, line, "negative count");
    sum += c;
  }
  if (sum <= 0.0) schema_error(src, line, "counts sum to zero");
  for (auto& c : counts) c /= sum;
  return counts;
}

ParamPoint parse_point(const json& j, const std::string& family, const char* est_key,
                       const char* samples_key, const char* counts_key, double domain_lo,
                       double domain_hi, std::optional<double> sigma, long* n_out,
                       const std::string& src, std::size_t line) {
  if (family == "bounded") {
    double value;
    if (j.contains(est_key)) {
      value = need_number(j, est_key, src, line);
    } else if (j.contains(samples_key)) {
      const auto samples = need_array(j, samples_key, src, line);
      if (samples.empty()) schema_error(src, line, "empty sample array");
      double sum = 0.0;
      for (double s : samples) sum += s;
      value = sum / static_cast<double>(samples.size());
      if (n_out) *n_out = static_cast<long>(samples.size());
    } else {
      schema_error(src, line,
                   std::string("need \"") + est_key + "\" or \"" + samples_key + "\"");
    }
    return make_bounded(value, domain_lo, domain_hi);
  }
  if (family == "bernoulli") {
    double p;
    if (j.contains(est_key)) {
      const auto& entry = j[est_key];
      if (entry.is_array()) {
        const auto probs = need_array(j, est_key, src, line);
        if (probs.size() != 2) schema_error(src, line, "bernoulli estimate needs 2 entries");
        return make_simplex(probs);
      }
      p = need_number(j, est_key, src, line);
    } else if (j.contains(counts_key)) {
      const auto probs = normalized(need_array(j, counts_key, src, line), src, line);
      if (probs.size() != 2) schema_error(src, line, "bernoulli counts need 2 cells");
      if (n_out) {
        double total = 0.0;
        for (double c : need_array(j, counts_key, src, line)) total += c;
        *n_out = static_cast<long>(total);
      }
      return make_simplex(probs);
    } else if (j.contains(samples_key)) {
      const auto samples = need_array(j, samples_key, src, line);
      if (samples.empty()) schema_error(src, line, "empty sample array");
      double sum = 0.0;
      for (double s : samples) {
        if (s != 0.0 && s != 1.0) schema_error(src, line, "bernoulli samples must be 0/1");
        sum += s;
      }
      p = sum / static_cast<double>(samples.size());
      if (n_out) *n_out = static_cast<long>(samples.size());
    } else {
      schema_error(src, line, "bernoulli record carries no estimate, counts, or samples");
    }
    return make_simplex({p, 1.0 - p});
  }
  if (family == "multinomial") {
    if (j.contains(est_key)) {
      return make_simplex(need_array(j, est_key, src, line));
    }
    if (j.contains(counts_key)) {
      auto counts = need_array(j, counts_key, src, line);
      if (n_out) {
        double total = 0.0;
        for (double c : counts) total += c;
        *n_out = static_cast<long>(total);
      }
      return make_simplex(normalized(std::move(counts), src, line));
    }
    schema_error(src, line, "multinomial record carries no estimate or counts");
  }
  if (family == "empirical1d") {
    const char* key = j.contains(est_key) ? est_key : samples_key;
    if (!j.contains(key)) schema_error(src, line, "empirical record carries no samples");
    auto samples = need_array(j, key, src, line);
    std::sort(samples.begin(), samples.end());
    if (n_out) *n_out = static_cast<long>(samples.size());
    return make_empirical(std::move(samples), sigma);
  }
  schema_error(src, line, "unknown family \"" + family + "\"");
}

}  // namespace

Dataset ingest_stream(std::istream& in, const std::string& source_name) {
  Dataset out;
  std::string line_text;
  std::size_t line_no = 0;
  std::string family;
  while (std::getline(in, line_text)) {
    ++line_no;
    if (line_text.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line_text);
    } catch (const json::parse_error& e) {
      schema_error(source_name, line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) schema_error(source_name, line_no, "line is not a JSON object");
    if (!j.contains("scenario_id") || !j["scenario_id"].is_string()) {
      schema_error(source_name, line_no, "missing \"scenario_id\"");
    }
    if (!j.contains("family") || !j["family"].is_string()) {
      schema_error(source_name, line_no, "missing \"family\"");
    }
    const std::string fam = j["family"].get<std::string>();
    if (family.empty()) family = fam;

    ScenarioRecord rec;
    rec.scenario_id = j["scenario_id"].get<std::string>();
    if (!j.contains("k")) schema_error(source_name, line_no, "missing \"k\"");
    rec.k = static_cast<long>(need_number(j, "k", source_name, line_no));

    double lo = -1.0, hi = 1.0;
    if (fam == "bounded") {
      if (!j.contains("domain") || !j["domain"].is_array() || j["domain"].size() != 2) {
        schema_error(source_name, line_no, "bounded records need \"domain\": [a, b]");
      }
      lo = j["domain"][0].get<double>();
      hi = j["domain"][1].get<double>();
    }
    std::optional<double> sigma;
    if (j.contains("sigma")) sigma = need_number(j, "sigma", source_name, line_no);

    long n_inferred = 0;
    rec.p_hat = parse_point(j, fam, "p_hat", "gt_samples", "gt_counts", lo, hi, sigma,
                            &n_inferred, source_name, line_no);
    if (j.contains("n")) {
      rec.n = static_cast<long>(need_number(j, "n", source_name, line_no));
    } else if (n_inferred > 0) {
      rec.n = n_inferred;
    } else {
      schema_error(source_name, line_no, "missing \"n\" and no samples/counts to infer it");
    }
    rec.q_hat = parse_point(j, fam, "q_hat", "sim_samples", "sim_counts", lo, hi, sigma, nullptr,
                            source_name, line_no);
    if (j.contains("q_hat_2") || j.contains("sim2_samples") || j.contains("sim2_counts")) {
      rec.q_hat_2 = parse_point(j, fam, "q_hat_2", "sim2_samples", "sim2_counts", lo, hi, sigma,
                                nullptr, source_name, line_no);
    }
    out.records.push_back(std::move(rec));
  }

  out.k_uniform = !out.records.empty();
  for (const auto& rec : out.records) {
    if (rec.k != out.records.front().k) out.k_uniform = false;
  }

  const auto findings = validate_dataset(out);
  if (!findings.empty()) {
    std::ostringstream os;
    os << source_name << ": dataset validation failed:";
    for (const auto& f : findings) {
      os << "\n  record " << f.record_index << " (" << f.scenario_id << "): " << f.message;
    }
    raise(Errc::ValidationFailed, os.str());
  }
  return out;
}

Dataset ingest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::IoFailure, "cannot open " + path.string());
  return ingest_stream(in, path.string());
}

namespace {

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char ch : s) {
    if (ch == '"' || ch == '\\') {
      out.push_back('\\');
      out.push_back(ch);
    } else if (static_cast<unsigned char>(ch) < 0x20) {
      char buf[8];
      std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
      out += buf;
    } else {
      out.push_back(ch);
    }
  }
  return out;
}

std::string family_string(const ParamPoint& p) {
  switch (point_kind(p)) {
    case PointKind::BoundedScalar: return "bounded";
    case PointKind::Simplex:
      return std::get<SimplexPoint>(p).probs.size() == 2 ? "bernoulli" : "multinomial";
    case PointKind::Empirical1D: return "empirical1d";
  }
  return "unknown";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) raise(Errc::IoFailure, "write failed for " + path.string());
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

json params_to_json(const CalibrateParams& p) {
  json j;
  j["gamma"] = p.gamma;
  j["eta"] = p.eta;
  j["loss"] = loss_name(p.loss.kind);
  j["beta_smooth"] = p.loss.beta_smooth;
  j["mode"] = gap_mode_name(p.mode);
  j["mesh"] = p.grid.mesh;
  j["slack_cap"] = p.grid.slack_cap;
  j["d_exact"] = p.grid.d_exact;
  j["cvar_levels"] = p.cvar_levels;
  return j;
}

}  // namespace

namespace {

// hand-built lines keep the 17-significant-digit contract, so
// ingest(emit(d)) reproduces d exactly
void append_point(std::ostringstream& os, const ParamPoint& p, const char* est_key,
                  bool* domain_written) {
  if (const auto* s = std::get_if<SimplexPoint>(&p)) {
    os << ",\"" << est_key << "\":[";
    for (std::size_t i = 0; i < s->probs.size(); ++i) {
      if (i) os << ',';
      os << format_double(s->probs[i]);
    }
    os << ']';
  } else if (const auto* b = std::get_if<BoundedScalarPoint>(&p)) {
    os << ",\"" << est_key << "\":" << format_double(b->value);
    if (domain_written && !*domain_written) {
      os << ",\"domain\":[" << format_double(b->lo) << ',' << format_double(b->hi) << ']';
      *domain_written = true;
    }
  } else {
    const auto& e = std::get<Empirical1DPoint>(p);
    os << ",\"" << est_key << "\":[";
    for (std::size_t i = 0; i < e.samples.size(); ++i) {
      if (i) os << ',';
      os << format_double(e.samples[i]);
    }
    os << ']';
    if (e.sigma && domain_written && !*domain_written) {
      os << ",\"sigma\":" << format_double(*e.sigma);
      *domain_written = true;
    }
  }
}

}  // namespace

void emit_dataset(const Dataset& d, std::ostream& out) {
  for (const auto& rec : d.records) {
    std::ostringstream os;
    os << "{\"scenario_id\":\"" << escape_json(rec.scenario_id) << "\",\"family\":\""
       << family_string(rec.p_hat) << "\",\"n\":" << rec.n << ",\"k\":" << rec.k;
    bool domain_written = false;
    append_point(os, rec.p_hat, "p_hat", &domain_written);
    append_point(os, rec.q_hat, "q_hat", &domain_written);
    if (rec.q_hat_2) append_point(os, *rec.q_hat_2, "q_hat_2", &domain_written);
    os << "}";
    out << os.str() << "\n";
  }
}

void emit_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::IoFailure, "cannot write " + path.string());
  emit_dataset(d, out);
}

std::vector<std::filesystem::path> emit_report(const CalibrationReport& r,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  json j;
  j["kind"] = "calibration";
  j["tool_version"] = r.tool_version;
  j["timestamp"] = r.timestamp;
  j["input_hash"] = r.input_hash;
  j["m"] = r.m;
  j["params"] = params_to_json(r.params);
  j["curve"] = r.curve.values;
  j["lower_curve"] = r.lower_curve.values;
  j["auc_cal"] = r.auc;
  json cv = json::array();
  for (const auto& [alpha, value] : r.cvar) cv.push_back({{"alpha", alpha}, {"value", value}});
  j["cvar_cal"] = cv;
  json table = json::array();
  for (const auto& row : r.coverage_table) {
    table.push_back({{"alpha", row.alpha},
                     {"threshold", row.threshold},
                     {"raw", row.raw},
                     {"clamped", row.clamped},
                     {"vacuous", row.vacuous}});
  }
  j["coverage_table"] = table;
  j["warnings"] = r.warnings;
  const auto report_path = out_dir / "report.json";
  write_text(report_path, dump_json(j));
  written.push_back(report_path);

  std::ostringstream alpha_csv;
  alpha_csv << "alpha,threshold,guaranteed_raw,guaranteed_clamped,vacuous\n";
  for (const auto& row : r.coverage_table) {
    alpha_csv << format_double(row.alpha) << ',' << format_double(row.threshold) << ','
              << format_double(row.raw) << ',' << format_double(row.clamped) << ','
              << (row.vacuous ? 1 : 0) << "\n";
  }
  const auto alpha_path = out_dir / "curve_alpha.csv";
  write_text(alpha_path, alpha_csv.str());
  written.push_back(alpha_path);

  std::ostringstream cal_csv;
  cal_csv << "tau,v_cal\n";
  for (const auto& row : r.coverage_table) {
    const double tau = row.alpha;  // reuse the centesimal grid for tau
    cal_csv << format_double(tau) << ',' << format_double(calibrated_curve(r.curve, tau)) << "\n";
  }
  const auto cal_path = out_dir / "curve_cal.csv";
  write_text(cal_path, cal_csv.str());
  written.push_back(cal_path);

  std::ostringstream summary;
  summary << "calibration summary\n";
  summary << "  scenarios (m): " << r.m << "\n";
  summary << "  gamma: " << format_double_short(r.params.gamma) << "  eta: "
          << format_double_short(r.params.eta) << "  loss: " << loss_name(r.params.loss.kind)
          << "  mode: " << gap_mode_name(r.params.mode) << "\n";
  summary << "  auc_cal: " << format_double_short(r.auc) << "\n";
  for (const auto& [alpha, value] : r.cvar) {
    summary << "  cvar_cal[" << format_double_short(alpha) << "]: " << format_double_short(value) << "\n";
  }
  for (const auto& row : r.coverage_table) {
    // highlight the decile rows in the human-readable view
    const double scaled = row.alpha * 10.0;
    if (std::abs(scaled - std::round(scaled)) > 1e-9) continue;
    summary << "  alpha " << format_double_short(row.alpha) << ": threshold "
            << format_double_short(row.threshold) << ", guaranteed coverage "
            << format_double_short(row.clamped) << (row.vacuous ? " [vacuous at this m]" : "") << "\n";
  }
  for (const auto& w : r.warnings) summary << "  warning: " << w << "\n";
  const auto summary_path = out_dir / "summary.txt";
  write_text(summary_path, summary.str());
  written.push_back(summary_path);
  return written;
}

std::vector<std::filesystem::path> emit_report(const PairwiseReport& r,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  json j;
  j["kind"] = "pairwise";
  j["tool_version"] = r.tool_version;
  j["timestamp"] = r.timestamp;
  j["input_hash"] = r.input_hash;
  j["m"] = r.m;
  j["gamma"] = r.params.gamma;
  j["eta"] = r.params.eta;
  j["loss"] = loss_name(r.params.loss.kind);
  j["beta_smooth"] = r.params.loss.beta_smooth;
  j["u_curve"] = r.u_curve.values;
  j["plug_in_deltas"] = r.plug_in_deltas;
  json table = json::array();
  for (const auto& row : r.table) {
    table.push_back({{"alpha", row.alpha},
                     {"threshold", row.threshold},
                     {"raw_fraction", row.raw_fraction},
                     {"certified_fraction", row.certified_fraction},
                     {"certified", row.certified},
                     {"tie", row.tie}});
  }
  j["dominance_table"] = table;
  j["warnings"] = r.warnings;
  const auto report_path = out_dir / "report.json";
  write_text(report_path, dump_json(j));
  written.push_back(report_path);

  std::ostringstream csv;
  csv << "alpha,threshold,raw_fraction,certified_fraction,certified,tie\n";
  for (const auto& row : r.table) {
    csv << format_double(row.alpha) << ',' << format_double(row.threshold) << ','
        << format_double(row.raw_fraction) << ',' << format_double(row.certified_fraction) << ','
        << (row.certified ? 1 : 0) << ',' << (row.tie ? 1 : 0) << "\n";
  }
  const auto csv_path = out_dir / "dominance.csv";
  write_text(csv_path, csv.str());
  written.push_back(csv_path);

  std::ostringstream summary;
  summary << "pairwise comparison summary\n";
  summary << "  scenarios (m): " << r.m << "\n";
  summary << "  loss: " << loss_name(r.params.loss.kind) << "  gamma: "
          << format_double_short(r.params.gamma) << "  eta: " << format_double_short(r.params.eta) << "\n";
  for (const auto& row : r.table) {
    const double scaled = row.alpha * 10.0;
    if (std::abs(scaled - std::round(scaled)) > 1e-9) continue;
    summary << "  alpha " << format_double_short(row.alpha) << ": threshold "
            << format_double_short(row.threshold);
    if (row.certified) {
      summary << " -> simulator 1 at least as good as simulator 2 on >= "
              << format_double_short(row.certified_fraction) << " of scenarios"
              << (row.tie ? " [tie]" : "");
    } else {
      summary << " -> no certificate";
    }
    summary << "\n";
  }
  for (const auto& w : r.warnings) summary << "  warning: " << w << "\n";
  const auto summary_path = out_dir / "summary.txt";
  write_text(summary_path, summary.str());
  written.push_back(summary_path);
  return written;
}

std::vector<std::filesystem::path> emit_band(const CalibrationReport& r, const BandTable& t,
                                             const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;

  std::ostringstream csv;
  csv << "tau,band_lo,band_hi,lo_at_minimum\n";
  for (std::size_t i = 0; i < t.taus.size(); ++i) {
    csv << format_double(t.taus[i]) << ',' << format_double(t.points[i].lo) << ','
        << format_double(t.points[i].hi) << ',' << (t.points[i].lo_at_minimum ? 1 : 0) << "\n";
  }
  const auto csv_path = out_dir / "band.csv";
  write_text(csv_path, csv.str());
  written.push_back(csv_path);

  json j;
  j["kind"] = "band";
  j["tool_version"] = r.tool_version;
  j["timestamp"] = r.timestamp;
  j["input_hash"] = r.input_hash;
  j["m"] = r.m;
  j["gamma"] = t.gamma;
  j["params"] = params_to_json(r.params);
  j["note"] =
      "upper side carries a vanishing o(1) term in m; the band is intrinsically "
      "conservative near tau = 0 and tau = 1";
  json rows = json::array();
  for (std::size_t i = 0; i < t.taus.size(); ++i) {
    rows.push_back({{"tau", t.taus[i]},
                    {"lo", t.points[i].lo},
                    {"hi", t.points[i].hi},
                    {"lo_at_minimum", t.points[i].lo_at_minimum}});
  }
  j["band"] = rows;
  j["warnings"] = r.warnings;
  const auto report_path = out_dir / "report.json";
  write_text(report_path, dump_json(j));
  written.push_back(report_path);
  return written;
}

std::vector<std::filesystem::path> emit_coverage(const CoverageResult& r,
                                                 const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  csv << "alpha,mean_holdout_coverage,frac_replications_meeting_bound,raw_bound\n";
  for (const auto& row : r.rows) {
    csv << format_double(row.alpha) << ',' << format_double(row.mean_holdout_coverage) << ','
        << format_double(row.frac_replications_meeting_bound) << ','
        << format_double(row.raw_bound) << "\n";
  }
  const auto path = out_dir / "coverage.csv";
  write_text(path, csv.str());
  return {path};
}

std::vector<std::filesystem::path> emit_tightness(const TightnessResult& r,
                                                  const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  csv << "n,mean_sup_distance\n";
  for (const auto& row : r.rows) {
    csv << row.n << ',' << format_double(row.mean_sup_distance) << "\n";
  }
  const auto path = out_dir / "tightness.csv";
  write_text(path, csv.str());
  return {path};
}

std::vector<std::filesystem::path> emit_band_experiment(const BandExperimentResult& r,
                                                        const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::ostringstream csv;
  csv << "tau,lower_violation_rate,upper_violation_rate\n";
  for (const auto& row : r.rows) {
    csv << format_double(row.tau) << ',' << format_double(row.lower_violation_rate) << ','
        << format_double(row.upper_violation_rate) << "\n";
  }
  csv << "# replication_lower_violation_rate,"
      << format_double(r.replication_lower_violation_rate) << "\n";
  csv << "# sandwich_ok_rate," << format_double(r.sandwich_ok_rate) << "\n";
  const auto path = out_dir / "band_experiment.csv";
  write_text(path, csv.str());
  return {path};
}

std::vector<std::filesystem::path> emit_region(const RegionDescriptor& r,
                                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  json j;
  j["kind"] = "new-scenario-region";
  j["tau"] = r.tau;
  j["loss"] = loss_name(r.loss.kind);
  j["beta_smooth"] = r.loss.beta_smooth;
  j["description"] = r.description;
  if (r.has_interval) {
    j["interval"] = {r.interval_lo, r.interval_hi};
  }
  const auto path = out_dir / "region.json";
  write_text(path, dump_json(j));
  return {path};
}

}  // namespace simgap
