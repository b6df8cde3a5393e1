#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "simgap/pairwise.hpp"
#include "simgap/synthetic.hpp"

namespace simgap {

// One scenario per JSON line. Estimates can arrive precomputed (p_hat/q_hat),
// as raw samples (gt_samples/sim_samples), or as counts (gt_counts/sim_counts).
Dataset ingest(const std::filesystem::path& path);
Dataset ingest_stream(std::istream& in, const std::string& source_name);

void emit_dataset(const Dataset& d, std::ostream& out);
void emit_dataset(const Dataset& d, const std::filesystem::path& path);

// calibrate: report.json, curve_alpha.csv, curve_cal.csv, summary.txt
std::vector<std::filesystem::path> emit_report(const CalibrationReport& r,
                                               const std::filesystem::path& out_dir);
// compare: report.json, dominance.csv, summary.txt
std::vector<std::filesystem::path> emit_report(const PairwiseReport& r,
                                               const std::filesystem::path& out_dir);

struct BandTable {
  std::vector<double> taus;
  std::vector<BandPoint> points;
  double gamma = 0.0;
};
std::vector<std::filesystem::path> emit_band(const CalibrationReport& r, const BandTable& t,
                                             const std::filesystem::path& out_dir);

std::vector<std::filesystem::path> emit_coverage(const CoverageResult& r,
                                                 const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_tightness(const TightnessResult& r,
                                                  const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_band_experiment(const BandExperimentResult& r,
                                                        const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_region(const RegionDescriptor& r,
                                               const std::filesystem::path& out_dir);

// decimal with 17 significant digits; round-trips doubles exactly
std::string format_double(double v);
// shortest decimal that round-trips; used in human-readable summaries
std::string format_double_short(double v);

}  // namespace simgap
