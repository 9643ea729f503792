#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "shadowlab/flow.hpp"
#include "shadowlab/glue.hpp"

namespace shadowlab {

inline constexpr int kConfigVersion = 1;

/// Batch experiment. Flow entries are inline descriptors or paths to JSON
/// files (resolved against the config's directory).
struct ExperimentConfig {
  int version = kConfigVersion;
  std::string pipeline = "thm1";  // thm1 | thm2 | oriented
  json flow;
  json flow2;                     // thm2 only
  std::vector<double> d_list{0.01};
  double eps0 = 0.3;
  double eps1 = 0.04;
  double eps_rep = 0.25;          // straightening target (thm1)
  double dt = 0.0;
  double ds = 0.0;
  double delta_grid = 0.02;       // region mesh for the constants
  double slope_cap = 16.0;
  double s_window = 30.0;
  double dp_eps = 0.08;
  double T0 = 0.25;
  long n_min = -40;
  long n_max = 40;
  double r0 = 0.3;                // thm2: region radius for the first factor
  double r1 = 0.05;               // thm2
  double r2 = 0.3;                // thm2
  int max_retries = 4;
  std::vector<int> cases;         // scenario cases cycled over trials
  std::vector<int> subcases{2, 1};  // thm2 Case 2 scenarios cycled
  int trials = 1;
  std::uint64_t seed = 1;
  std::string out_csv = "report.csv";
  std::string out_json = "summary.json";
  std::string cert_dir;           // empty: no certificate files

  /// Throws a config error naming the offending field path.
  static ExperimentConfig from_json(const json& j,
                                    const std::filesystem::path& base_dir = {});
  json to_json() const;
  SearchParams search_params() const;
};

ExperimentConfig load_config(const std::filesystem::path& path);

struct ExperimentResult {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  json summary;
  bool all_pass = true;
};

/// Runs the configured pipeline; trial i uses seed + i. Nothing is written.
ExperimentResult run_trials(const ExperimentConfig& config);

/// run_trials plus the CSV report, JSON summary and certificate files.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// '.' decimal, 17 significant digits.
std::string format_double(double v);
void write_csv(std::ostream& out, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Certificate file: {"chain": ..., "certificate": ...}.
json certificate_file(const StepPseudotrajectory& xi, const ShadowingCertificate& cert);

/// Flat CSV from a certificate file: free_space (i, j, free), reparam
/// (t, h) knots, or orbit (t, coords) samples of the certificate orbit.
void export_plotdata(const std::filesystem::path& report, const std::string& kind,
                     std::ostream& out);

}  // namespace shadowlab
