// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0
//
// Metrics and experiment reproduction: classification accuracy against a
// Maximum Allowed Error (MAE) in frames, positioning-error distribution
// statistics, and a config-driven pipeline runner emitting plot-ready CSVs.

#ifndef VGLOC_EVALHARNESS_HPP
#define VGLOC_EVALHARNESS_HPP

#include <map>
#include <string>
#include <vector>

namespace vgloc::eval {

/// accuracy[m] = fraction of queries whose predicted frame index is within
/// m frames of the truth index; non-decreasing in m by construction.
struct MaeCurve {
  std::vector<double> accuracy;  // index = allowed error in frames
};

MaeCurve mae_accuracy(const std::vector<int>& predicted_frames,
                      const std::vector<int>& truth_frames, int max_mae);

/// Box-plot statistics: quartiles by linear interpolation between order
/// statistics; whiskers at 1.5*IQR clipped to the data range.
struct ErrorStats {
  double mean = 0, median = 0, q1 = 0, q3 = 0;
  double whisker_low = 0, whisker_high = 0;
  size_t n = 0;
};

ErrorStats error_stats(const std::vector<double>& errors);

void write_mae_csv(const std::string& path, const MaeCurve& curve);
MaeCurve read_mae_csv(const std::string& path);

void write_stats_csv(const std::string& path, const ErrorStats& stats);
ErrorStats read_stats_csv(const std::string& path);

/// Plain-text key=value configuration ('#' starts a comment line).
struct Config {
  std::map<std::string, std::string> kv;

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  /// Missing required key raises ConfigError naming the key.
  std::string require_key(const std::string& key) const;
};

Config load_config(const std::string& path);
Config parse_config(const std::string& text);

/// Stable content hash of the canonicalized configuration (for manifests).
std::string config_hash(const Config& cfg);

/// Execute the requested pipeline stages (config key "stages", a comma list
/// drawn from synth,train-wnn,train-cnn,localize,eval) against the artifact
/// directory named by "out". Every stage reads its inputs from and writes
/// its outputs to that directory, so stages can also run one per process.
void run_experiment(const Config& cfg);

}  // namespace vgloc::eval

#endif  // VGLOC_EVALHARNESS_HPP
