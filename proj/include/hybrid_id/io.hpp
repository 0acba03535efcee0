#pragma once

#include "hybrid_id/ga.hpp"
#include "hybrid_id/lm.hpp"
#include "hybrid_id/model.hpp"
#include "hybrid_id/strategy.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hybrid_id {

namespace fs = std::filesystem;

/// Shortest decimal text that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

struct TimeSeries {
    std::vector<double> times;
    std::vector<double> values;
};

/// Reads a `time,value` CSV. Malformed rows raise ParseError with the line
/// number; non-increasing times raise ValidationError naming the line.
[[nodiscard]] TimeSeries read_series_csv(const fs::path& path);
void write_series_csv(const fs::path& path, const std::vector<double>& times, const std::vector<double>& values);

struct ManifestEntry {
    std::string test_id;
    std::string sensor_id;
    fs::path path; // as written in the manifest, relative to the manifest's directory
};

[[nodiscard]] std::vector<ManifestEntry> read_manifest(const fs::path& manifest);

/// Builds an ExperimentSet from a manifest (`test_id,sensor_id,path`) of
/// per-sensor series files. Tests keep manifest order; `loadings` supplies the
/// loading description for each test id (empty Loading when absent), and
/// `gains` optional per-(test, sensor) gains.
[[nodiscard]] ExperimentSet load_dataset(const fs::path& manifest,
                                         const std::map<std::string, Loading>& loadings = {},
                                         const std::map<std::pair<std::string, std::string>, double>& gains = {});

/// Writes one series file per (test, sensor) plus `manifest.csv`; returns the manifest path.
fs::path write_dataset(const ExperimentSet& dataset, const fs::path& directory);

/// m(t_i) = h(truth, t_i) + N(0, noise_std * max|h|) per sensor.
[[nodiscard]] ExperimentSet generate_synthetic(const ForwardModel& model, const Vector& truth,
                                               const std::vector<TestDefinition>& tests, double noise_std,
                                               std::uint64_t seed);

// Reports ------------------------------------------------------------------

/// One `scatter_<name>.csv` per parameter with the retained (value, fitness) pairs.
void write_scatter(const ScatterCloud& cloud, const fs::path& directory);
void write_classification(const ScatterCloud& cloud, const std::vector<ParameterDistribution>& classes,
                          const fs::path& path);
/// parameter, initial range, reduced range.
void write_reduced_bounds(const ParameterSpace& initial, const ParameterSpace& reduced, const fs::path& path);
void write_solution(const std::vector<std::string>& names, const Vector& theta, double cost, const fs::path& path);
void write_ga_trace(const std::vector<std::string>& names, const GaTrace& trace, const fs::path& path);
void write_lm_trace(const LmResult& result, const fs::path& path);
/// draw, parameters..., objective; then Mean and Standard Deviation rows.
void write_ensemble_table(const std::vector<std::string>& names, const EnsembleReport& report, const fs::path& path);
void write_verdict(const EnsembleReport& report, bool inconclusive, const fs::path& path);
void write_strategy_history(const StrategyResult& result, const fs::path& path);

} // namespace hybrid_id
