#pragma once

#include "hybrid_id/ga.hpp"
#include "hybrid_id/lm.hpp"
#include "hybrid_id/model.hpp"
#include "hybrid_id/objective.hpp"
#include "hybrid_id/strategy.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hybrid_id {

struct SyntheticSpec {
    std::map<std::string, double> truth; // by parameter name of the full model
    double noise_std = 0.0;
    std::uint64_t seed = 0;
};

/// Everything one CLI invocation needs, parsed from a JSON file. Relative
/// paths are resolved against the configuration file's directory.
struct RunConfiguration {
    std::string model_name;
    std::map<std::string, double> fixed;           // parameters pinned for this stage
    std::shared_ptr<const ForwardModel> full_model; // all parameters free
    std::shared_ptr<const ForwardModel> model;      // what is identified (fixed ones removed)
    ParameterSpace space;
    std::vector<TestDefinition> tests;              // declared tests (times only needed for synthetic data)
    std::vector<std::string> stage_tests;           // optional subset used for identification
    std::optional<std::filesystem::path> manifest;
    std::optional<SyntheticSpec> synthetic;
    GaConfig ga;
    LmConfig lm;
    StrategyConfig strategy; // scan, topology, ensemble settings
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::filesystem::path output_dir;

    /// Full-model truth vector (synthetic data only).
    [[nodiscard]] Vector truth_vector() const;
    /// Measured or generated data restricted to the stage's tests.
    [[nodiscard]] ExperimentSet dataset() const;
    [[nodiscard]] Objective objective() const;
};

[[nodiscard]] RunConfiguration parse_config(const std::string& json_text, const std::filesystem::path& base_dir);
[[nodiscard]] RunConfiguration load_config(const std::filesystem::path& path);

} // namespace hybrid_id
