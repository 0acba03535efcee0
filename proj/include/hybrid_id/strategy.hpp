#pragma once

#include "hybrid_id/ga.hpp"
#include "hybrid_id/lm.hpp"
#include "hybrid_id/model.hpp"
#include "hybrid_id/objective.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace hybrid_id {

// ---------------------------------------------------------------------------
// Uniform scan and search-domain reduction
// ---------------------------------------------------------------------------

struct ScanConfig {
    std::size_t runs = 10;
    GaConfig ga = default_ga();     // mutation_prob is forced to 1 for the scan
    double retain_fraction = 0.1;   // keep the top fraction of fitness values
    std::uint64_t seed = 0;
    std::size_t threads = 1;

    static GaConfig default_ga() {
        GaConfig g;
        g.elitism = false;
        return g;
    }
};

/// Constants that turn the by-eye reading of scatter plots into rules.
struct TopologyConfig {
    std::size_t bins = 20;
    double uniform_band = 0.5;       // Uniform if every bin is within +-50% of the mean count
    double dominant_mass = 0.6;      // Dominant if one run of above-mean bins holds >= 60% of the mass
    double sparse_fraction = 0.1;    // edge bins below 10% of the mean count are trimmed
    double min_width_fraction = 0.1; // reduced width never drops below 10% of the old width
    std::size_t min_retained = 50;
};

struct ScatterPoint {
    Vector theta;
    double cost = 0.0;
    double fitness = 0.0;
};

struct ScatterCloud {
    ParameterSpace space;
    std::vector<ScatterPoint> points;
    double threshold = 0.0;
    std::vector<std::size_t> retained; // indices into points, fitness >= threshold

    [[nodiscard]] const ScatterPoint& best() const;
    // Re-derives `retained` for a new fitness cutoff.
    void apply_threshold(double fitness_threshold);
};

enum class DistributionLabel { Uniform, MultiPeak, Dominant };

[[nodiscard]] std::string to_string(DistributionLabel label);

struct ParameterDistribution {
    std::size_t parameter = 0;
    DistributionLabel label = DistributionLabel::Uniform;
    std::vector<double> edges;        // bins + 1 edges over the cloud's bounds
    std::vector<std::size_t> counts;  // retained values per bin
    std::optional<std::pair<double, double>> dominant_interval;
};

/// Runs the GA `runs` times with mutation probability 1 (pure uniform
/// sampling of the box) and pools every evaluated individual.
[[nodiscard]] ScatterCloud uniform_scan(const Objective& objective, const ParameterSpace& space,
                                        const ScanConfig& config);

[[nodiscard]] ParameterDistribution classify_distribution(const ScatterCloud& cloud, std::size_t parameter,
                                                          const TopologyConfig& config = {});

[[nodiscard]] std::vector<ParameterDistribution> classify_all(const ScatterCloud& cloud,
                                                              const TopologyConfig& config = {});

/// Trims sparse edge bins of Dominant and MultiPeak parameters. Uniform
/// parameters keep their bounds; the best scanned point always stays inside.
[[nodiscard]] ParameterSpace reduce_domain(const ParameterSpace& space,
                                           const std::vector<ParameterDistribution>& classes,
                                           const ScatterCloud& cloud, const TopologyConfig& config = {});

// ---------------------------------------------------------------------------
// Hybrid GA -> LM run
// ---------------------------------------------------------------------------

struct HybridResult {
    Vector theta;
    double cost = 0.0;
    GaResult ga;
    LmResult lm;
};

/// GA over the box, then LM started from the GA's best individual.
[[nodiscard]] HybridResult run_hybrid(const Objective& objective, const ParameterSpace& space, const GaConfig& ga,
                                      const LmConfig& lm);

// ---------------------------------------------------------------------------
// Ensemble topology analysis
// ---------------------------------------------------------------------------

enum class Verdict { UniqueSolution, LowDispersionSet, RefineDomain };

[[nodiscard]] std::string to_string(Verdict verdict);

struct EnsembleConfig {
    std::size_t runs = 10;
    GaConfig ga;
    LmConfig lm;
    std::uint64_t master_seed = 0;
    double unique_tol = 1e-3;     // max pairwise relative parameter distance for a unique solution
    double dispersion_tol = 1e-3; // response dispersion below which the set is acceptable
    std::size_t threads = 1;
};

struct EnsembleSolution {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    Vector theta;
    double cost = 0.0;
};

struct RunFailure {
    std::size_t run = 0;
    std::string message;
};

struct EnsembleReport {
    std::vector<EnsembleSolution> solutions; // ordered by run index
    std::vector<RunFailure> failures;
    Vector mean;
    Vector std;                 // sample standard deviation (n - 1)
    double response_dispersion = 0.0;
    double max_relative_distance = 0.0;
    double cost_mean = 0.0;
    double cost_std = 0.0;
    Verdict verdict = Verdict::UniqueSolution;
};

/// Largest componentwise |p_i - q_i| / max(|p_i|, |q_i|).
[[nodiscard]] double relative_distance(const Vector& p, const Vector& q);

/// Max over solution pairs of sqrt(mean_i (h_p - h_q)^2 / chi), chi per sensor.
[[nodiscard]] double response_dispersion(const Objective& objective, const std::vector<Vector>& solutions);

/// Mean, sample std, dispersion and verdict for a finished set of solutions.
[[nodiscard]] EnsembleReport summarize_ensemble(const Objective& objective, std::vector<EnsembleSolution> solutions,
                                                const EnsembleConfig& config);

/// `runs` independent hybrid runs; run r uses seed derive_seed(master_seed, r).
[[nodiscard]] EnsembleReport ensemble_analyze(const Objective& objective, const ParameterSpace& space,
                                              const EnsembleConfig& config);

// ---------------------------------------------------------------------------
// Full identification loop
// ---------------------------------------------------------------------------

struct StrategyConfig {
    ScanConfig scan;
    TopologyConfig topology;
    EnsembleConfig ensemble;
    std::size_t max_refinements = 5;
};

struct StrategyResult {
    ParameterSpace initial_space;
    ScatterCloud cloud;
    std::vector<ParameterDistribution> classes;
    ParameterSpace reduced_space;
    std::vector<ParameterSpace> domains;    // domain used by each ensemble
    std::vector<EnsembleReport> history;    // one per ensemble, the last is final
    bool inconclusive = false;

    [[nodiscard]] const EnsembleReport& final_report() const { return history.back(); }
};

/// New domain from the extreme values of each parameter over the solutions,
/// intersected with the current domain.
[[nodiscard]] ParameterSpace refine_domain(const ParameterSpace& current, const EnsembleReport& report);

/// Scan, classify and reduce; then ensembles on successively refined domains
/// until the verdict is no longer RefineDomain or max_refinements is hit.
[[nodiscard]] StrategyResult strategy_loop(const Objective& objective, const ParameterSpace& space,
                                           const StrategyConfig& config);

} // namespace hybrid_id
