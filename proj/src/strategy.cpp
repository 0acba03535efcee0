#include "hybrid_id/strategy.hpp"

#include "hybrid_id/errors.hpp"
#include "hybrid_id/random.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hybrid_id {

// ---------------------------------------------------------------------------
// Scan
// ---------------------------------------------------------------------------

const ScatterPoint& ScatterCloud::best() const {
    if (points.empty()) {
        throw InsufficientDataError("scatter cloud is empty");
    }
    return *std::max_element(points.begin(), points.end(),
                             [](const ScatterPoint& l, const ScatterPoint& r) { return l.fitness < r.fitness; });
}

void ScatterCloud::apply_threshold(double fitness_threshold) {
    threshold = fitness_threshold;
    retained.clear();
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].fitness >= threshold) {
            retained.push_back(i);
        }
    }
}

ScatterCloud uniform_scan(const Objective& objective, const ParameterSpace& space, const ScanConfig& config) {
    if (config.runs == 0) {
        throw ConfigError("scan: runs must be positive");
    }
    if (!(config.retain_fraction > 0.0 && config.retain_fraction <= 1.0)) {
        throw ConfigError("scan: retain_fraction must lie in (0, 1]");
    }
    if (space.count() != objective.parameter_count()) {
        throw DimensionError("scan: space has " + std::to_string(space.count()) + " parameters, model expects " +
                             std::to_string(objective.parameter_count()));
    }

    std::vector<GaTrace> traces(config.runs);
    detail::parallel_for(config.runs, config.threads, [&](std::size_t run) {
        GaConfig ga = config.ga;
        ga.mutation_prob = 1.0;
        ga.seed = derive_seed(config.seed, run);
        ga.record_evaluations = true;
        ga.threads = 1;
        traces[run] = run_ga(objective, space, ga).trace;
    });

    ScatterCloud cloud;
    cloud.space = space;
    for (const auto& trace : traces) {
        for (const auto& e : trace.evaluations) {
            cloud.points.push_back({e.genes, e.cost, e.fitness});
        }
    }

    std::vector<double> fitness;
    fitness.reserve(cloud.points.size());
    for (const auto& p : cloud.points) {
        fitness.push_back(p.fitness);
    }
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(config.retain_fraction * static_cast<double>(fitness.size()))));
    std::nth_element(fitness.begin(), fitness.begin() + static_cast<std::ptrdiff_t>(keep - 1), fitness.end(),
                     std::greater<>());
    cloud.apply_threshold(fitness[keep - 1]);
    return cloud;
}

// ---------------------------------------------------------------------------
// Classification and reduction
// ---------------------------------------------------------------------------

std::string to_string(DistributionLabel label) {
    switch (label) {
    case DistributionLabel::Uniform: return "Uniform";
    case DistributionLabel::MultiPeak: return "MultiPeak";
    case DistributionLabel::Dominant: return "Dominant";
    }
    return "unknown";
}

namespace {

std::size_t bin_of(double value, double lo, double hi, std::size_t bins) {
    const double pos = (value - lo) / (hi - lo) * static_cast<double>(bins);
    if (!(pos > 0.0)) {
        return 0;
    }
    return std::min(static_cast<std::size_t>(pos), bins - 1);
}

} // namespace

ParameterDistribution classify_distribution(const ScatterCloud& cloud, std::size_t parameter,
                                            const TopologyConfig& config) {
    if (parameter >= cloud.space.count()) {
        throw DimensionError("classify: parameter index " + std::to_string(parameter) + " out of range");
    }
    if (config.bins < 2) {
        throw ConfigError("classify: need at least 2 bins");
    }
    if (cloud.retained.size() < config.min_retained) {
        throw InsufficientDataError("classify: " + std::to_string(cloud.retained.size()) +
                                    " retained points, need at least " + std::to_string(config.min_retained));
    }

    const auto p = static_cast<Eigen::Index>(parameter);
    const double lo = cloud.space.lower()[p];
    const double hi = cloud.space.upper()[p];

    ParameterDistribution out;
    out.parameter = parameter;
    out.edges.resize(config.bins + 1);
    for (std::size_t b = 0; b <= config.bins; ++b) {
        out.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(config.bins);
    }
    out.edges.back() = hi;
    out.counts.assign(config.bins, 0);
    for (auto idx : cloud.retained) {
        ++out.counts[bin_of(cloud.points[idx].theta[p], lo, hi, config.bins)];
    }

    const double total = static_cast<double>(cloud.retained.size());
    const double mean = total / static_cast<double>(config.bins);
    const bool uniform = std::all_of(out.counts.begin(), out.counts.end(), [&](std::size_t c) {
        return std::abs(static_cast<double>(c) - mean) <= config.uniform_band * mean;
    });
    if (uniform) {
        out.label = DistributionLabel::Uniform;
        return out;
    }

    // Heaviest contiguous run of above-mean bins.
    std::size_t best_start = 0;
    std::size_t best_end = 0;
    double best_mass = -1.0;
    for (std::size_t b = 0; b < config.bins;) {
        if (static_cast<double>(out.counts[b]) <= mean) {
            ++b;
            continue;
        }
        const std::size_t start = b;
        double mass = 0.0;
        while (b < config.bins && static_cast<double>(out.counts[b]) > mean) {
            mass += static_cast<double>(out.counts[b]);
            ++b;
        }
        if (mass > best_mass) {
            best_mass = mass;
            best_start = start;
            best_end = b;
        }
    }
    if (best_mass >= config.dominant_mass * total) {
        out.label = DistributionLabel::Dominant;
        out.dominant_interval = std::make_pair(out.edges[best_start], out.edges[best_end]);
    } else {
        out.label = DistributionLabel::MultiPeak;
    }
    return out;
}

std::vector<ParameterDistribution> classify_all(const ScatterCloud& cloud, const TopologyConfig& config) {
    std::vector<ParameterDistribution> out;
    for (std::size_t p = 0; p < cloud.space.count(); ++p) {
        out.push_back(classify_distribution(cloud, p, config));
    }
    return out;
}

ParameterSpace reduce_domain(const ParameterSpace& space, const std::vector<ParameterDistribution>& classes,
                             const ScatterCloud& cloud, const TopologyConfig& config) {
    if (!(cloud.space == space)) {
        throw ConfigError("reduce_domain: scatter cloud was sampled on a different domain");
    }
    if (classes.size() != space.count()) {
        throw DimensionError("reduce_domain: need one classification per parameter");
    }
    const Vector& best = cloud.best().theta;
    Vector lower = space.lower();
    Vector upper = space.upper();

    for (const auto& cls : classes) {
        if (cls.label == DistributionLabel::Uniform) {
            continue;
        }
        const auto p = static_cast<Eigen::Index>(cls.parameter);
        const std::size_t bins = cls.counts.size();
        const double total = std::accumulate(cls.counts.begin(), cls.counts.end(), 0.0);
        const double cutoff = config.sparse_fraction * total / static_cast<double>(bins);
        const std::size_t best_bin = bin_of(best[p], space.lower()[p], space.upper()[p], bins);

        std::size_t first = 0;
        while (first < best_bin && static_cast<double>(cls.counts[first]) < cutoff) {
            ++first;
        }
        std::size_t last = bins - 1;
        while (last > best_bin && static_cast<double>(cls.counts[last]) < cutoff) {
            --last;
        }
        double lo = first == 0 ? space.lower()[p] : cls.edges[first];
        double hi = last == bins - 1 ? space.upper()[p] : cls.edges[last + 1];

        const double old_width = space.width(cls.parameter);
        const double min_width = config.min_width_fraction * old_width;
        if (hi - lo < min_width) {
            const double centre = 0.5 * (lo + hi);
            lo = centre - 0.5 * min_width;
            hi = centre + 0.5 * min_width;
            if (lo < space.lower()[p]) {
                hi += space.lower()[p] - lo;
                lo = space.lower()[p];
            }
            if (hi > space.upper()[p]) {
                lo -= hi - space.upper()[p];
                hi = space.upper()[p];
            }
            lo = std::max(lo, space.lower()[p]);
        }
        lower[p] = lo;
        upper[p] = hi;
    }
    return ParameterSpace(space.names(), lower, upper);
}

// ---------------------------------------------------------------------------
// Hybrid
// ---------------------------------------------------------------------------

HybridResult run_hybrid(const Objective& objective, const ParameterSpace& space, const GaConfig& ga,
                        const LmConfig& lm) {
    HybridResult out;
    out.ga = run_ga(objective, space, ga);
    if (!std::isfinite(out.ga.best.cost)) {
        throw SolverError("hybrid: every GA individual failed to evaluate");
    }
    out.lm = run_lm(objective, out.ga.best.genes, space, lm);
    out.theta = out.lm.theta;
    out.cost = objective.cost(out.theta);
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble
// ---------------------------------------------------------------------------

std::string to_string(Verdict verdict) {
    switch (verdict) {
    case Verdict::UniqueSolution: return "UniqueSolution";
    case Verdict::LowDispersionSet: return "LowDispersionSet";
    case Verdict::RefineDomain: return "RefineDomain";
    }
    return "unknown";
}

double relative_distance(const Vector& p, const Vector& q) {
    if (p.size() != q.size()) {
        throw DimensionError("relative_distance: vectors differ in length");
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const double scale = std::max(std::abs(p[i]), std::abs(q[i]));
        if (scale > 0.0) {
            worst = std::max(worst, std::abs(p[i] - q[i]) / scale);
        }
    }
    return worst;
}

double response_dispersion(const Objective& objective, const std::vector<Vector>& solutions) {
    std::vector<Vector> responses;
    responses.reserve(solutions.size());
    for (const auto& theta : solutions) {
        responses.push_back(objective.simulate(theta));
    }
    const Vector inv_chi = objective.chi_per_entry().cwiseInverse();
    double worst = 0.0;
    for (std::size_t a = 0; a < responses.size(); ++a) {
        for (std::size_t b = a + 1; b < responses.size(); ++b) {
            const Vector diff = responses[a] - responses[b];
            const double mean_sq = diff.cwiseAbs2().cwiseProduct(inv_chi).mean();
            worst = std::max(worst, std::sqrt(mean_sq));
        }
    }
    return worst;
}

EnsembleReport summarize_ensemble(const Objective& objective, std::vector<EnsembleSolution> solutions,
                                  const EnsembleConfig& config) {
    if (solutions.size() < 2) {
        throw SolverError("ensemble: need at least 2 successful runs, got " + std::to_string(solutions.size()));
    }
    EnsembleReport report;
    const auto n = static_cast<double>(solutions.size());
    const Eigen::Index alpha = solutions.front().theta.size();

    report.mean = Vector::Zero(alpha);
    for (const auto& s : solutions) {
        report.mean += s.theta;
        report.cost_mean += s.cost;
    }
    report.mean /= n;
    report.cost_mean /= n;

    report.std = Vector::Zero(alpha);
    for (const auto& s : solutions) {
        report.std += (s.theta - report.mean).cwiseAbs2();
        report.cost_std += (s.cost - report.cost_mean) * (s.cost - report.cost_mean);
    }
    report.std = (report.std / (n - 1.0)).cwiseSqrt();
    report.cost_std = std::sqrt(report.cost_std / (n - 1.0));

    std::vector<Vector> thetas;
    for (const auto& s : solutions) {
        thetas.push_back(s.theta);
    }
    for (std::size_t a = 0; a < thetas.size(); ++a) {
        for (std::size_t b = a + 1; b < thetas.size(); ++b) {
            report.max_relative_distance = std::max(report.max_relative_distance, relative_distance(thetas[a], thetas[b]));
        }
    }
    report.response_dispersion = response_dispersion(objective, thetas);

    if (report.max_relative_distance < config.unique_tol) {
        report.verdict = Verdict::UniqueSolution;
    } else if (report.response_dispersion < config.dispersion_tol) {
        report.verdict = Verdict::LowDispersionSet;
    } else {
        report.verdict = Verdict::RefineDomain;
    }
    report.solutions = std::move(solutions);
    return report;
}

EnsembleReport ensemble_analyze(const Objective& objective, const ParameterSpace& space,
                                const EnsembleConfig& config) {
    if (config.runs < 2) {
        throw ConfigError("ensemble: runs must be >= 2");
    }
    std::vector<std::optional<EnsembleSolution>> slots(config.runs);
    std::vector<std::string> errors(config.runs);
    detail::parallel_for(config.runs, config.threads, [&](std::size_t run) {
        GaConfig ga = config.ga;
        ga.seed = derive_seed(config.master_seed, run);
        ga.record_evaluations = false;
        ga.threads = 1;
        try {
            const auto result = run_hybrid(objective, space, ga, config.lm);
            slots[run] = EnsembleSolution{run, ga.seed, result.theta, result.cost};
        } catch (const std::exception& e) {
            errors[run] = e.what();
        }
    });

    std::vector<EnsembleSolution> solutions;
    std::vector<RunFailure> failures;
    for (std::size_t run = 0; run < config.runs; ++run) {
        if (slots[run]) {
            solutions.push_back(std::move(*slots[run]));
        } else {
            failures.push_back({run, errors[run]});
        }
    }
    auto report = summarize_ensemble(objective, std::move(solutions), config);
    report.failures = std::move(failures);
    return report;
}

// ---------------------------------------------------------------------------
// Strategy loop
// ---------------------------------------------------------------------------

ParameterSpace refine_domain(const ParameterSpace& current, const EnsembleReport& report) {
    if (report.solutions.empty()) {
        throw InsufficientDataError("refine_domain: report has no solutions");
    }
    Vector lower = report.solutions.front().theta;
    Vector upper = lower;
    for (const auto& s : report.solutions) {
        lower = lower.cwiseMin(s.theta);
        upper = upper.cwiseMax(s.theta);
    }
    lower = lower.cwiseMax(current.lower());
    upper = upper.cwiseMin(current.upper());
    for (std::size_t i = 0; i < current.count(); ++i) {
        const auto p = static_cast<Eigen::Index>(i);
        // Parameters on which every run agrees still need a non-empty interval.
        const double min_width = 1e-6 * current.width(i);
        if (upper[p] - lower[p] < min_width) {
            const double centre = 0.5 * (lower[p] + upper[p]);
            lower[p] = std::max(current.lower()[p], centre - 0.5 * min_width);
            upper[p] = std::min(current.upper()[p], centre + 0.5 * min_width);
        }
    }
    return ParameterSpace(current.names(), lower, upper);
}

StrategyResult strategy_loop(const Objective& objective, const ParameterSpace& space, const StrategyConfig& config) {
    StrategyResult result;
    result.initial_space = space;
    result.cloud = uniform_scan(objective, space, config.scan);
    result.classes = classify_all(result.cloud, config.topology);
    result.reduced_space = reduce_domain(space, result.classes, result.cloud, config.topology);

    ParameterSpace domain = result.reduced_space;
    EnsembleConfig ensemble = config.ensemble;
    result.domains.push_back(domain);
    result.history.push_back(ensemble_analyze(objective, domain, ensemble));

    std::size_t refinements = 0;
    while (result.history.back().verdict == Verdict::RefineDomain && refinements < config.max_refinements) {
        ++refinements;
        domain = refine_domain(domain, result.history.back());
        ensemble.master_seed = derive_seed(config.ensemble.master_seed, refinements);
        result.domains.push_back(domain);
        result.history.push_back(ensemble_analyze(objective, domain, ensemble));
    }
    result.inconclusive = result.history.back().verdict == Verdict::RefineDomain;
    return result;
}

} // namespace hybrid_id
