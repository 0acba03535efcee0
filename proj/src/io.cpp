#include "hybrid_id/io.hpp"

#include "hybrid_id/errors.hpp"
#include "hybrid_id/random.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace hybrid_id {

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), end);
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        out.push_back(trim(cell));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

double parse_number(const std::string& text, const fs::path& path, std::size_t line) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(v)) {
        throw ParseError(path.string() + ": '" + text + "' is not a finite number", line);
    }
    return v;
}

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DatasetError("cannot open '" + path.string() + "'");
    }
    return in;
}

std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    return out;
}

} // namespace

TimeSeries read_series_csv(const fs::path& path) {
    auto in = open_input(path);
    TimeSeries series;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        if (!header_seen) {
            if (cells.size() != 2 || cells[0] != "time" || cells[1] != "value") {
                throw ParseError(path.string() + ": expected header 'time,value'", line_no);
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 2) {
            throw ParseError(path.string() + ": expected 2 columns, found " + std::to_string(cells.size()), line_no);
        }
        const double t = parse_number(cells[0], path, line_no);
        const double v = parse_number(cells[1], path, line_no);
        if (!series.times.empty() && !(t > series.times.back())) {
            throw ValidationError(path.string() + ": time not strictly increasing at line " + std::to_string(line_no));
        }
        series.times.push_back(t);
        series.values.push_back(v);
    }
    if (!header_seen) {
        throw ParseError(path.string() + ": empty file", line_no);
    }
    return series;
}

void write_series_csv(const fs::path& path, const std::vector<double>& times, const std::vector<double>& values) {
    if (times.size() != values.size()) {
        throw DimensionError("write_series_csv: times and values differ in length");
    }
    auto out = open_output(path);
    out << "time,value\n";
    for (std::size_t i = 0; i < times.size(); ++i) {
        out << format_double(times[i]) << ',' << format_double(values[i]) << '\n';
    }
}

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    auto in = open_input(manifest);
    std::vector<ManifestEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split_csv(line);
        if (!header_seen) {
            if (cells.size() != 3 || cells[0] != "test_id" || cells[1] != "sensor_id" || cells[2] != "path") {
                throw ParseError(manifest.string() + ": expected header 'test_id,sensor_id,path'", line_no);
            }
            header_seen = true;
            continue;
        }
        if (cells.size() != 3 || cells[0].empty() || cells[1].empty() || cells[2].empty()) {
            throw ParseError(manifest.string() + ": expected 3 non-empty columns", line_no);
        }
        entries.push_back({cells[0], cells[1], cells[2]});
    }
    if (!header_seen) {
        throw ParseError(manifest.string() + ": empty manifest", line_no);
    }
    return entries;
}

ExperimentSet load_dataset(const fs::path& manifest, const std::map<std::string, Loading>& loadings,
                           const std::map<std::pair<std::string, std::string>, double>& gains) {
    const auto entries = read_manifest(manifest);
    const fs::path base = manifest.parent_path();

    std::vector<std::string> order;
    std::map<std::string, std::pair<std::vector<SensorDefinition>, std::vector<MeasurementSeries>>> grouped;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& entry : entries) {
        if (!seen.insert({entry.test_id, entry.sensor_id}).second) {
            throw DatasetError("manifest '" + manifest.string() + "' lists test '" + entry.test_id + "', sensor '" +
                               entry.sensor_id + "' twice");
        }
        const fs::path file = entry.path.is_absolute() ? entry.path : base / entry.path;
        if (!fs::exists(file)) {
            throw DatasetError("data file '" + file.string() + "' listed in the manifest does not exist");
        }
        const auto series = read_series_csv(file);
        if (!grouped.contains(entry.test_id)) {
            order.push_back(entry.test_id);
        }
        auto& [sensors, measured] = grouped[entry.test_id];
        SensorDefinition sensor{entry.sensor_id, series.times, 1.0};
        if (auto g = gains.find({entry.test_id, entry.sensor_id}); g != gains.end()) {
            sensor.gain = g->second;
        }
        sensors.push_back(std::move(sensor));
        measured.push_back({entry.sensor_id, series.values});
    }

    std::vector<Experiment> experiments;
    for (const auto& id : order) {
        auto& [sensors, measured] = grouped[id];
        Loading loading;
        if (auto it = loadings.find(id); it != loadings.end()) {
            loading = it->second;
        }
        experiments.push_back({TestDefinition(id, std::move(sensors), std::move(loading)), std::move(measured)});
    }
    return ExperimentSet(std::move(experiments));
}

fs::path write_dataset(const ExperimentSet& dataset, const fs::path& directory) {
    fs::create_directories(directory);
    const fs::path manifest = directory / "manifest.csv";
    auto out = open_output(manifest);
    out << "test_id,sensor_id,path\n";
    for (const auto& e : dataset.experiments()) {
        for (const auto& sensor : e.test.sensors()) {
            const std::string file = e.test.id() + "__" + sensor.id + ".csv";
            write_series_csv(directory / file, sensor.times, dataset.series(e.test.id(), sensor.id).values);
            out << e.test.id() << ',' << sensor.id << ',' << file << '\n';
        }
    }
    return manifest;
}

ExperimentSet generate_synthetic(const ForwardModel& model, const Vector& truth,
                                 const std::vector<TestDefinition>& tests, double noise_std, std::uint64_t seed) {
    if (!(noise_std >= 0.0)) {
        throw ConfigError("synthetic data: noise_std must be >= 0");
    }
    Rng rng(seed);
    std::vector<Experiment> experiments;
    for (const auto& test : tests) {
        Experiment e{test, {}};
        for (const auto& sensor : test.sensors()) {
            const Vector h = model.predict(truth, test, sensor.id);
            const double peak = h.cwiseAbs().maxCoeff();
            MeasurementSeries series{sensor.id, std::vector<double>(h.data(), h.data() + h.size())};
            if (noise_std > 0.0) {
                for (auto& v : series.values) {
                    v += rng.normal(0.0, noise_std * peak);
                }
            }
            e.series.push_back(std::move(series));
        }
        experiments.push_back(std::move(e));
    }
    return ExperimentSet(std::move(experiments));
}

// Reports ------------------------------------------------------------------

void write_scatter(const ScatterCloud& cloud, const fs::path& directory) {
    fs::create_directories(directory);
    for (std::size_t p = 0; p < cloud.space.count(); ++p) {
        auto out = open_output(directory / ("scatter_" + cloud.space.names()[p] + ".csv"));
        out << "value,fitness\n";
        for (auto idx : cloud.retained) {
            const auto& pt = cloud.points[idx];
            out << format_double(pt.theta[static_cast<Eigen::Index>(p)]) << ',' << format_double(pt.fitness) << '\n';
        }
    }
}

void write_classification(const ScatterCloud& cloud, const std::vector<ParameterDistribution>& classes,
                          const fs::path& path) {
    auto out = open_output(path);
    out << "parameter,label,dominant_lower,dominant_upper,threshold,retained,bin_counts\n";
    for (const auto& c : classes) {
        out << cloud.space.names()[c.parameter] << ',' << to_string(c.label) << ',';
        if (c.dominant_interval) {
            out << format_double(c.dominant_interval->first) << ',' << format_double(c.dominant_interval->second);
        } else {
            out << ',';
        }
        out << ',' << format_double(cloud.threshold) << ',' << cloud.retained.size() << ',';
        for (std::size_t b = 0; b < c.counts.size(); ++b) {
            out << (b ? " " : "") << c.counts[b];
        }
        out << '\n';
    }
}

void write_reduced_bounds(const ParameterSpace& initial, const ParameterSpace& reduced, const fs::path& path) {
    auto out = open_output(path);
    out << "parameter,initial_lower,initial_upper,reduced_lower,reduced_upper\n";
    for (std::size_t i = 0; i < initial.count(); ++i) {
        const auto p = static_cast<Eigen::Index>(i);
        out << initial.names()[i] << ',' << format_double(initial.lower()[p]) << ','
            << format_double(initial.upper()[p]) << ',' << format_double(reduced.lower()[p]) << ','
            << format_double(reduced.upper()[p]) << '\n';
    }
}

void write_solution(const std::vector<std::string>& names, const Vector& theta, double cost, const fs::path& path) {
    auto out = open_output(path);
    out << "parameter,value\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        out << names[i] << ',' << format_double(theta[static_cast<Eigen::Index>(i)]) << '\n';
    }
    out << "objective," << format_double(cost) << '\n';
}

void write_ga_trace(const std::vector<std::string>& names, const GaTrace& trace, const fs::path& path) {
    auto out = open_output(path);
    out << "generation,best_cost,mean_cost";
    for (const auto& n : names) {
        out << ',' << n;
    }
    out << '\n';
    for (const auto& g : trace.generations) {
        out << g.generation << ',' << format_double(g.best_cost) << ',' << format_double(g.mean_cost);
        for (Eigen::Index i = 0; i < g.best_genes.size(); ++i) {
            out << ',' << format_double(g.best_genes[i]);
        }
        out << '\n';
    }
}

void write_lm_trace(const LmResult& result, const fs::path& path) {
    auto out = open_output(path);
    out << "k,cost,lambda,step_norm,accepted\n";
    for (const auto& it : result.trace) {
        out << it.iteration << ',' << format_double(it.cost) << ',' << format_double(it.lambda) << ','
            << format_double(it.step_norm) << ',' << (it.accepted ? 1 : 0) << '\n';
    }
}

void write_ensemble_table(const std::vector<std::string>& names, const EnsembleReport& report, const fs::path& path) {
    auto out = open_output(path);
    out << "draw";
    for (const auto& n : names) {
        out << ',' << n;
    }
    out << ",objective\n";
    for (const auto& s : report.solutions) {
        out << (s.run + 1);
        for (Eigen::Index i = 0; i < s.theta.size(); ++i) {
            out << ',' << format_double(s.theta[i]);
        }
        out << ',' << format_double(s.cost) << '\n';
    }
    out << "Mean";
    for (Eigen::Index i = 0; i < report.mean.size(); ++i) {
        out << ',' << format_double(report.mean[i]);
    }
    out << ',' << format_double(report.cost_mean) << '\n';
    out << "Standard Deviation";
    for (Eigen::Index i = 0; i < report.std.size(); ++i) {
        out << ',' << format_double(report.std[i]);
    }
    out << ',' << format_double(report.cost_std) << '\n';
}

void write_verdict(const EnsembleReport& report, bool inconclusive, const fs::path& path) {
    auto out = open_output(path);
    out << "verdict," << to_string(report.verdict) << '\n';
    out << "inconclusive," << (inconclusive ? "true" : "false") << '\n';
    out << "response_dispersion," << format_double(report.response_dispersion) << '\n';
    out << "max_relative_distance," << format_double(report.max_relative_distance) << '\n';
    out << "successful_runs," << report.solutions.size() << '\n';
    for (const auto& f : report.failures) {
        out << "failed_run," << (f.run + 1) << ",\"" << f.message << "\"\n";
    }
}

void write_strategy_history(const StrategyResult& result, const fs::path& path) {
    auto out = open_output(path);
    const auto& names = result.initial_space.names();
    out << "stage,parameter,lower,upper,mean,std,verdict,response_dispersion\n";
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto p = static_cast<Eigen::Index>(i);
        out << "initial," << names[i] << ',' << format_double(result.initial_space.lower()[p]) << ','
            << format_double(result.initial_space.upper()[p]) << ",,,,\n";
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        const auto p = static_cast<Eigen::Index>(i);
        out << "scan_reduced," << names[i] << ',' << format_double(result.reduced_space.lower()[p]) << ','
            << format_double(result.reduced_space.upper()[p]) << ",,," << to_string(result.classes[i].label)
            << ",\n";
    }
    for (std::size_t k = 0; k < result.history.size(); ++k) {
        const auto& domain = result.domains[k];
        const auto& report = result.history[k];
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto p = static_cast<Eigen::Index>(i);
            out << "ensemble_" << k << ',' << names[i] << ',' << format_double(domain.lower()[p]) << ','
                << format_double(domain.upper()[p]) << ',' << format_double(report.mean[p]) << ','
                << format_double(report.std[p]) << ',' << to_string(report.verdict) << ','
                << format_double(report.response_dispersion) << '\n';
        }
    }
}

} // namespace hybrid_id
