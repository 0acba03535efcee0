#include "hybrid_id/config.hpp"

#include "hybrid_id/errors.hpp"
#include "hybrid_id/io.hpp"
#include "hybrid_id/random.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace hybrid_id {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError(where + ": expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.contains(key)) {
            throw ConfigError(where + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T require(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || obj.at(key).is_null()) {
        throw ConfigError(where + ": missing required key '" + key + "'");
    }
    return get<T>(obj, key, where, T{});
}

std::vector<double> parse_times(const json& j, const std::string& where) {
    if (j.is_array()) {
        try {
            return j.get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    check_keys(j, where, {"start", "stop", "count"});
    const auto start = require<double>(j, "start", where);
    const auto stop = require<double>(j, "stop", where);
    const auto count = require<std::size_t>(j, "count", where);
    if (count < 2 || !(stop > start)) {
        throw ConfigError(where + ": need count >= 2 and stop > start");
    }
    std::vector<double> times(count);
    for (std::size_t i = 0; i < count; ++i) {
        times[i] = start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return times;
}

Loading parse_loading(const json& t, const std::string& where) {
    Loading loading;
    loading.kind = get<std::string>(t, "kind", where, "");
    if (t.contains("steps")) {
        for (const auto& step : t.at("steps")) {
            if (!step.is_array() || step.size() != 2) {
                throw ConfigError(where + ".steps: each step is [time, stress]");
            }
            loading.steps.push_back({step[0].get<double>(), step[1].get<double>()});
        }
    }
    return loading;
}

GaConfig parse_ga(const json& j, const std::string& where, GaConfig ga) {
    check_keys(j, where,
               {"population_size", "generations", "crossover_prob", "mutation_prob", "elitism", "mutation_mode",
                "gaussian_sigma"});
    ga.population_size = get<std::size_t>(j, "population_size", where, ga.population_size);
    ga.generations = get<std::size_t>(j, "generations", where, ga.generations);
    ga.crossover_prob = get<double>(j, "crossover_prob", where, ga.crossover_prob);
    if (j.contains("mutation_prob") && !j.at("mutation_prob").is_null()) {
        ga.mutation_prob = get<double>(j, "mutation_prob", where, 0.0);
    }
    ga.elitism = get<bool>(j, "elitism", where, ga.elitism);
    const auto mode = get<std::string>(j, "mutation_mode", where, "uniform");
    if (mode == "uniform") {
        ga.mutation_mode = MutationMode::UniformRedraw;
    } else if (mode == "gaussian") {
        ga.mutation_mode = MutationMode::Gaussian;
    } else {
        throw ConfigError(where + ".mutation_mode: expected 'uniform' or 'gaussian'");
    }
    ga.gaussian_sigma = get<double>(j, "gaussian_sigma", where, ga.gaussian_sigma);
    return ga;
}

LmConfig parse_lm(const json& j, const std::string& where) {
    check_keys(j, where,
               {"lambda0", "lambda_up", "lambda_down", "lambda_max", "max_iterations", "fd_relative_step",
                "cost_tol", "step_tol"});
    LmConfig lm;
    lm.lambda0 = get<double>(j, "lambda0", where, lm.lambda0);
    lm.lambda_up = get<double>(j, "lambda_up", where, lm.lambda_up);
    lm.lambda_down = get<double>(j, "lambda_down", where, lm.lambda_down);
    lm.lambda_max = get<double>(j, "lambda_max", where, lm.lambda_max);
    lm.max_iterations = get<std::size_t>(j, "max_iterations", where, lm.max_iterations);
    lm.fd_relative_step = get<double>(j, "fd_relative_step", where, lm.fd_relative_step);
    lm.cost_tol = get<double>(j, "cost_tol", where, lm.cost_tol);
    lm.step_tol = get<double>(j, "step_tol", where, lm.step_tol);
    lm.validate();
    return lm;
}

} // namespace

Vector RunConfiguration::truth_vector() const {
    if (!synthetic) {
        throw ConfigError("config has no data.synthetic block");
    }
    const auto names = full_model->parameter_names();
    Vector truth(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = synthetic->truth.find(names[i]);
        if (it == synthetic->truth.end()) {
            auto f = fixed.find(names[i]);
            if (f == fixed.end()) {
                throw ConfigError("data.synthetic.truth: missing value for '" + names[i] + "'");
            }
            truth[static_cast<Eigen::Index>(i)] = f->second;
        } else {
            truth[static_cast<Eigen::Index>(i)] = it->second;
        }
    }
    return truth;
}

ExperimentSet RunConfiguration::dataset() const {
    ExperimentSet all;
    if (manifest) {
        std::map<std::string, Loading> loadings;
        std::map<std::pair<std::string, std::string>, double> gains;
        for (const auto& t : tests) {
            loadings[t.id()] = t.loading();
            for (const auto& s : t.sensors()) {
                gains[{t.id(), s.id}] = s.gain;
            }
        }
        all = load_dataset(*manifest, loadings, gains);
    } else {
        all = generate_synthetic(*full_model, truth_vector(), tests, synthetic->noise_std, synthetic->seed);
    }
    return stage_tests.empty() ? all : all.subset(stage_tests);
}

Objective RunConfiguration::objective() const { return Objective(model, dataset()); }

RunConfiguration parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(root, "config",
               {"seed", "threads", "output_dir", "model", "parameters", "tests", "data", "stage", "ga", "lm", "scan",
                "topology", "ensemble", "strategy"});

    RunConfiguration cfg;
    cfg.seed = require<std::uint64_t>(root, "seed", "config");
    cfg.threads = std::max<std::size_t>(1, get<std::size_t>(root, "threads", "config", 1));
    const auto out_dir = get<std::string>(root, "output_dir", "config", "out");
    cfg.output_dir = std::filesystem::path(out_dir).is_absolute() ? std::filesystem::path(out_dir) : base_dir / out_dir;

    // model
    const json& model = root.contains("model") ? root.at("model") : throw ConfigError("config: missing 'model'");
    check_keys(model, "model", {"name", "fixed"});
    cfg.model_name = require<std::string>(model, "name", "model");
    cfg.fixed = get<std::map<std::string, double>>(model, "fixed", "model", {});
    cfg.full_model = make_model(cfg.model_name);
    cfg.model = make_model(cfg.model_name, cfg.fixed);

    // parameter space
    if (!root.contains("parameters") || !root.at("parameters").is_array()) {
        throw ConfigError("config: 'parameters' must be an array of {name, lower, upper}");
    }
    std::map<std::string, std::pair<double, double>> bounds;
    for (const auto& p : root.at("parameters")) {
        check_keys(p, "parameters[]", {"name", "lower", "upper"});
        const auto name = require<std::string>(p, "name", "parameters[]");
        if (!bounds.emplace(name, std::make_pair(require<double>(p, "lower", "parameters[" + name + "]"),
                                                 require<double>(p, "upper", "parameters[" + name + "]")))
                 .second) {
            throw ConfigError("parameters: '" + name + "' listed twice");
        }
    }
    // Bounds follow the model's parameter order, whatever the file order.
    const auto names = cfg.model->parameter_names();
    Vector lower(static_cast<Eigen::Index>(names.size()));
    Vector upper(static_cast<Eigen::Index>(names.size()));
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto it = bounds.find(names[i]);
        if (it == bounds.end()) {
            throw ConfigError("parameters: no bounds for free parameter '" + names[i] + "'");
        }
        lower[static_cast<Eigen::Index>(i)] = it->second.first;
        upper[static_cast<Eigen::Index>(i)] = it->second.second;
        bounds.erase(it);
    }
    if (!bounds.empty()) {
        throw ConfigError("parameters: '" + bounds.begin()->first + "' is not a free parameter of model '" +
                          cfg.model_name + "'");
    }
    cfg.space = ParameterSpace(names, lower, upper);

    // tests
    const bool have_tests = root.contains("tests");
    if (have_tests) {
        for (const auto& t : root.at("tests")) {
            check_keys(t, "tests[]", {"id", "kind", "steps", "sensors"});
            const auto id = require<std::string>(t, "id", "tests[]");
            const std::string where = "tests[" + id + "]";
            std::vector<SensorDefinition> sensors;
            if (!t.contains("sensors") || !t.at("sensors").is_array()) {
                throw ConfigError(where + ": 'sensors' must be an array");
            }
            for (const auto& s : t.at("sensors")) {
                check_keys(s, where + ".sensors[]", {"id", "gain", "times"});
                SensorDefinition sensor;
                sensor.id = require<std::string>(s, "id", where + ".sensors[]");
                sensor.gain = get<double>(s, "gain", where + ".sensors[" + sensor.id + "]", 1.0);
                if (s.contains("times")) {
                    sensor.times = parse_times(s.at("times"), where + ".sensors[" + sensor.id + "].times");
                } else {
                    // Times come from the data files; placeholder keeps the definition valid.
                    sensor.times = {0.0, 1.0};
                }
                sensors.push_back(std::move(sensor));
            }
            try {
                cfg.tests.emplace_back(id, std::move(sensors), parse_loading(t, where));
            } catch (const ValidationError& e) {
                throw ConfigError(e.what());
            }
        }
    }

    // data
    if (!root.contains("data")) {
        throw ConfigError("config: missing 'data' (manifest or synthetic)");
    }
    const json& data = root.at("data");
    check_keys(data, "data", {"manifest", "synthetic"});
    if (data.contains("manifest") == data.contains("synthetic")) {
        throw ConfigError("data: give exactly one of 'manifest' or 'synthetic'");
    }
    if (data.contains("manifest")) {
        const std::filesystem::path m = require<std::string>(data, "manifest", "data");
        cfg.manifest = m.is_absolute() ? m : base_dir / m;
    } else {
        const json& syn = data.at("synthetic");
        check_keys(syn, "data.synthetic", {"truth", "noise_std", "seed"});
        SyntheticSpec spec;
        spec.truth = require<std::map<std::string, double>>(syn, "truth", "data.synthetic");
        spec.noise_std = get<double>(syn, "noise_std", "data.synthetic", 0.0);
        spec.seed = get<std::uint64_t>(syn, "seed", "data.synthetic", derive_seed(cfg.seed, 3));
        if (!(spec.noise_std >= 0.0)) {
            throw ConfigError("data.synthetic.noise_std must be >= 0");
        }
        if (cfg.tests.empty()) {
            throw ConfigError("data.synthetic: 'tests' with sensor times are required");
        }
        cfg.synthetic = std::move(spec);
        const Vector truth = cfg.truth_vector();
        const auto full_names = cfg.full_model->parameter_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            const auto pos = std::find(full_names.begin(), full_names.end(), names[i]) - full_names.begin();
            const double v = truth[pos];
            if (v < lower[static_cast<Eigen::Index>(i)] || v > upper[static_cast<Eigen::Index>(i)]) {
                throw ConfigError("data.synthetic.truth: '" + names[i] + "' lies outside its bounds");
            }
        }
    }

    if (root.contains("stage")) {
        const json& stage = root.at("stage");
        check_keys(stage, "stage", {"tests"});
        cfg.stage_tests = get<std::vector<std::string>>(stage, "tests", "stage", {});
    }

    // algorithms
    cfg.ga = parse_ga(root.value("ga", json::object()), "ga", GaConfig{});
    cfg.ga.seed = derive_seed(cfg.seed, 0);
    (void)cfg.ga.resolved(cfg.space.count()); // validates
    cfg.lm = parse_lm(root.value("lm", json::object()), "lm");

    const json scan = root.value("scan", json::object());
    check_keys(scan, "scan", {"runs", "retain_fraction", "population_size", "generations", "elitism"});
    auto& sc = cfg.strategy.scan;
    sc.runs = get<std::size_t>(scan, "runs", "scan", sc.runs);
    sc.retain_fraction = get<double>(scan, "retain_fraction", "scan", sc.retain_fraction);
    sc.ga.population_size = get<std::size_t>(scan, "population_size", "scan", cfg.ga.population_size);
    sc.ga.generations = get<std::size_t>(scan, "generations", "scan", cfg.ga.generations);
    sc.ga.crossover_prob = cfg.ga.crossover_prob;
    sc.ga.elitism = get<bool>(scan, "elitism", "scan", false);
    sc.seed = derive_seed(cfg.seed, 1);
    sc.threads = cfg.threads;

    const json topo = root.value("topology", json::object());
    check_keys(topo, "topology",
               {"bins", "uniform_band", "dominant_mass", "sparse_fraction", "min_width_fraction", "min_retained"});
    auto& tp = cfg.strategy.topology;
    tp.bins = get<std::size_t>(topo, "bins", "topology", tp.bins);
    tp.uniform_band = get<double>(topo, "uniform_band", "topology", tp.uniform_band);
    tp.dominant_mass = get<double>(topo, "dominant_mass", "topology", tp.dominant_mass);
    tp.sparse_fraction = get<double>(topo, "sparse_fraction", "topology", tp.sparse_fraction);
    tp.min_width_fraction = get<double>(topo, "min_width_fraction", "topology", tp.min_width_fraction);
    tp.min_retained = get<std::size_t>(topo, "min_retained", "topology", tp.min_retained);

    const json ens = root.value("ensemble", json::object());
    check_keys(ens, "ensemble", {"runs", "unique_tol", "dispersion_tol"});
    auto& en = cfg.strategy.ensemble;
    en.runs = get<std::size_t>(ens, "runs", "ensemble", en.runs);
    en.unique_tol = get<double>(ens, "unique_tol", "ensemble", en.unique_tol);
    en.dispersion_tol = get<double>(ens, "dispersion_tol", "ensemble", en.dispersion_tol);
    en.ga = cfg.ga;
    en.lm = cfg.lm;
    en.master_seed = derive_seed(cfg.seed, 2);
    en.threads = cfg.threads;
    if (en.runs < 2) {
        throw ConfigError("ensemble.runs must be >= 2");
    }

    const json strat = root.value("strategy", json::object());
    check_keys(strat, "strategy", {"max_refinements"});
    cfg.strategy.max_refinements = get<std::size_t>(strat, "max_refinements", "strategy", 5);
    return cfg;
}

RunConfiguration load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path.string() + "'");
    }
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str(), path.parent_path());
}

} // namespace hybrid_id
