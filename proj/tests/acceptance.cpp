// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.
//
// usage: acceptance <path-to-hybrid-id> <scratch-dir>

#include "hybrid_id/config.hpp"
#include "hybrid_id/errors.hpp"
#include "hybrid_id/ga.hpp"
#include "hybrid_id/io.hpp"
#include "hybrid_id/lm.hpp"
#include "hybrid_id/objective.hpp"
#include "hybrid_id/random.hpp"
#include "hybrid_id/strategy.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

using namespace hybrid_id;

namespace {

const fs::path kConfigs = HYBRID_ID_CONFIG_DIR;

struct Outcome {
    bool pass = false;
    std::string detail;
};

Vector vec(std::initializer_list<double> v) {
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

std::string sci(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << v;
    return os.str();
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 1. Affine residuals: the first accepted step lands on the solution.
Outcome lm_quadratic_exactness() {
    Matrix A(6, 4);
    A << 2, 0.5, 0, 1, -1, 3, 1, 0, 0, 1, 4, -2, 1, 1, 1, 1, 0.3, -0.7, 2, 5, 4, 0, -1, 0.5;
    const Vector c = vec({1.5, -0.25, 3.0, -6.5});
    const Vector b = A * c;
    const ResidualFunction r = [&](const Vector& t) -> Vector { return A * t - b; };
    const ParameterSpace space({"p0", "p1", "p2", "p3"}, Vector::Constant(4, -10), Vector::Constant(4, 10));

    // Worst first-step error and final cost over 100 random starts.
    auto sweep = [&](double lambda0, double fd_step) {
        LmConfig cfg;
        cfg.lambda0 = lambda0;
        cfg.fd_relative_step = fd_step;
        Rng rng(1);
        double worst_step = 0.0;
        double worst_cost = 0.0;
        for (int k = 0; k < 100; ++k) {
            Vector start(4);
            for (Eigen::Index i = 0; i < 4; ++i) {
                start[i] = rng.uniform(-10, 10);
            }
            const auto res = run_lm(r, start, space, cfg);
            if (res.accepted_path.size() < 2) {
                return std::make_pair(std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity());
            }
            const Vector first = res.accepted_path[1];
            worst_step = std::max(worst_step, (first - c).cwiseAbs().cwiseQuotient(c.cwiseAbs()).maxCoeff());
            worst_cost = std::max(worst_cost, res.cost);
        }
        return std::make_pair(worst_step, worst_cost);
    };
    // Forward differences are exact for affine residuals up to roundoff of order eps*|r|/h, so a
    // wide step isolates the solver from the Jacobian. The default step is reported alongside.
    const double fd_wide = 1e-3;
    const LmConfig defaults;
    const auto [step, cost] = sweep(1e-12, fd_wide);
    const auto [step_def, cost_def] = sweep(1e-12, defaults.fd_relative_step);
    const auto [step8, cost8] = sweep(1e-8, fd_wide);

    // Damping shifts the step by about lambda * |inverse of the unit-diagonal hessian|.
    const Matrix H = A.transpose() * A;
    const Vector d = H.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix Hn = d.asDiagonal() * H * d.asDiagonal();
    const double min_eig = Eigen::SelfAdjointEigenSolver<Matrix>(Hn).eigenvalues().minCoeff();

    return {step <= 1e-8 && cost < 1e-20 && cost_def < 1e-20,
            "100 starts, lambda0 = 1e-12, fd step 1e-3: max first-step relative error " + sci(step) +
                " (<= 1e-8), max final f " + sci(cost) + " (< 1e-20); default fd step: final f " + sci(cost_def) +
                " (< 1e-20), first-step error " + sci(step_def) + " (info); lambda0 = 1e-8: first-step error " +
                sci(step8) + ", final f " + sci(cost8) + ", damping scale 1e-8/min eig " + sci(1e-8 / min_eig) +
                " (info)"};
}

// 2. FD Jacobian against the closed-form derivatives of creep3.
Outcome jacobian_validation() {
    const auto model = make_model("creep3");
    const auto cfg = load_config(kConfigs / "creep3.json");
    const auto& space = cfg.space;
    Rng rng(2);
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        Vector theta(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            const double w = space.width(static_cast<std::size_t>(i));
            theta[i] = rng.uniform(space.lower()[i] + 0.01 * w, space.upper()[i] - 0.01 * w);
        }
        for (const auto& test : cfg.tests) {
            for (const auto& s : test.sensors()) {
                const ResidualFunction h = [&](const Vector& t) { return model->predict(t, test, s.id); };
                const Matrix fd = fd_jacobian(h, theta, space, cfg.lm.fd_relative_step);
                const Matrix exact = *model->analytic_jacobian(theta, test, s.id);
                for (Eigen::Index j = 0; j < 3; ++j) {
                    const double scale = exact.col(j).cwiseAbs().maxCoeff();
                    worst = std::max(worst, (fd.col(j) - exact.col(j)).cwiseAbs().maxCoeff() / scale);
                }
            }
        }
    }
    return {worst <= 1e-4, "20 interior points: max relative error " + sci(worst) + " (<= 1e-4)"};
}

// 3. Crossover closure and sum preservation.
Outcome crossover_invariants() {
    const ParameterSpace space({"u", "v", "w"}, vec({-3, 100, -1e6}), vec({7, 1e5, -1e-3}));
    Rng rng(3);
    std::size_t closure_violations = 0;
    double worst_ulps = 0.0;
    for (int k = 0; k < 10000; ++k) {
        Vector p(3);
        Vector q(3);
        for (Eigen::Index i = 0; i < 3; ++i) {
            p[i] = rng.uniform(space.lower()[i], space.upper()[i]);
            q[i] = rng.uniform(space.lower()[i], space.upper()[i]);
        }
        const double a = rng.uniform01();
        const auto [y1, y2] = arithmetic_crossover(p, q, a);
        for (Eigen::Index i = 0; i < 3; ++i) {
            const double lo = std::min(p[i], q[i]);
            const double hi = std::max(p[i], q[i]);
            if (y1[i] < lo || y1[i] > hi || y2[i] < lo || y2[i] > hi) {
                ++closure_violations;
            }
            const long double drift =
                (static_cast<long double>(y1[i]) + y2[i]) - (static_cast<long double>(p[i]) + q[i]);
            const double big = std::max(std::abs(p[i]), std::abs(q[i]));
            const double ulp = std::nextafter(big, INFINITY) - big;
            worst_ulps = std::max(worst_ulps, static_cast<double>(std::abs(drift)) / ulp);
        }
        if (!space.contains(y1) || !space.contains(y2)) {
            ++closure_violations;
        }
    }
    return {closure_violations == 0 && worst_ulps <= 1.0,
            "10^4 pairs: closure violations " + std::to_string(closure_violations) +
                ", max sum drift " + std::to_string(worst_ulps) + " ulp (<= 1)"};
}

// 4. Scaling one sensor's data and predictions leaves the cost unchanged.
Outcome cost_dimensionless() {
    const auto cfg = load_config(kConfigs / "creep3.json");
    const auto model = cfg.model;
    const auto data = generate_synthetic(*model, vec({1000, 1000, 5}), cfg.tests, 0.01, 4);
    const Vector theta = vec({1100, 800, 4});
    const double base = cost_multi(theta, *model, data).total;

    std::vector<Experiment> scaled;
    for (const auto& e : data.experiments()) {
        auto sensors = e.test.sensors();
        auto series = e.series;
        if (e.test.id() == "recovery") {
            sensors[0].gain *= 1e3;
            for (auto& v : series[0].values) {
                v *= 1e3;
            }
        }
        scaled.push_back({TestDefinition(e.test.id(), sensors, e.test.loading()), series});
    }
    const double after = cost_multi(theta, *model, ExperimentSet(scaled)).total;
    const double rel = std::abs(after - base) / base;
    return {rel < 1e-12, "scale 10^3 on one sensor: relative change " + sci(rel) + " (< 1e-12)"};
}

// 5. Hybrid runs on noise-free creep3 data recover the truth.
Outcome end_to_end() {
    const auto cfg = load_config(kConfigs / "creep3.json");
    const auto objective = cfg.objective();
    const Vector truth = cfg.truth_vector();
    int hits = 0;
    double worst = 0.0;
    const auto ga_used = cfg.ga.resolved(cfg.space.count());
    for (std::uint64_t run = 0; run < 10; ++run) {
        GaConfig ga = cfg.ga;
        ga.seed = derive_seed(cfg.seed, 100 + run);
        const auto r = run_hybrid(objective, cfg.space, ga, cfg.lm);
        const double rel = (r.theta - truth).cwiseAbs().cwiseQuotient(truth.cwiseAbs()).maxCoeff();
        worst = std::max(worst, rel);
        hits += rel <= 1e-3 ? 1 : 0;
    }
    return {hits >= 9, "population " + std::to_string(ga_used.population_size) + ", " +
                           std::to_string(ga_used.generations) + " generations: " + std::to_string(hits) +
                           "/10 runs within 1e-3 (need >= 9), worst relative error " + sci(worst)};
}

// 6. Restricted vs redundant ensembles.
Outcome dispersion_contrast() {
    const auto rcfg = load_config(kConfigs / "sloppy_restricted.json");
    const auto dcfg = load_config(kConfigs / "sloppy_redundant.json");
    auto ens = rcfg.strategy.ensemble;
    const auto restricted = ensemble_analyze(rcfg.objective(), rcfg.space, ens);
    const auto redundant = ensemble_analyze(dcfg.objective(), dcfg.space, ens);

    // a and b enter the restricted response only through a*b; d not at all.
    double min_ratio = INFINITY;
    for (Eigen::Index i : {0, 1, 3}) {
        min_ratio = std::min(min_ratio, restricted.std[i] / redundant.std[i]);
    }
    // Dispersions below 1% of the tolerance are indistinguishable from zero.
    const double floor = 1e-2 * ens.dispersion_tol;
    const double dr = std::max(restricted.response_dispersion, floor);
    const double dd = std::max(redundant.response_dispersion, floor);
    const double disp_ratio = std::max(dr, dd) / std::min(dr, dd);
    const double obj_ratio = std::max(restricted.cost_mean, redundant.cost_mean) /
                             std::min(restricted.cost_mean, redundant.cost_mean);

    std::ostringstream os;
    os << "std(a,b,d) restricted/redundant min ratio " << sci(min_ratio) << " (>= 2); dispersion "
       << sci(restricted.response_dispersion) << " vs " << sci(redundant.response_dispersion) << ", ratio "
       << std::fixed << std::setprecision(2) << disp_ratio << " (<= 10, floor " << sci(floor) << "); mean objective "
       << sci(restricted.cost_mean) << " vs " << sci(redundant.cost_mean) << ", ratio " << std::fixed
       << std::setprecision(2) << obj_ratio << " (<= 10)";
    return {min_ratio >= 2.0 && disp_ratio <= 10.0 && obj_ratio <= 10.0, os.str()};
}

// 7. Scan reduction on creep3 with the truth at the centre of the box.
Outcome domain_reduction() {
    const auto cfg = load_config(kConfigs / "creep3.json");
    const Vector truth = cfg.truth_vector();
    const auto objective = cfg.objective();
    const auto cloud = uniform_scan(objective, cfg.space, cfg.strategy.scan);
    const auto classes = classify_all(cloud, cfg.strategy.topology);
    const auto reduced = reduce_domain(cfg.space, classes, cloud, cfg.strategy.topology);

    bool ok = reduced.contains(truth);
    std::ostringstream os;
    os << "contains truth " << (reduced.contains(truth) ? "yes" : "no") << "; width fraction";
    for (std::size_t i = 0; i < cfg.space.count(); ++i) {
        const double frac = reduced.width(i) / cfg.space.width(i);
        ok = ok && frac <= 0.6;
        os << ' ' << cfg.space.names()[i] << '=' << std::fixed << std::setprecision(3) << frac << " ("
           << to_string(classes[i].label) << ')';
    }
    os << " (each <= 0.6)";
    return {ok, os.str()};
}

// Cost independent of theta.
class ConstantModel final : public ForwardModel {
public:
    std::string name() const override { return "constant"; }
    std::vector<std::string> parameter_names() const override { return {"x", "y"}; }
    Vector predict(const Vector&, const TestDefinition& test, const std::string& sensor_id) const override {
        return Vector::Ones(static_cast<Eigen::Index>(test.sensor(sensor_id).times.size()));
    }
};

// 8. Scan of a constant cost is uniform.
Outcome scan_uniformity() {
    const TestDefinition test("t", {{"s", {0, 1, 2}, 1.0}}, Loading{});
    const Objective objective(std::make_shared<ConstantModel>(), ExperimentSet({{test, {{"s", {3, 3, 3}}}}}));
    const ParameterSpace space({"x", "y"}, vec({-5, 10}), vec({5, 1000}));
    ScanConfig cfg;
    cfg.seed = 8;
    cfg.ga.population_size = 20;
    const auto cloud = uniform_scan(objective, space, cfg);
    if (cloud.retained.size() < 5000) {
        return {false, "only " + std::to_string(cloud.retained.size()) + " retained points"};
    }
    const double expected = static_cast<double>(cloud.retained.size()) / 20.0;
    double worst = 0.0;
    for (const auto& cls : classify_all(cloud)) {
        for (auto c : cls.counts) {
            worst = std::max(worst, std::abs(static_cast<double>(c) - expected) / expected);
        }
    }
    return {worst <= 0.3, std::to_string(cloud.retained.size()) + " retained points: max bin deviation " +
                              std::to_string(100.0 * worst) + "% (<= 30%)"};
}

// 9. Two `ensemble` invocations produce identical bytes.
Outcome cli_determinism(const std::string& binary, const fs::path& scratch) {
    const auto config = kConfigs / "creep3.json";
    const fs::path out1 = scratch / "ensemble_a";
    const fs::path out2 = scratch / "ensemble_b";
    fs::remove_all(out1);
    fs::remove_all(out2);
    for (const auto& out : {out1, out2}) {
        const std::string cmd = "\"" + binary + "\" ensemble \"" + config.string() + "\" --out \"" + out.string() +
                                "\" > \"" + (out.string() + ".log") + "\" 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            return {false, "command failed: " + cmd};
        }
    }
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(out1)) {
        const auto other = out2 / entry.path().filename();
        if (!fs::exists(other) || read_bytes(entry.path()) != read_bytes(other)) {
            return {false, "file differs: " + entry.path().filename().string()};
        }
        ++compared;
    }
    return {compared >= 2, std::to_string(compared) + " report files byte-identical"};
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::cerr << "usage: acceptance <hybrid-id binary> <scratch dir>\n";
        return 2;
    }
    const std::string binary = argv[1];
    const fs::path scratch = argv[2];
    fs::create_directories(scratch);

    struct Criterion {
        int id;
        std::string name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "LM quadratic exactness", 1, lm_quadratic_exactness},
        {2, "Jacobian validation", 1, jacobian_validation},
        {3, "Crossover invariants", 1, crossover_invariants},
        {4, "Cost dimensionlessness", 1, cost_dimensionless},
        {5, "End-to-end identification", 60, end_to_end},
        {6, "Restricted-vs-redundant dispersion", 120, dispersion_contrast},
        {7, "Domain reduction soundness", 60, domain_reduction},
        {8, "Scan uniformity", 30, scan_uniformity},
        {9, "Determinism", 120, [&] { return cli_determinism(binary, scratch); }},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = o.pass && in_time;
        failed += pass ? 0 : 1;
        std::cout << (pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " -- " << o.detail
                  << " [" << std::fixed << std::setprecision(3) << secs << " s, budget " << c.budget_s << " s"
                  << (in_time ? "" : ", OVER BUDGET") << "]\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
              << " acceptance criteria passed\n";
    return failed == 0 ? 0 : 1;
}
