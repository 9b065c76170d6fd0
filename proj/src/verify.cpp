#include "ipc/verify.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <tuple>

#include "ipc/asymptote_fit.hpp"
#include "ipc/config.hpp"
#include "ipc/esn.hpp"
#include "ipc/ipc_core.hpp"
#include "ipc/mc_harness.hpp"
#include "ipc/report.hpp"

namespace ipc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int precision = 6)
{
    std::ostringstream os;
    os << std::setprecision(precision) << v;
    return os.str();
}

class Suite {
public:
    explicit Suite(const VerifyOptions& options) : options_(options) {}

    template <class Body>
    void check(int id, std::string name, Body&& body)
    {
        CheckResult r;
        r.id = id;
        r.name = std::move(name);
        const auto start = Clock::now();
        try {
            std::ostringstream detail;
            r.passed = body(detail);
            r.detail = detail.str();
        } catch (const std::exception& e) {
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = seconds_since(start);
        if (options_.on_result)
            options_.on_result(r);
        results_.push_back(std::move(r));
    }

    std::vector<CheckResult> take() { return std::move(results_); }

private:
    const VerifyOptions& options_;
    std::vector<CheckResult> results_;
};

void save_csv(const VerifyOptions& options, const std::string& name, const std::vector<SummaryRow>& rows)
{
    if (!options.out_dir)
        return;
    std::filesystem::create_directories(*options.out_dir);
    write_results_csv(*options.out_dir / (name + ".csv"), rows);
}

std::string csv_text(const std::vector<SummaryRow>& rows)
{
    std::ostringstream os;
    write_results_csv(os, rows);
    return os.str();
}

// Definition-level IPC on stored trajectories: least squares by
// column-pivoted QR on the data matrix, then the residual-based formulas.
struct DirectIpc {
    double train = 0;
    double test = 0;
};

DirectIpc direct_ipc(const Matrix& x_train, const Vector& y_train, const Matrix& x_test, const Vector& y_test)
{
    const Vector w = x_train.colPivHouseholderQr().solve(y_train);
    DirectIpc d;
    d.train = 1.0 - (y_train - x_train * w).squaredNorm() / y_train.squaredNorm();
    d.test = 1.0 - (y_test - x_test * w).squaredNorm() / y_test.squaredNorm();
    return d;
}

// Largest streaming-vs-direct discrepancy over random small ESN instances.
double oracle_equivalence_error(int instances, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> pick_nodes(1, 8), pick_len(20, 200);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;

    for (int k = 0; k < instances; ++k) {
        EsnConfig cfg;
        cfg.nodes = static_cast<std::size_t>(pick_nodes(rng));
        cfg.density = 1.0;
        cfg.spectral_radius = 0.9;
        const EsnWeights w = build_esn(cfg, rng);
        const int t_train = pick_len(rng), t_test = pick_len(rng), washout = 50;
        const auto n = static_cast<Eigen::Index>(cfg.nodes);

        Matrix xs(t_train + t_test, n + 1);
        Vector ys(t_train + t_test);
        MomentAccumulator train(cfg.nodes + 1, 1), test(cfg.nodes + 1, 1);
        Vector state = Vector::Zero(n);
        double u_prev = 0.0, u_prev2 = 0.0;
        for (int t = 0; t < washout + t_train + t_test; ++t) {
            state = esn_step(w, state, std::span<const double>(&u_prev, 1));
            // Nonlinear target of the two most recent inputs the reservoir saw.
            const double y = u_prev + 0.5 * u_prev * u_prev2 + 0.3;
            u_prev2 = u_prev;
            u_prev = unit(rng);
            if (t < washout)
                continue;
            Vector feature(n + 1);
            feature.head(n) = state;
            feature[n] = 1.0;
            const int row = t - washout;
            xs.row(row) = feature.transpose();
            ys[row] = y;
            (row < t_train ? train : test).accumulate(feature, y);
        }
        const DirectIpc direct =
            direct_ipc(xs.topRows(t_train), ys.head(t_train), xs.bottomRows(t_test), ys.tail(t_test));
        worst = std::max({worst, std::abs(training_ipc(train) - direct.train),
                          std::abs(test_ipc(train, test) - direct.test)});
    }
    return worst;
}

// Largest relative gradient norm of the weighted mean cost at the fitted
// optimum, over random sample sets.
double fit_gradient_error(int sets, std::uint64_t seed)
{
    Rng rng = make_rng(seed);
    std::uniform_int_distribution<int> pick_count(3, 8), pick_len(50, 5000), pick_ratio(1, 3);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < sets; ++k) {
        std::vector<MeanSample> samples;
        const int count = pick_count(rng);
        const int ratio = pick_ratio(rng);
        std::set<int> used;
        while (static_cast<int>(samples.size()) < count) {
            const int t = pick_len(rng);
            if (!used.insert(t).second)
                continue;
            samples.push_back({double(t), double(t * ratio), unit(rng), unit(rng), 100});
        }
        const MeanFit f = fit_means(samples);
        const auto g = mean_fit_gradient(samples, f.a, f.b1, f.b2);
        const auto g0 = mean_fit_gradient(samples, 0.0, 0.0, 0.0);
        const double norm = std::hypot(g[0], g[1], g[2]);
        const double norm0 = std::hypot(g0[0], g0[1], g0[2]);
        worst = std::max(worst, norm / norm0);
    }
    return worst;
}

double noiseless_recovery_error()
{
    std::vector<MeanSample> samples;
    for (double t = 200; t <= 600; t += 100)
        samples.push_back({t, 2 * t, 0.3 + 0.2 / t, 0.3 - 6.0 / (2 * t), 10000});
    const MeanFit f = fit_means(samples);
    return std::max({std::abs(f.a - 0.3), std::abs(f.b1 - 0.2), std::abs(f.b2 - 6.0)});
}

ExperimentPlan with_threads(ExperimentPlan plan, unsigned threads)
{
    plan.threads = threads;
    return plan;
}

} // namespace

std::vector<CheckResult> run_verify(const VerifyOptions& options)
{
    Suite suite(options);
    const unsigned threads = options.threads;

    suite.check(1, "geometric-analytic", [](std::ostream& out) {
        TheoryTerms t;
        t.mu0 = 13.0 / 9.0;
        t.loss_at_w0 = 1.0;
        t.var_mu = 6992.0 / 1215.0;
        t.cov_loss_mu = 0.0;
        t.var_loss = 0.0;
        t.trace_i_jinv = (4.0 / 3.0) / (4.0 / 9.0);
        const auto start = Clock::now();
        const AsymptoteCoefficients c = asymptotic_coefficients(t, 0.5);
        const double elapsed = seconds_since(start);
        const double err = std::max({std::abs(c.a - 4.0 / 13.0), std::abs(c.b1 - 1839.0 / 10985.0),
                                     std::abs(c.b2 - 66606.0 / 10985.0),
                                     std::abs(c.d - 188784.0 / 142805.0)});
        out << "a=" << fmt(c.a, 12) << " b1=" << fmt(c.b1, 12) << " b2=" << fmt(c.b2, 12) << " d=" << fmt(c.d, 12)
            << " max_err=" << fmt(err, 3) << " time=" << fmt(elapsed * 1e3, 3) << "ms";
        return err < 1e-12 && elapsed < 1e-3;
    });

    std::vector<SummaryRow> simple_rows;
    FitReport simple_fit;
    suite.check(2, "geometric-monte-carlo", [&](std::ostream& out) {
        const RunConfig cfg = preset("simple-verify");
        const auto start = Clock::now();
        simple_rows = run_experiment(with_threads(cfg.plan, threads)).rows;
        simple_fit = analyze(simple_rows);
        const double elapsed = seconds_since(start);
        save_csv(options, "simple-verify", simple_rows);
        const FitResult& f = simple_fit.fit;
        out << "a=" << fmt(f.a) << " b1=" << fmt(f.b1) << " b2=" << fmt(f.b2) << " d=" << fmt(f.d)
            << " N=" << cfg.plan.trials << " time=" << fmt(elapsed, 3) << "s";
        return std::abs(f.a - 4.0 / 13.0) < 0.005 && std::abs(f.b1 - 0.1674) < 0.10
               && std::abs(f.b2 - 6.063) < 0.8 && std::abs(f.d - 1.322) < 0.2 && elapsed < 120.0;
    });

    suite.check(3, "chi-square-thresholds", [](std::ostream& out) {
        const double t1 = chi_square_threshold(1, 1e-4, 600);
        const double t2 = chi_square_threshold(100, 1e-4, 10000);
        out << "th(1,1e-4,600)=" << fmt(t1, 8) << " th(100,1e-4,1e4)=" << fmt(t2, 8);
        return std::abs(t1 - 0.0505) <= 0.0005 && std::abs(t2 - 0.032264) <= 1e-5;
    });

    suite.check(4, "empirical-baseline", [&](std::ostream& out) {
        if (simple_rows.empty())
            throw std::runtime_error("simple-model results unavailable");
        const BaselineReport b = baseline(simple_rows, 1, 1e-4);
        const double truth = 4.0 / 13.0;
        out << "T=" << b.length << " threshold=" << fmt(b.threshold) << " empirical=" << fmt(b.empirical)
            << " fitted_a=" << fmt(simple_fit.fit.a) << " |emp-C0|=" << fmt(std::abs(b.empirical - truth), 3)
            << " |a-C0|=" << fmt(std::abs(simple_fit.fit.a - truth), 3);
        return std::abs(b.empirical - 0.3080) < 0.002
               && std::abs(simple_fit.fit.a - truth) < std::abs(b.empirical - truth) + 0.002;
    });

    if (!options.quick) {
        auto esn_case = [&](const std::string& name) {
            const RunConfig cfg = preset(name);
            const auto start = Clock::now();
            auto rows = run_experiment(with_threads(cfg.plan, threads)).rows;
            save_csv(options, name, rows);
            return std::tuple{rows, analyze(rows, cfg.a_tol, cfg.slope_tol), seconds_since(start),
                              cfg.plan.threshold_dof(), cfg.p_value};
        };

        suite.check(5, "legendre1", [&](std::ostream& out) {
            const auto [rows, r, elapsed, dof, p] = esn_case("legendre1");
            out << "a=" << fmt(r.fit.a) << " slope=" << fmt(r.slope.slope, 4) << " is_zero=" << r.decision.is_zero
                << " time=" << fmt(elapsed, 3) << "s";
            return r.fit.a > 0.98 && std::abs(r.slope.slope + 1.0) <= 0.3 && !r.decision.is_zero && elapsed < 600.0;
        });

        suite.check(6, "legendre15", [&](std::ostream& out) {
            const auto [rows, r, elapsed, dof, p] = esn_case("legendre15");
            out << "a=" << fmt(r.fit.a) << " slope=" << fmt(r.slope.slope, 4) << " is_zero=" << r.decision.is_zero
                << " time=" << fmt(elapsed, 3) << "s";
            return std::abs(r.fit.a) < 0.02 && r.slope.slope < -1.5 && r.decision.is_zero && elapsed < 600.0;
        });

        suite.check(7, "narma10", [&](std::ostream& out) {
            const auto [rows, r, elapsed, dof, p] = esn_case("narma10");
            const BaselineReport b = baseline(rows, dof, p);
            out << "a=" << fmt(r.fit.a) << " empirical(T=" << b.length << ")=" << fmt(b.empirical)
                << " |emp-a|=" << fmt(std::abs(b.empirical - r.fit.a), 3) << " time=" << fmt(elapsed, 3) << "s";
            return r.fit.a > 0.99 && std::abs(b.empirical - r.fit.a) <= 0.005 && elapsed < 600.0;
        });
    }

    suite.check(8, "oracle-equivalence", [](std::ostream& out) {
        const auto start = Clock::now();
        const double ipc_err = oracle_equivalence_error(100, 8080);
        const double grad_err = fit_gradient_error(100, 9090);
        const double recovery_err = noiseless_recovery_error();
        const double elapsed = seconds_since(start);
        out << "ipc_err=" << fmt(ipc_err, 3) << " grad_rel=" << fmt(grad_err, 3)
            << " recovery_err=" << fmt(recovery_err, 3) << " time=" << fmt(elapsed, 3) << "s";
        return ipc_err <= 1e-9 && grad_err <= 1e-8 && recovery_err <= 1e-10 && elapsed < 10.0;
    });

    suite.check(9, "determinism", [&](std::ostream& out) {
        const auto start = Clock::now();
        ExperimentPlan simple = preset("simple-verify").plan;
        simple.trials = 1000;
        ExperimentPlan esn = preset("narma10").plan;
        esn.reservoir.nodes = 10;
        esn.fix_reservoir = false;
        esn.trials = 16;
        esn.t_grid = {200, 400};

        const auto s1 = csv_text(run_experiment(with_threads(simple, 1)).rows);
        const auto s4 = csv_text(run_experiment(with_threads(simple, 4)).rows);
        const auto e1 = csv_text(run_experiment(with_threads(esn, 1)).rows);
        const auto e4 = csv_text(run_experiment(with_threads(esn, 4)).rows);
        if (options.out_dir) {
            std::ofstream(*options.out_dir / "determinism-simple.csv") << s1;
            std::ofstream(*options.out_dir / "determinism-esn.csv") << e1;
        }
        const double elapsed = seconds_since(start);
        out << "simple " << (s1 == s4 ? "identical" : "DIFFER") << ", esn " << (e1 == e4 ? "identical" : "DIFFER")
            << " across 1 vs 4 threads, time=" << fmt(elapsed, 3) << "s";
        return s1 == s4 && e1 == e4 && elapsed < 60.0;
    });

    return suite.take();
}

std::string format_check(const CheckResult& r)
{
    std::ostringstream os;
    os << (r.passed ? "PASS" : "FAIL") << " [" << r.id << "] " << r.name << ": " << r.detail;
    return os.str();
}

} // namespace ipc
