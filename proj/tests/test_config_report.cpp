#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "ipc/config.hpp"
#include "ipc/report.hpp"

using namespace ipc;

namespace {

RunConfig parse(const std::string& text)
{
    std::istringstream is(text);
    return parse_config(is);
}

std::vector<SummaryRow> synthetic_rows(double a, double b1, double b2, double d, double power)
{
    std::vector<SummaryRow> rows;
    for (std::uint64_t t = 500; t <= 4000; t += 500) {
        SummaryRow r;
        r.train_length = r.test_length = t;
        r.trials = 100;
        const double len = static_cast<double>(t);
        r.mean_train = a + b1 / len;
        r.mean_test = a - b2 / len;
        r.var_train = r.var_test = d * std::pow(len, power);
        rows.push_back(r);
    }
    return rows;
}

} // namespace

TEST_SUITE("config")
{
    TEST_CASE("serialization is a fixed point")
    {
        for (const auto& name : preset_names())
            for (bool full : {false, true}) {
                const std::string once = serialize_config(preset(name, full));
                CHECK(serialize_config(parse(once)) == once);
            }
    }

    TEST_CASE("parsed values reach the plan")
    {
        const RunConfig c = parse("# comment\n[task]\nkind = legendre\nterms = 1:2, 3:1\n"
                                  "[reservoir]\nnodes = 12\nfix = false\n"
                                  "[experiment]\nlengths = 100:300:100\nratio = 3/2\ntrials = 7\nseed = 99\n"
                                  "[fit]\np_value = 0.01\n[output]\ndir = out/x\n");
        CHECK(c.plan.task.kind == TaskKind::legendre);
        REQUIRE(c.plan.task.legendre.terms.size() == 2);
        CHECK(c.plan.task.legendre.terms[1].delay == 3);
        CHECK(c.plan.task.legendre.terms[1].degree == 1);
        CHECK(c.plan.reservoir.nodes == 12);
        CHECK_FALSE(c.plan.fix_reservoir);
        CHECK(c.plan.t_grid == std::vector<std::uint64_t>{100, 200, 300});
        CHECK(c.plan.ratio_num == 3);
        CHECK(c.plan.ratio_den == 2);
        CHECK(c.plan.trials == 7);
        CHECK(c.plan.base_seed == 99);
        CHECK(c.p_value == 0.01);
        CHECK(c.out_dir == std::filesystem::path("out/x"));
    }

    TEST_CASE("unknown or malformed entries are rejected")
    {
        CHECK_THROWS_AS(parse("[task]\nkind = simple\ncolour = red\n"), ConfigError);
        CHECK_THROWS_AS(parse("[tasks]\nkind = simple\n"), ConfigError);
        CHECK_THROWS_AS(parse("[task]\nkind = lorenz\n"), ConfigError);
        CHECK_THROWS_AS(parse("[experiment]\ntrials = many\n"), ConfigError);
        CHECK_THROWS_AS(parse("[experiment]\nlengths = 100,abc\n"), ConfigError);
        CHECK_THROWS_AS(parse("[experiment]\nratio = 0\n"), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/ipc.ini"), ConfigError);
    }

    TEST_CASE("length lists")
    {
        CHECK(parse_length_list("200:600:100") == std::vector<std::uint64_t>{200, 300, 400, 500, 600});
        CHECK(parse_length_list("5, 10,20") == std::vector<std::uint64_t>{5, 10, 20});
        CHECK_THROWS(parse_length_list("600:200:100"));
        CHECK_THROWS(parse_length_list(""));
    }

    TEST_CASE("presets")
    {
        const RunConfig s = preset("simple-verify");
        CHECK(s.plan.t_grid.size() == 5);
        CHECK(s.plan.test_length(200) == 400);
        CHECK(s.plan.trials == 10000);
        CHECK(preset("simple-verify", true).plan.trials == 100000);
        const RunConfig l = preset("legendre15");
        CHECK(l.plan.reservoir.nodes == 50);
        CHECK(l.plan.t_grid.back() == 4000);
        CHECK(preset("narma10", true).plan.reservoir.nodes == 100);
        CHECK_THROWS_AS(preset("lorenz"), ConfigError);
    }
}

TEST_SUITE("report")
{
    TEST_CASE("analysis of noiseless rows")
    {
        const auto rows = synthetic_rows(0.99, 2.0, 3.0, 0.5, -1.0);
        const FitReport r = analyze(rows);
        CHECK(std::abs(r.fit.a - 0.99) < 1e-10);
        CHECK(std::abs(r.fit.b1 - 2.0) < 1e-8);
        CHECK(std::abs(r.fit.b2 - 3.0) < 1e-8);
        CHECK(std::abs(r.fit.d - 0.5) < 1e-12);
        CHECK(std::abs(r.slope.slope + 1.0) < 1e-10);
        CHECK_FALSE(r.decision.is_zero);
        CHECK(r.dropped.empty());
    }

    TEST_CASE("degenerate variance flags zero capacity")
    {
        const auto rows = synthetic_rows(0.0005, 50.0, -1.0, 3.0, -2.0);
        const FitReport r = analyze(rows);
        CHECK(r.decision.is_zero);
        // b2 < 0 puts every test mean above a.
        CHECK(r.dropped.size() == rows.size());
        const auto j = to_json(r);
        CHECK(j["zero_ipc"]["is_zero"].get<bool>());
        CHECK(j["dropped_loglog_points"].size() == rows.size());
    }

    TEST_CASE("plot data files")
    {
        const auto rows = synthetic_rows(0.9, 1.0, 1.0, 0.2, -1.0);
        const auto dir = std::filesystem::temp_directory_path() / "ipc_test_plot";
        std::filesystem::remove_all(dir);
        write_plot_data(dir, rows, analyze(rows), true);
        for (const char* f : {"mean.dat", "mean_loglog.dat", "variance.dat", "variance_loglog.dat", "plots.gp"})
            CHECK(std::filesystem::exists(dir / f));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("baseline gates the largest length")
    {
        auto rows = synthetic_rows(0.3, 0.2, 6.0, 1.3, -1.0);
        const BaselineReport b = baseline(rows, 1, 1e-4);
        CHECK(b.length == 4000);
        CHECK(b.threshold == chi_square_threshold(1, 1e-4, 4000));
        CHECK(b.empirical == b.training_mean);
        CHECK(b.has_fit);
        CHECK(std::abs(b.fitted_a - 0.3) < 1e-10);

        for (auto& r : rows)
            r.mean_train = 0.001;
        CHECK(baseline(rows, 1, 1e-4).empirical == 0.0);
        CHECK_THROWS(baseline(std::vector<SummaryRow>{}, 1, 1e-4));
    }
}
