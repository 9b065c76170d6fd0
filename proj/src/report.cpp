#include "ipc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace ipc {

FitReport analyze(std::span<const SummaryRow> rows, double a_tol, double slope_tol)
{
    const auto means = mean_samples(rows);
    const auto vars = var_samples(rows);

    FitReport r;
    const MeanFit m = fit_means(means);
    r.fit.a = m.a;
    r.fit.b1 = m.b1;
    r.fit.b2 = m.b2;
    r.fit.cost = m.cost;
    r.fit.condition = m.condition;
    r.fit.d = fit_variance(vars);
    r.slope = loglog_slope(vars);
    r.decision = decide_zero_ipc(r.fit.a, r.slope.slope, a_tol, slope_tol);

    for (const auto& row : rows) {
        if (const double dev = row.mean_train - r.fit.a; dev <= 0.0)
            r.dropped.push_back({true, row.train_length, dev});
        if (const double dev = r.fit.a - row.mean_test; dev <= 0.0)
            r.dropped.push_back({false, row.test_length, dev});
    }
    return r;
}

nlohmann::json to_json(const FitReport& r)
{
    nlohmann::json j;
    j["a"] = r.fit.a;
    j["b1"] = r.fit.b1;
    j["b2"] = r.fit.b2;
    j["d"] = r.fit.d;
    j["cost"] = r.fit.cost;
    j["condition"] = r.fit.condition;
    j["variance_slope"] = {{"slope", r.slope.slope},
                           {"intercept", r.slope.intercept},
                           {"standard_error", r.slope.standard_error},
                           {"points_used", r.slope.used},
                           {"points_excluded", r.slope.excluded}};
    j["zero_ipc"] = {{"is_zero", r.decision.is_zero},
                     {"a", r.decision.a},
                     {"slope", r.decision.slope},
                     {"a_tol", r.decision.a_tol},
                     {"slope_tol", r.decision.slope_tol}};
    auto dropped = nlohmann::json::array();
    for (const auto& d : r.dropped)
        dropped.push_back({{"series", d.train ? "train" : "test"}, {"length", d.length}, {"deviation", d.deviation}});
    j["dropped_loglog_points"] = dropped;
    return j;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    return os;
}

constexpr const char* gnuplot_script = R"(# gnuplot -p plots.gp
set terminal pngcairo size 900,650
set output 'mean.png'
set xlabel 'data length'
set ylabel 'IPC'
plot 'mean.dat' using 1:3:4 with yerrorbars title 'training mean', \
     '' using 2:5:6 with yerrorbars title 'test mean', \
     '' using 1:7 with lines title 'a + b1/T', \
     '' using 2:8 with lines title 'a - b2/T'''
set output 'mean_loglog.png'
set logscale xy
set ylabel '|mean - a|'
plot 'mean_loglog.dat' index 0 using 1:2 with points title 'training', \
     '' index 0 using 1:3 with lines title 'b1/T', \
     '' index 1 using 1:2 with points title 'test', \
     '' index 1 using 1:3 with lines title 'b2/T'''
unset logscale
set output 'variance.png'
set ylabel 'variance'
plot 'variance.dat' using 1:3:4 with yerrorbars title 'training', \
     '' using 2:5:6 with yerrorbars title 'test', \
     '' using 1:7 with lines title 'd/T', \
     '' using 2:8 with lines title 'd/T'''
set output 'variance_loglog.png'
set logscale xy
plot 'variance_loglog.dat' using 1:2 with points title 'variance', \
     '' using 1:3 with lines title 'log-log fit', \
     '' using 1:4 with lines title 'd/T'
)";

} // namespace

void write_plot_data(const std::filesystem::path& dir, std::span<const SummaryRow> rows,
                     const FitReport& report, bool gnuplot)
{
    std::filesystem::create_directories(dir);
    const FitResult& f = report.fit;

    {
        auto os = open_out(dir / "mean.dat");
        os << "# T Tprime mean_train se_train mean_test se_test model_train model_test\n";
        for (const auto& r : rows) {
            const auto n = static_cast<double>(r.trials);
            const auto t = static_cast<double>(r.train_length), tp = static_cast<double>(r.test_length);
            os << r.train_length << ' ' << r.test_length << ' ' << r.mean_train << ' '
               << std::sqrt(r.var_train / n) << ' ' << r.mean_test << ' ' << std::sqrt(r.var_test / n) << ' '
               << f.a + f.b1 / t << ' ' << f.a - f.b2 / tp << '\n';
        }
    }
    {
        auto os = open_out(dir / "mean_loglog.dat");
        os << "# training: T mean_train-a b1/T\n";
        for (const auto& r : rows)
            if (const double dev = r.mean_train - f.a; dev > 0.0)
                os << r.train_length << ' ' << dev << ' ' << f.b1 / static_cast<double>(r.train_length) << '\n';
        os << "\n\n# test: Tprime a-mean_test b2/Tprime\n";
        for (const auto& r : rows)
            if (const double dev = f.a - r.mean_test; dev > 0.0)
                os << r.test_length << ' ' << dev << ' ' << f.b2 / static_cast<double>(r.test_length) << '\n';
        for (const auto& d : report.dropped)
            os << "# dropped " << (d.train ? "train" : "test") << " length " << d.length << " deviation "
               << d.deviation << '\n';
    }
    {
        auto os = open_out(dir / "variance.dat");
        os << "# T Tprime var_train err_var_train var_test err_var_test d/T d/Tprime\n";
        for (const auto& r : rows)
            os << r.train_length << ' ' << r.test_length << ' ' << r.var_train << ' ' << r.err_var_train << ' '
               << r.var_test << ' ' << r.err_var_test << ' ' << f.d / static_cast<double>(r.train_length) << ' '
               << f.d / static_cast<double>(r.test_length) << '\n';
    }
    {
        struct Point {
            std::uint64_t length;
            double variance;
        };
        std::vector<Point> pts;
        for (const auto& r : rows) {
            if (r.var_train > 0.0)
                pts.push_back({r.train_length, r.var_train});
            if (r.var_test > 0.0)
                pts.push_back({r.test_length, r.var_test});
        }
        std::stable_sort(pts.begin(), pts.end(), [](const Point& l, const Point& r) { return l.length < r.length; });
        auto os = open_out(dir / "variance_loglog.dat");
        os << "# length variance exp(intercept)*length^slope d/length  (slope " << report.slope.slope << ")\n";
        for (const auto& p : pts) {
            const auto len = static_cast<double>(p.length);
            os << p.length << ' ' << p.variance << ' '
               << std::exp(report.slope.intercept) * std::pow(len, report.slope.slope) << ' ' << f.d / len << '\n';
        }
    }
    if (gnuplot) {
        std::ofstream os(dir / "plots.gp");
        os << gnuplot_script;
    }
}

BaselineReport baseline(std::span<const SummaryRow> rows, unsigned dof, double p_value)
{
    if (rows.empty())
        throw std::invalid_argument("baseline: no result rows");
    const auto last = std::max_element(rows.begin(), rows.end(), [](const SummaryRow& l, const SummaryRow& r) {
        return l.train_length < r.train_length;
    });
    BaselineReport b;
    b.length = last->train_length;
    b.dof = dof;
    b.p_value = p_value;
    b.threshold = chi_square_threshold(dof, p_value, b.length);
    b.training_mean = last->mean_train;
    b.empirical = empirical_ipc(b.training_mean, b.threshold);

    std::size_t distinct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].train_length != rows[0].train_length)
            distinct = 1;
    if (distinct) {
        b.fitted_a = fit_means(mean_samples(rows)).a;
        b.has_fit = true;
    }
    return b;
}

nlohmann::json to_json(const BaselineReport& b)
{
    nlohmann::json j{{"length", b.length},        {"dof", b.dof},
                     {"p_value", b.p_value},      {"threshold", b.threshold},
                     {"training_mean", b.training_mean}, {"empirical_ipc", b.empirical}};
    if (b.has_fit)
        j["fitted_a"] = b.fitted_a;
    return j;
}

} // namespace ipc
