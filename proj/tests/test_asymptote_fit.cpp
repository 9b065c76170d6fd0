#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ipc/asymptote_fit.hpp"

using namespace ipc;

namespace {

std::vector<MeanSample> noiseless(double a, double b1, double b2, double ratio = 2.0)
{
    std::vector<MeanSample> out;
    for (double t = 200; t <= 600; t += 100) {
        const double tp = ratio * t;
        out.push_back({t, tp, a + b1 / t, a - b2 / tp, 1000});
    }
    return out;
}

std::vector<MeanSample> noisy(std::mt19937_64& rng)
{
    std::normal_distribution<double> g(0.0, 1e-3);
    auto s = noiseless(0.3, 0.2, 6.0);
    for (auto& m : s) {
        m.g_train += g(rng);
        m.g_test += g(rng);
    }
    return s;
}

std::vector<VarSample> power_law(double c, double power)
{
    std::vector<VarSample> out;
    for (double t = 500; t <= 4000; t += 500)
        out.push_back({t, t, c * std::pow(t, power), c * std::pow(t, power), 100});
    return out;
}

} // namespace

TEST_SUITE("asymptote_fit")
{
    TEST_CASE("noiseless means are recovered")
    {
        const auto s = noiseless(0.3, 0.2, 6.0);
        const MeanFit f = fit_means(s);
        CHECK(std::abs(f.a - 0.3) < 1e-10);
        CHECK(std::abs(f.b1 - 0.2) < 1e-10);
        CHECK(std::abs(f.b2 - 6.0) < 1e-10);
        CHECK(f.cost < 1e-20);
        CHECK(f.condition > 1.0);
    }

    TEST_CASE("sample order does not matter")
    {
        std::mt19937_64 rng(1);
        auto s = noisy(rng);
        const MeanFit ref = fit_means(s);
        for (int rep = 0; rep < 10; ++rep) {
            std::shuffle(s.begin(), s.end(), rng);
            const MeanFit f = fit_means(s);
            CHECK(f.a == ref.a);
            CHECK(f.b1 == ref.b1);
            CHECK(f.b2 == ref.b2);
        }
    }

    TEST_CASE("fit is a minimum of the weighted cost")
    {
        std::mt19937_64 rng(2);
        for (int rep = 0; rep < 20; ++rep) {
            const auto s = noisy(rng);
            const MeanFit f = fit_means(s);
            const double c0 = mean_fit_cost(s, f.a, f.b1, f.b2);
            CHECK(c0 == doctest::Approx(f.cost).epsilon(1e-12));
            for (int k = 0; k < 3; ++k)
                for (double h : {-1e-6, 1e-6}) {
                    double p[3] = {f.a, f.b1, f.b2};
                    p[k] += h;
                    CHECK(mean_fit_cost(s, p[0], p[1], p[2]) >= c0);
                }
            const auto grad = mean_fit_gradient(s, f.a, f.b1, f.b2);
            const auto scale = mean_fit_gradient(s, 0.0, 0.0, 0.0);
            for (int k = 0; k < 3; ++k)
                CHECK(std::abs(grad[k]) <= 1e-8 * std::max(1.0, std::abs(scale[k])));
        }
    }

    TEST_CASE("gradient matches finite differences")
    {
        std::mt19937_64 rng(3);
        const auto s = noisy(rng);
        const double p[3] = {0.25, 0.4, 5.0};
        const auto g = mean_fit_gradient(s, p[0], p[1], p[2]);
        for (int k = 0; k < 3; ++k) {
            double lo[3] = {p[0], p[1], p[2]}, hi[3] = {p[0], p[1], p[2]};
            const double h = 1e-5;
            lo[k] -= h;
            hi[k] += h;
            const double fd =
                (mean_fit_cost(s, hi[0], hi[1], hi[2]) - mean_fit_cost(s, lo[0], lo[1], lo[2])) / (2 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-6));
        }
    }

    TEST_CASE("shifting every mean shifts only a")
    {
        std::mt19937_64 rng(4);
        const auto s = noisy(rng);
        const MeanFit base = fit_means(s);
        for (double kappa : {-0.2, 0.05, 0.6}) {
            auto shifted = s;
            for (auto& m : shifted) {
                m.g_train += kappa;
                m.g_test += kappa;
            }
            const MeanFit f = fit_means(shifted);
            CHECK(std::abs(f.a - (base.a + kappa)) < 1e-9);
            CHECK(std::abs(f.b1 - base.b1) < 1e-7);
            CHECK(std::abs(f.b2 - base.b2) < 1e-7);
        }
    }

    TEST_CASE("a single length is rejected")
    {
        std::vector<MeanSample> s(3, MeanSample{500, 500, 0.5, 0.4, 10});
        CHECK_THROWS_AS(fit_means(s), std::invalid_argument);
        CHECK_THROWS_AS(fit_means(std::vector<MeanSample>{}), std::invalid_argument);
    }

    TEST_CASE("variance fit examples")
    {
        std::vector<VarSample> exact;
        for (double t : {100.0, 200.0, 400.0})
            exact.push_back({t, 2 * t, 1.5 / t, 1.5 / (2 * t), 50});
        CHECK(fit_variance(exact) == doctest::Approx(1.5).epsilon(1e-15));

        const std::vector<VarSample> single{{100, 100, 0.02, 0.02, 50}};
        CHECK(fit_variance(single) == doctest::Approx(2.0).epsilon(1e-15));
        CHECK_THROWS(fit_variance(std::vector<VarSample>{}));
    }

    TEST_CASE("variance fit zeroes the gradient of its cost")
    {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(0.5, 2.0);
        std::vector<VarSample> s;
        for (double t = 200; t <= 600; t += 100)
            s.push_back({t, 2 * t, u(rng) / t, u(rng) / (2 * t), 100});
        const double d = fit_variance(s);
        // d/dd of 1/2 sum T^2 (d/T - s2)^2 is sum (d - T s2).
        double grad = 0.0, scale = 0.0;
        for (const auto& v : s) {
            grad += (d - v.train_length * v.s2_train) + (d - v.test_length * v.s2_test);
            scale += std::abs(v.train_length * v.s2_train) + std::abs(v.test_length * v.s2_test);
        }
        CHECK(std::abs(grad) <= 1e-12 * scale);
        CHECK(variance_fit_cost(s, d) <= variance_fit_cost(s, d + 1e-6));
        CHECK(variance_fit_cost(s, d) <= variance_fit_cost(s, d - 1e-6));
    }

    TEST_CASE("log-log slope of power laws")
    {
        CHECK(std::abs(loglog_slope(power_law(1.3, -1.0)).slope + 1.0) < 1e-10);
        CHECK(std::abs(loglog_slope(power_law(0.02, -2.0)).slope + 2.0) < 1e-10);
        const SlopeFit f = loglog_slope(power_law(0.7, -1.0));
        CHECK(std::exp(f.intercept) == doctest::Approx(0.7).epsilon(1e-10));
        CHECK(f.used == 16);
    }

    TEST_CASE("nonpositive variances are excluded")
    {
        auto s = power_law(1.0, -1.0);
        s[0].s2_train = 0.0;
        s[1].s2_test = -1e-9;
        const SlopeFit f = loglog_slope(s);
        CHECK(f.excluded == 2);
        CHECK(f.used == 14);
        CHECK(std::abs(f.slope + 1.0) < 1e-10);

        std::vector<VarSample> tiny{{100, 100, 1e-3, 0.0, 10}, {200, 200, 5e-4, 0.0, 10}};
        CHECK_THROWS(loglog_slope(tiny));
    }

    TEST_CASE("zero capacity decision")
    {
        CHECK(decide_zero_ipc(0.0007, -1.9).is_zero);
        CHECK_FALSE(decide_zero_ipc(0.3075, -1.0).is_zero);
        CHECK_FALSE(decide_zero_ipc(0.0007, -1.0).is_zero);
        CHECK_FALSE(decide_zero_ipc(0.0007, -1.3).is_zero);
        CHECK(decide_zero_ipc(-0.005, -1.31).is_zero);
        CHECK(decide_zero_ipc(0.05, -2.0, 0.1, 0.3).is_zero);
    }

    TEST_CASE("reference coefficients of the geometric filter")
    {
        TheoryTerms t;
        t.mu0 = 13.0 / 9.0;
        t.loss_at_w0 = 1.0;
        t.var_mu = 6992.0 / 1215.0;
        t.trace_i_jinv = 3.0;
        const auto c = asymptotic_coefficients(t, 0.5);
        CHECK(std::abs(c.a - 4.0 / 13.0) < 1e-12);
        CHECK(std::abs(c.b1 - 1839.0 / 10985.0) < 1e-12);
        CHECK(std::abs(c.b2 - 66606.0 / 10985.0) < 1e-12);
        CHECK(std::abs(c.d - 188784.0 / 142805.0) < 1e-12);
    }

    TEST_CASE("reference coefficients in exact arithmetic")
    {
        using Q = boost::multiprecision::cpp_rational;
        const Q mu0(13, 9), l(1), v_mu(6992, 1215), cov(0), v_l(0), tr(3), ratio(1, 2);
        const Q x = cov / (mu0 * mu0) - l * v_mu / (mu0 * mu0 * mu0);
        CHECK(1 - l / mu0 == Q(4, 13));
        CHECK(x + tr / mu0 == Q(1839, 10985));
        CHECK(-(x - (tr / mu0) / ratio) == Q(66606, 10985));
        CHECK(v_l / (mu0 * mu0) + l * l * v_mu / (mu0 * mu0 * mu0 * mu0) - 2 * l * cov / (mu0 * mu0 * mu0) ==
              Q(188784, 142805));
    }

    TEST_CASE("degenerate reference coefficients")
    {
        const auto unit = asymptotic_coefficients(TheoryTerms{}, 1.0);
        CHECK(unit.a == 1.0);
        CHECK(unit.b1 == 0.0);
        CHECK(unit.b2 == 0.0);
        CHECK(unit.d == 0.0);

        TheoryTerms zero;
        zero.mu0 = 2.0;
        zero.loss_at_w0 = 2.0;
        zero.var_mu = zero.cov_loss_mu = zero.var_loss = 0.37;
        const auto z = asymptotic_coefficients(zero, 1.0);
        CHECK(z.a == 0.0);
        CHECK(std::abs(z.d) < 1e-15);

        TheoryTerms bad;
        bad.mu0 = 0.0;
        CHECK_THROWS(asymptotic_coefficients(bad, 1.0));
    }

    TEST_CASE("variance of a sample variance")
    {
        CHECK(variance_of_variance(0.01, 2) == doctest::Approx(4e-4).epsilon(1e-15));
        CHECK(variance_of_variance(0.0, 50) == 0.0);
        const double s2 = 0.3;
        CHECK(variance_of_variance(s2, 1000000) == doctest::Approx(2 * s2 * s2 / 1e6).epsilon(1e-5));
        CHECK_THROWS(variance_of_variance(0.1, 1));
    }
}
