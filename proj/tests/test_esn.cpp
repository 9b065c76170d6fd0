#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numeric>

#include "ipc/esn.hpp"

using namespace ipc;

namespace {

EsnConfig config(std::size_t nodes, std::uint64_t seed)
{
    EsnConfig c;
    c.nodes = nodes;
    c.seed = seed;
    return c;
}

double step_scalar(const EsnWeights& w, double x, double u)
{
    Vector s(1);
    s << x;
    const double in[] = {u};
    return esn_step(w, s, in)(0);
}

} // namespace

TEST_SUITE("esn")
{
    TEST_CASE("one node reservoir has weight +-0.9")
    {
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            Rng rng = make_rng(seed);
            EsnConfig c = config(1, seed);
            c.density = 1.0;
            const EsnWeights w = build_esn(c, rng);
            CHECK(std::abs(std::abs(w.recurrent(0, 0)) - 0.9) < 1e-15);
        }
    }

    TEST_CASE("spectral radius is rescaled to the target")
    {
        for (std::size_t n : {5u, 20u, 50u, 100u}) {
            Rng rng = make_rng(n);
            const EsnWeights w = build_esn(config(n, n), rng);
            CHECK(spectral_radius(w.recurrent) == doctest::Approx(0.9).epsilon(1e-12));
        }
    }

    TEST_CASE("power iteration agrees with the dense eigensolver")
    {
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            Rng rng = make_rng(seed);
            const std::size_t n = seed % 2 ? 20 : 100;
            const EsnWeights w = build_esn(config(n, seed), rng);
            const auto p = power_iteration_radius(w.recurrent);
            CHECK(p.converged);
            CHECK(std::abs(p.radius - spectral_radius(w.recurrent)) < 1e-6);
        }
    }

    TEST_CASE("spectral radius of a matrix with known eigenvalues")
    {
        // S diag(0.5, -0.8, 0.3) S^-1 with a complex pair 0.6 +- 0.7i appended.
        Matrix d = Matrix::Zero(5, 5);
        d(0, 0) = 0.5;
        d(1, 1) = -0.8;
        d(2, 2) = 0.3;
        d(3, 3) = 0.6;
        d(3, 4) = -0.7;
        d(4, 3) = 0.7;
        d(4, 4) = 0.6;
        Rng rng = make_rng(3);
        std::normal_distribution<double> g;
        Matrix s(5, 5);
        for (Eigen::Index i = 0; i < s.size(); ++i)
            s.data()[i] = g(rng);
        s += 5.0 * Matrix::Identity(5, 5);
        const Matrix m = s * d * s.inverse();
        const double expected = std::hypot(0.6, 0.7);
        CHECK(spectral_radius(m) == doctest::Approx(expected).epsilon(1e-10));
        CHECK(std::abs(power_iteration_radius(m).radius - expected) < 1e-6);
    }

    TEST_CASE("density fixes the number of zeros")
    {
        Rng rng = make_rng(99);
        const std::size_t n = 100;
        const EsnWeights w = build_esn(config(n, 99), rng);
        const auto zeros = (w.recurrent.array() == 0.0).count();
        const double fraction = static_cast<double>(zeros) / static_cast<double>(n * n);
        CHECK(std::abs(fraction - 0.30) < 0.02);
        CHECK(std::abs(fraction - (1.0 - 0.7)) <= 2.0 / static_cast<double>(n * n));
    }

    TEST_CASE("rescaling is idempotent")
    {
        Rng rng = make_rng(5);
        const EsnWeights w = build_esn(config(30, 5), rng);
        Matrix m = w.recurrent;
        rescale_spectral_radius(m, 0.9);
        CHECK((m - w.recurrent).norm() <= 1e-12 * w.recurrent.norm());
        Matrix zero = Matrix::Zero(3, 3);
        CHECK_THROWS(rescale_spectral_radius(zero, 0.9));
    }

    TEST_CASE("build is deterministic in its random stream")
    {
        Rng a = make_rng(17), b = make_rng(17);
        const EsnWeights wa = build_esn(config(25, 17), a);
        const EsnWeights wb = build_esn(config(25, 17), b);
        CHECK(wa.recurrent == wb.recurrent);
        CHECK(wa.input == wb.input);
    }

    TEST_CASE("invalid configs are rejected")
    {
        Rng rng = make_rng(1);
        EsnConfig c = config(0, 1);
        CHECK_THROWS(build_esn(c, rng));
        c = config(10, 1);
        c.density = 0.0;
        CHECK_THROWS(build_esn(c, rng));
        c = config(10, 1);
        c.spectral_radius = -1.0;
        CHECK_THROWS(build_esn(c, rng));
    }

    TEST_CASE("scalar step matches tanh")
    {
        EsnWeights w;
        w.recurrent = Matrix::Constant(1, 1, 0.5);
        w.input = Matrix::Constant(1, 1, 0.3);
        w.bias = Vector::Zero(1);
        CHECK(step_scalar(w, 0.0, 1.0) == doctest::Approx(0.291312612451591).epsilon(1e-14));
        CHECK(step_scalar(w, 0.4, -1.0) == doctest::Approx(std::tanh(0.2 - 0.3)).epsilon(1e-14));
    }

    TEST_CASE("all-zero weights map to the zero state")
    {
        EsnWeights w;
        w.recurrent = Matrix::Zero(4, 4);
        w.input = Matrix::Zero(4, 1);
        w.bias = Vector::Zero(4);
        Vector s = Vector::Constant(4, 0.7);
        const double u[] = {0.9};
        CHECK(esn_step(w, s, u).isZero(0.0));
    }

    TEST_CASE("step uses the transposed recurrent matrix and stays in (-1, 1)")
    {
        Rng rng = make_rng(8);
        EsnConfig c = config(6, 8);
        c.bias = 0.2;
        const EsnWeights w = build_esn(c, rng);
        Vector s = Vector::LinSpaced(6, -0.5, 0.5);
        const double u[] = {0.4};
        const Vector next = esn_step(w, s, u);
        for (Eigen::Index i = 0; i < 6; ++i) {
            double pre = 0.4 * w.input(i, 0) + 0.2;
            for (Eigen::Index j = 0; j < 6; ++j)
                pre += w.recurrent(j, i) * s(j);
            CHECK(next(i) == doctest::Approx(std::tanh(pre)).epsilon(1e-14));
            CHECK(std::abs(next(i)) < 1.0);
        }
        const double wrong[] = {0.1, 0.2};
        CHECK_THROWS(esn_step(w, s, wrong));
    }

    TEST_CASE("relabelling nodes permutes the state")
    {
        Rng rng = make_rng(12);
        const EsnWeights w = build_esn(config(8, 12), rng);
        Eigen::PermutationMatrix<Eigen::Dynamic> p(8);
        p.indices() << 3, 0, 7, 1, 6, 2, 5, 4;
        EsnWeights q;
        q.recurrent = p * w.recurrent * p.transpose();
        q.input = p * w.input;
        q.bias = p * w.bias;
        Vector s = Vector::LinSpaced(8, -0.3, 0.6);
        const double u[] = {-0.25};
        const Vector a = p * esn_step(w, s, u);
        const Vector b = esn_step(q, p * s, u);
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-15);
    }

    TEST_CASE("simple model examples")
    {
        CHECK(simple_model_step(0.0, 0.0) == 0.0);
        double x = 0.0;
        for (int t = 0; t < 200; ++t)
            x = simple_model_step(x, 1.0);
        CHECK(x == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(simple_model_target(0.5) == 1.5);
    }

    TEST_CASE("simple model equals its truncated geometric sum")
    {
        Rng rng = make_rng(21);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        std::vector<double> u(64);
        for (double& v : u)
            v = dist(rng);
        double x = 0.0;
        for (std::size_t t = 0; t < u.size(); ++t) {
            x = simple_model_step(x, u[t]);
            // Oldest term first; power-of-two scaling is exact, so the two
            // orderings round identically.
            double sum = 0.0;
            for (std::size_t k = 0; k <= t; ++k)
                sum = sum + std::ldexp(u[k], -static_cast<int>(t - k));
            CHECK(x == sum);
        }
    }

    TEST_CASE("washout erases the initial state")
    {
        std::vector<double> u(600);
        Rng rng = make_rng(2);
        std::uniform_real_distribution<double> dist(-1.0, 1.0);
        for (double& v : u)
            v = dist(rng);

        auto simple = [](double s, double in) { return simple_model_step(s, in); };
        CHECK(run_washout(simple, 0, std::span<const double>(u), 0.75) == 0.75);
        const double a = run_washout(simple, 50, std::span<const double>(u), 2.0);
        const double b = run_washout(simple, 50, std::span<const double>(u), -2.0);
        CHECK(std::abs(a - b) <= std::ldexp(4.0, -50));

        const EsnWeights w = build_esn(config(50, 2), rng);
        auto esn = [&](const Vector& s, double in) {
            const double arr[] = {in};
            return esn_step(w, s, arr);
        };
        const Vector ea = run_washout(esn, 500, std::span<const double>(u), Vector(Vector::Constant(50, 0.9)));
        const Vector eb = run_washout(esn, 500, std::span<const double>(u), Vector(Vector::Constant(50, -0.9)));
        CHECK((ea - eb).norm() < 1e-8);
    }

    TEST_CASE("weights csv round trip")
    {
        Rng rng = make_rng(44);
        EsnConfig c = config(7, 44);
        c.bias = 0.125;
        const EsnWeights w = build_esn(c, rng);
        const auto path = std::filesystem::temp_directory_path() / "ipc_test_weights.csv";
        save_weights_csv(path, w, c);
        WeightsHeader h;
        const EsnWeights r = load_weights_csv(path, &h);
        CHECK(r.recurrent == w.recurrent);
        CHECK(r.input == w.input);
        CHECK(r.bias == w.bias);
        CHECK(h.nodes == 7);
        CHECK(h.seed == 44);
        std::filesystem::remove(path);
        CHECK_THROWS(load_weights_csv(path));
    }
}
