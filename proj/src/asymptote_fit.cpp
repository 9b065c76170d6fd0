#include "ipc/asymptote_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace ipc {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;
using Vec3 = std::array<double, 3>;

double condition_number(const Mat3& m)
{
    Eigen::Matrix3d e;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            e(i, j) = m[i][j];
    const Eigen::Vector3d sv = Eigen::JacobiSVD<Eigen::Matrix3d>(e).singularValues();
    return sv[2] > 0.0 ? sv[0] / sv[2] : std::numeric_limits<double>::infinity();
}

// Gaussian elimination with full pivoting. Returns false on an exactly
// zero pivot.
bool solve3_full_pivot(Mat3 m, Vec3 rhs, Vec3& out)
{
    std::array<int, 3> col_of{0, 1, 2};
    for (int k = 0; k < 3; ++k) {
        int pr = k, pc = k;
        double best = 0.0;
        for (int i = k; i < 3; ++i)
            for (int j = k; j < 3; ++j)
                if (std::abs(m[i][j]) > best) {
                    best = std::abs(m[i][j]);
                    pr = i;
                    pc = j;
                }
        if (best == 0.0)
            return false;
        std::swap(m[k], m[pr]);
        std::swap(rhs[k], rhs[pr]);
        if (pc != k) {
            for (auto& row : m)
                std::swap(row[k], row[pc]);
            std::swap(col_of[k], col_of[pc]);
        }
        for (int i = k + 1; i < 3; ++i) {
            const double f = m[i][k] / m[k][k];
            for (int j = k; j < 3; ++j)
                m[i][j] -= f * m[k][j];
            rhs[i] -= f * rhs[k];
        }
    }
    Vec3 z{};
    for (int k = 2; k >= 0; --k) {
        double s = rhs[k];
        for (int j = k + 1; j < 3; ++j)
            s -= m[k][j] * z[j];
        z[k] = s / m[k][k];
    }
    for (int k = 0; k < 3; ++k)
        out[col_of[k]] = z[k];
    return true;
}

std::vector<MeanSample> sorted_copy(std::span<const MeanSample> samples)
{
    std::vector<MeanSample> v(samples.begin(), samples.end());
    std::sort(v.begin(), v.end(), [](const MeanSample& l, const MeanSample& r) {
        return std::tie(l.train_length, l.test_length, l.g_train, l.g_test)
               < std::tie(r.train_length, r.test_length, r.g_train, r.g_test);
    });
    return v;
}

} // namespace

double mean_fit_cost(std::span<const MeanSample> samples, double a, double b1, double b2)
{
    double cost = 0.0;
    for (const auto& s : samples) {
        const double r1 = a + b1 / s.train_length - s.g_train;
        const double r2 = a - b2 / s.test_length - s.g_test;
        cost += s.train_length * r1 * r1 + s.test_length * r2 * r2;
    }
    return 0.5 * cost;
}

std::array<double, 3> mean_fit_gradient(std::span<const MeanSample> samples, double a, double b1,
                                        double b2)
{
    std::array<double, 3> g{};
    for (const auto& s : samples) {
        const double r1 = a + b1 / s.train_length - s.g_train;
        const double r2 = a - b2 / s.test_length - s.g_test;
        g[0] += s.train_length * r1 + s.test_length * r2;
        g[1] += r1;
        g[2] -= r2;
    }
    return g;
}

MeanFit fit_means(std::span<const MeanSample> samples)
{
    std::set<double> lengths;
    for (const auto& s : samples) {
        if (!(s.train_length >= 1.0 && s.test_length >= 1.0))
            throw std::invalid_argument("fit_means: lengths must be at least 1");
        lengths.insert(s.train_length);
    }
    const auto ordered = sorted_copy(samples);

    double gamma = 0, beta1 = 0, beta2 = 0, s1 = 0, s2 = 0, t1 = 0, t2 = 0;
    for (const auto& s : ordered) {
        gamma += s.train_length + s.test_length;
        beta1 += 1.0 / s.train_length;
        beta2 += 1.0 / s.test_length;
        s1 += s.train_length * s.g_train;
        s2 += s.test_length * s.g_test;
        t1 += s.g_train;
        t2 += s.g_test;
    }
    const auto n = static_cast<double>(ordered.size());

    // Stationarity in a, b1, b2 of the weighted cost.
    const Mat3 m{{{gamma, n, -n}, {n, beta1, 0.0}, {n, 0.0, -beta2}}};
    const Vec3 rhs{s1 + s2, t1, t2};

    MeanFit fit;
    fit.condition = ordered.empty() ? std::numeric_limits<double>::infinity() : condition_number(m);
    if (lengths.size() < 2 || !std::isfinite(fit.condition) || fit.condition > 1e14)
        throw std::invalid_argument("fit_means: need at least two distinct lengths (condition estimate "
                                    + std::to_string(fit.condition) + ")");

    Vec3 x{};
    if (!solve3_full_pivot(m, rhs, x))
        throw std::invalid_argument("fit_means: singular normal system");
    fit.a = x[0];
    fit.b1 = x[1];
    fit.b2 = x[2];
#ifdef IPC_SABOTAGE_B2_SIGN
    fit.b2 = -fit.b2;
#endif
    fit.cost = mean_fit_cost(ordered, fit.a, fit.b1, fit.b2);
    return fit;
}

double fit_variance(std::span<const VarSample> samples)
{
    if (samples.empty())
        throw std::invalid_argument("fit_variance: no samples");
    double total = 0.0;
    for (const auto& s : samples)
        total += s.train_length * s.s2_train + s.test_length * s.s2_test;
    return total / (2.0 * static_cast<double>(samples.size()));
}

double variance_fit_cost(std::span<const VarSample> samples, double d)
{
    double cost = 0.0;
    for (const auto& s : samples) {
        const double r1 = d / s.train_length - s.s2_train;
        const double r2 = d / s.test_length - s.s2_test;
        cost += s.train_length * s.train_length * r1 * r1 + s.test_length * s.test_length * r2 * r2;
    }
    return 0.5 * cost;
}

SlopeFit loglog_slope(std::span<const VarSample> samples)
{
    std::vector<std::pair<double, double>> pts;
    SlopeFit fit;
    auto add = [&](double length, double s2) {
        if (s2 > 0.0 && length > 0.0)
            pts.emplace_back(std::log(length), std::log(s2));
        else
            ++fit.excluded;
    };
    for (const auto& s : samples) {
        add(s.train_length, s.s2_train);
        add(s.test_length, s.s2_test);
    }
    if (pts.size() < 3)
        throw std::invalid_argument("loglog_slope: fewer than 3 positive variances");

    const auto n = static_cast<double>(pts.size());
    double mx = 0, my = 0;
    for (const auto& [x, y] : pts) {
        mx += x;
        my += y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : pts) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (!(sxx > 0.0))
        throw std::invalid_argument("loglog_slope: all lengths identical");
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0;
    for (const auto& [x, y] : pts) {
        const double r = y - fit.intercept - fit.slope * x;
        rss += r * r;
    }
    fit.standard_error = std::sqrt(rss / (n - 2.0) / sxx);
    fit.used = pts.size();
    return fit;
}

ZeroIpcDecision decide_zero_ipc(double a, double slope, double a_tol, double slope_tol)
{
    if (!(a_tol > 0.0 && slope_tol > 0.0))
        throw std::invalid_argument("decide_zero_ipc: thresholds must be positive");
    ZeroIpcDecision d;
    d.a = a;
    d.slope = slope;
    d.a_tol = a_tol;
    d.slope_tol = slope_tol;
    d.is_zero = std::abs(a) < a_tol && slope < -1.0 - slope_tol;
    return d;
}

AsymptoteCoefficients asymptotic_coefficients(const TheoryTerms& t, double ratio)
{
    if (!(t.mu0 > 0.0))
        throw std::invalid_argument("asymptotic_coefficients: mu0 must be positive");
    if (!(ratio > 0.0))
        throw std::invalid_argument("asymptotic_coefficients: T/T' must be positive");
    const double mu0 = t.mu0, l = t.loss_at_w0;
    const double mu2 = mu0 * mu0, mu3 = mu2 * mu0, mu4 = mu3 * mu0;

    const double normalization = t.cov_loss_mu / mu2 - l * t.var_mu / mu3;
    const double overfit = t.trace_i_jinv / mu0;

    AsymptoteCoefficients c;
    c.a = 1.0 - l / mu0;
    c.b1 = normalization + overfit;
    c.b2 = -(normalization - overfit / ratio);
    c.d = t.var_loss / mu2 + l * l * t.var_mu / mu4 - 2.0 * l * t.cov_loss_mu / mu3;
    return c;
}

double variance_of_variance(double s2, std::uint64_t trials)
{
    if (trials < 2)
        throw std::invalid_argument("variance_of_variance: need at least two trials");
    const auto n = static_cast<double>(trials);
    return 2.0 * n * s2 * s2 / ((n - 1.0) * (n - 1.0));
}

} // namespace ipc
