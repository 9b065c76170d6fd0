#include "ipc/esn.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

namespace ipc {

void EsnConfig::validate() const
{
    if (nodes == 0)
        throw std::invalid_argument("ESN needs at least one node");
    if (input_dim == 0)
        throw std::invalid_argument("ESN input dimension must be positive");
    if (!(spectral_radius > 0.0))
        throw std::invalid_argument("ESN spectral radius must be positive");
    if (!(density > 0.0 && density <= 1.0))
        throw std::invalid_argument("ESN density must lie in (0, 1]");
    if (!(input_scale > 0.0))
        throw std::invalid_argument("ESN input scale must be positive");
}

double spectral_radius(const Matrix& m)
{
    if (m.rows() == 1)
        return std::abs(m(0, 0));
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigenvalue computation did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

PowerIterationResult power_iteration_radius(const Matrix& m, int max_iterations, double tolerance,
                                            std::uint64_t seed)
{
    PowerIterationResult result;
    Rng rng = make_rng(seed);
    std::normal_distribution<double> normal;
    Vector x(m.rows());
    for (Eigen::Index i = 0; i < x.size(); ++i)
        x[i] = normal(rng);
    x.normalize();

    for (int it = 0; it < max_iterations; ++it) {
        const Vector a = m * x;
        const Vector b = m * a;
        const double bn = b.norm();
        result.iterations = it + 1;
        if (bn == 0.0) {
            result.radius = 0.0;
            result.converged = true;
            break;
        }

        // Least-squares fit of b = p a + q x.
        const double aa = a.squaredNorm(), ax = a.dot(x), xx = x.squaredNorm();
        const double ba = b.dot(a), bx = b.dot(x);
        const double det = aa * xx - ax * ax;
        double residual;
        if (std::abs(det) <= 1e-14 * aa * xx) {
            // a is parallel to x: a real dominant eigenvalue.
            result.radius = std::sqrt(aa / xx);
            residual = (a - (ax / xx) * x).norm() / a.norm();
        } else {
            const double p = (ba * xx - bx * ax) / det;
            const double q = (aa * bx - ax * ba) / det;
            const double disc = p * p + 4.0 * q;
            if (disc >= 0.0) {
                const double s = std::sqrt(disc);
                result.radius = std::max(std::abs(0.5 * (p + s)), std::abs(0.5 * (p - s)));
            } else {
                result.radius = std::sqrt(-q);
            }
            residual = (b - p * a - q * x).norm() / bn;
        }

        // The recurrence fits exactly once the iterate lies in the dominant
        // invariant subspace; a small step-to-step change alone can stall
        // when a third eigenvalue is close in modulus.
        if (residual <= tolerance) {
            result.converged = true;
            break;
        }
        x = b / bn;
    }
    return result;
}

void rescale_spectral_radius(Matrix& m, double target)
{
    const double current = spectral_radius(m);
    if (!(current > std::numeric_limits<double>::min() * 1e4))
        throw std::runtime_error("spectral radius is numerically zero; cannot rescale");
    m *= target / current;
}

EsnWeights build_esn(const EsnConfig& config, Rng& rng)
{
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.nodes);
    const auto d0 = static_cast<Eigen::Index>(config.input_dim);
    const std::size_t cells = config.nodes * config.nodes;
    const auto nonzero = static_cast<std::size_t>(std::llround(config.density * static_cast<double>(cells)));

    std::normal_distribution<double> normal;
    constexpr int max_attempts = 8;
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        // Partial Fisher-Yates: the first `nonzero` slots become the support.
        std::vector<std::size_t> positions(cells);
        std::iota(positions.begin(), positions.end(), std::size_t{0});
        for (std::size_t i = 0; i < nonzero; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, cells - 1);
            std::swap(positions[i], positions[pick(rng)]);
        }

        EsnWeights w;
        w.recurrent = Matrix::Zero(n, n);
        for (std::size_t i = 0; i < nonzero; ++i) {
            const auto row = static_cast<Eigen::Index>(positions[i] / config.nodes);
            const auto col = static_cast<Eigen::Index>(positions[i] % config.nodes);
            w.recurrent(row, col) = normal(rng);
        }
        w.input.resize(n, d0);
        for (Eigen::Index j = 0; j < d0; ++j)
            for (Eigen::Index i = 0; i < n; ++i)
                w.input(i, j) = config.input_scale * normal(rng);
        w.bias = Vector::Constant(n, config.bias);

        const double radius = spectral_radius(w.recurrent);
        if (radius > 1e-12) {
            w.recurrent *= config.spectral_radius / radius;
            return w;
        }
    }
    throw std::runtime_error("build_esn: recurrent matrix had zero spectral radius in every attempt");
}

void esn_step(const EsnWeights& weights, const Vector& state, std::span<const double> u_prev,
              Vector& next)
{
    const Eigen::Map<const Vector> u(u_prev.data(), static_cast<Eigen::Index>(u_prev.size()));
    next.noalias() = weights.recurrent.transpose() * state;
    next.noalias() += weights.input * u;
    next += weights.bias;
    next = next.array().tanh().matrix();
}

Vector esn_step(const EsnWeights& weights, const Vector& state, std::span<const double> u_prev)
{
    if (static_cast<std::size_t>(state.size()) != weights.nodes() || u_prev.size() != weights.input_dim())
        throw std::invalid_argument("esn_step: dimension mismatch");
    Vector next(state.size());
    esn_step(weights, state, u_prev, next);
    return next;
}

namespace {

void write_rows(std::ostream& os, const Matrix& m)
{
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            os << (j ? "," : "") << m(i, j);
        os << '\n';
    }
}

std::vector<double> parse_row(const std::string& line)
{
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        out.push_back(std::stod(cell));
    return out;
}

} // namespace

void save_weights_csv(const std::filesystem::path& path, const EsnWeights& weights,
                      const EsnConfig& config)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    os << std::setprecision(17);
    os << "# esn-weights v1 nodes=" << weights.nodes() << " input_dim=" << weights.input_dim()
       << " spectral_radius=" << config.spectral_radius << " density=" << config.density
       << " seed=" << config.seed << '\n';
    write_rows(os, weights.recurrent);
    write_rows(os, weights.input);
    write_rows(os, weights.bias.transpose());
}

EsnWeights load_weights_csv(const std::filesystem::path& path, WeightsHeader* header)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(is, line);
    if (line.rfind("# esn-weights v1 ", 0) != 0)
        throw std::runtime_error(path.string() + ": not an esn-weights v1 file");

    WeightsHeader h;
    std::stringstream hs(line.substr(17));
    std::string field;
    while (hs >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos)
            continue;
        const std::string key = field.substr(0, eq), value = field.substr(eq + 1);
        if (key == "nodes")
            h.nodes = std::stoull(value);
        else if (key == "input_dim")
            h.input_dim = std::stoull(value);
        else if (key == "spectral_radius")
            h.spectral_radius = std::stod(value);
        else if (key == "density")
            h.density = std::stod(value);
        else if (key == "seed")
            h.seed = std::stoull(value);
    }
    if (h.nodes == 0 || h.input_dim == 0)
        throw std::runtime_error(path.string() + ": header lacks dimensions");

    const auto n = static_cast<Eigen::Index>(h.nodes);
    const auto d0 = static_cast<Eigen::Index>(h.input_dim);
    auto read_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (!std::getline(is, line))
                throw std::runtime_error(path.string() + ": truncated weights file");
            const auto row = parse_row(line);
            if (static_cast<Eigen::Index>(row.size()) != cols)
                throw std::runtime_error(path.string() + ": wrong column count");
            for (Eigen::Index j = 0; j < cols; ++j)
                m(i, j) = row[static_cast<std::size_t>(j)];
        }
        return m;
    };

    EsnWeights w;
    w.recurrent = read_matrix(n, n);
    w.input = read_matrix(n, d0);
    w.bias = read_matrix(1, n).transpose();
    if (header)
        *header = h;
    return w;
}

} // namespace ipc
