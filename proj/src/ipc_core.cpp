#include "ipc/ipc_core.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace ipc {

MomentAccumulator::MomentAccumulator(std::size_t feature_dim, std::size_t target_dim)
    : sum_xy_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(feature_dim),
                                    static_cast<Eigen::Index>(target_dim))),
      sum_xx_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(feature_dim),
                                    static_cast<Eigen::Index>(feature_dim)))
{
    if (feature_dim == 0 || target_dim == 0)
        throw std::invalid_argument("accumulator dimensions must be positive");
}

void MomentAccumulator::accumulate(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != feature_dim() || y.size() != target_dim())
        throw std::invalid_argument("accumulate: dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    if (!xv.allFinite() || !yv.allFinite())
        throw std::invalid_argument("accumulate: non-finite sample");

    ++n_;
    sum_y2_ += yv.squaredNorm();
    sum_xy_.noalias() += xv * yv.transpose();
    sum_xx_.selfadjointView<Eigen::Lower>().rankUpdate(xv);
}

void MomentAccumulator::accumulate(const Eigen::VectorXd& x, double y)
{
    accumulate(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())),
               std::span<const double>(&y, 1));
}

void MomentAccumulator::merge(const MomentAccumulator& other)
{
    if (other.feature_dim() != feature_dim() || other.target_dim() != target_dim())
        throw std::invalid_argument("merge: dimension mismatch");
    n_ += other.n_;
    sum_y2_ += other.sum_y2_;
    sum_xy_ += other.sum_xy_;
    sum_xx_.triangularView<Eigen::Lower>() += other.sum_xx_;
}

Eigen::MatrixXd MomentAccumulator::gram() const
{
    return sum_xx_.selfadjointView<Eigen::Lower>();
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v)
{
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v)
{
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

class BlobReader {
public:
    explicit BlobReader(std::span<const std::uint8_t> blob) : blob_(blob) {}

    std::uint64_t take(int bytes)
    {
        if (pos_ + static_cast<std::size_t>(bytes) > blob_.size())
            throw std::invalid_argument("accumulator blob truncated");
        std::uint64_t v = 0;
        for (int i = 0; i < bytes; ++i)
            v |= static_cast<std::uint64_t>(blob_[pos_++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(take(8)); }
    bool exhausted() const noexcept { return pos_ == blob_.size(); }

private:
    std::span<const std::uint8_t> blob_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t blob_magic = 0x4d435049; // "IPCM" little-endian

} // namespace

std::vector<std::uint8_t> MomentAccumulator::serialize() const
{
    std::vector<std::uint8_t> out;
    put_u32(out, blob_magic);
    put_u32(out, blob_version);
    put_u32(out, static_cast<std::uint32_t>(feature_dim()));
    put_u32(out, static_cast<std::uint32_t>(target_dim()));
    put_u64(out, n_);
    put_f64(out, sum_y2_);
    for (Eigen::Index i = 0; i < sum_xy_.size(); ++i)
        put_f64(out, sum_xy_.data()[i]);
    const Eigen::MatrixXd g = gram();
    for (Eigen::Index i = 0; i < g.size(); ++i)
        put_f64(out, g.data()[i]);
    return out;
}

MomentAccumulator MomentAccumulator::deserialize(std::span<const std::uint8_t> blob)
{
    BlobReader in(blob);
    if (in.take(4) != blob_magic)
        throw std::invalid_argument("accumulator blob: bad magic");
    if (const auto version = in.take(4); version != blob_version)
        throw std::invalid_argument("accumulator blob: unsupported version " + std::to_string(version));
    const auto feature = static_cast<std::size_t>(in.take(4));
    const auto target = static_cast<std::size_t>(in.take(4));
    MomentAccumulator acc(feature, target);
    acc.n_ = in.take(8);
    acc.sum_y2_ = in.f64();
    for (Eigen::Index i = 0; i < acc.sum_xy_.size(); ++i)
        acc.sum_xy_.data()[i] = in.f64();
    for (Eigen::Index i = 0; i < acc.sum_xx_.size(); ++i)
        acc.sum_xx_.data()[i] = in.f64();
    if (!in.exhausted())
        throw std::invalid_argument("accumulator blob: trailing bytes");
    return acc;
}

ReadoutSolution solve_readout(const MomentAccumulator& train)
{
    if (train.count() == 0)
        throw std::invalid_argument("solve_readout: empty training accumulator");
    const Eigen::MatrixXd g = train.gram();
    const double scale = g.cwiseAbs().maxCoeff();
    if (!(scale > 0.0))
        throw std::invalid_argument("solve_readout: all-zero Gram matrix");

    ReadoutSolution sol;
    sol.solve_tolerance = readout_rel_tolerance;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
        const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
        if (d.minCoeff() > readout_rel_tolerance * d.maxCoeff()) {
            sol.w = ldlt.solve(train.sum_xy());
            sol.gram_rank = g.rows();
            return sol;
        }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    const double cutoff = readout_rel_tolerance * lambda.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > cutoff) {
            inv[i] = 1.0 / lambda[i];
            ++sol.gram_rank;
        }
    }
    const Eigen::MatrixXd& v = eig.eigenvectors();
    sol.w = v * inv.asDiagonal() * (v.transpose() * train.sum_xy());
    sol.pseudo_inverse = true;
    return sol;
}

double training_ipc(const MomentAccumulator& train)
{
    if (!(train.sum_y2() > 0.0))
        throw std::invalid_argument("training_ipc: target is identically zero");
    const ReadoutSolution sol = solve_readout(train);
    const double captured = (train.sum_xy().transpose() * sol.w).trace();
    return captured / train.sum_y2();
}

double test_ipc(const ReadoutSolution& readout, const MomentAccumulator& test)
{
    if (test.count() == 0)
        throw std::invalid_argument("test_ipc: empty test accumulator");
    if (!(test.sum_y2() > 0.0))
        throw std::invalid_argument("test_ipc: test target is identically zero");
    if (static_cast<std::size_t>(readout.w.rows()) != test.feature_dim()
        || static_cast<std::size_t>(readout.w.cols()) != test.target_dim())
        throw std::invalid_argument("test_ipc: readout and test segment dimensions differ");
    const Eigen::MatrixXd& w = readout.w;
    const Eigen::MatrixXd inner = 2.0 * test.sum_xy() - test.gram() * w;
    return (w.transpose() * inner).trace() / test.sum_y2();
}

double test_ipc(const MomentAccumulator& train, const MomentAccumulator& test)
{
    if (train.feature_dim() != test.feature_dim() || train.target_dim() != test.target_dim())
        throw std::invalid_argument("test_ipc: segment dimensions differ");
    return test_ipc(solve_readout(train), test);
}

double chi_square_upper_quantile(unsigned dof, double p)
{
    if (dof == 0)
        throw std::invalid_argument("chi-square degrees of freedom must be positive");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi-square tail probability must lie in (0, 1)");
    return 2.0 * boost::math::gamma_q_inv(0.5 * dof, p);
}

double chi_square_threshold(unsigned dof, double p, std::uint64_t length)
{
    if (length == 0)
        throw std::invalid_argument("chi_square_threshold: length must be positive");
    return 2.0 * chi_square_upper_quantile(dof, p) / static_cast<double>(length);
}

} // namespace ipc
