#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ipc {

/// Running sums over one data segment: sum |y|^2, sum x y^T and sum x x^T.
///
/// Only the lower triangle of the Gram sum is updated during accumulation;
/// gram() returns the full symmetric matrix. Merging is exact addition, so
/// segments may be reduced in any grouping.
class MomentAccumulator {
public:
    MomentAccumulator() = default;
    MomentAccumulator(std::size_t feature_dim, std::size_t target_dim);

    /// Throws std::invalid_argument on dimension mismatch or a non-finite
    /// value. The accumulator is left unchanged on error.
    void accumulate(std::span<const double> x, std::span<const double> y);
    void accumulate(const Eigen::VectorXd& x, double y);

    void merge(const MomentAccumulator& other);

    std::uint64_t count() const noexcept { return n_; }
    std::size_t feature_dim() const noexcept { return static_cast<std::size_t>(sum_xy_.rows()); }
    std::size_t target_dim() const noexcept { return static_cast<std::size_t>(sum_xy_.cols()); }

    double sum_y2() const noexcept { return sum_y2_; }
    const Eigen::MatrixXd& sum_xy() const noexcept { return sum_xy_; }
    Eigen::MatrixXd gram() const;

    /// Little-endian blob: "IPCM", u32 version, u32 feature dim, u32 target
    /// dim, u64 n, then sum_y2, sum_xy (column-major), full Gram (column-major)
    /// as IEEE-754 doubles.
    std::vector<std::uint8_t> serialize() const;
    static MomentAccumulator deserialize(std::span<const std::uint8_t> blob);

    static constexpr std::uint32_t blob_version = 1;

private:
    std::uint64_t n_ = 0;
    double sum_y2_ = 0.0;
    Eigen::MatrixXd sum_xy_;
    Eigen::MatrixXd sum_xx_; // lower triangle authoritative
};

struct ReadoutSolution {
    Eigen::MatrixXd w;
    Eigen::Index gram_rank = 0;
    double solve_tolerance = 0.0;
    bool pseudo_inverse = false;
};

/// One trial's training and test IPC.
struct IpcSamplePair {
    std::uint64_t train_length = 0;
    std::uint64_t test_length = 0;
    double c_train = 0;
    double c_test = 0;
};

inline constexpr double readout_rel_tolerance = 1e-10;

/// Solves gram * w = sum_xy. Uses LDL^T when the Gram matrix is well
/// conditioned; otherwise the minimum-norm solution from the eigenbasis with
/// eigenvalues below readout_rel_tolerance * max eigenvalue dropped.
ReadoutSolution solve_readout(const MomentAccumulator& train);

/// Tr[sum_yx G^-1 sum_xy] / sum_y2 over the training segment.
double training_ipc(const MomentAccumulator& train);

/// Test IPC of the training readout on the held-out segment:
/// Tr[w^T (2 sum_xy' - G' w)] / sum_y2'.
double test_ipc(const MomentAccumulator& train, const MomentAccumulator& test);

/// Same as test_ipc with a precomputed readout.
double test_ipc(const ReadoutSolution& readout, const MomentAccumulator& test);

/// Upper-p quantile of the chi-square law with `dof` degrees of freedom.
double chi_square_upper_quantile(unsigned dof, double p);

/// Threshold 2 alpha / T with Prob(chi^2(dof) >= alpha) = p.
double chi_square_threshold(unsigned dof, double p, std::uint64_t length);

/// Heaviside gate: c when c exceeds the threshold, else zero.
constexpr double empirical_ipc(double c, double threshold) noexcept
{
    return c > threshold ? c : 0.0;
}

} // namespace ipc
