#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace specsel {

enum class NeighborSearch { brute_force, kd_tree };

struct MiEstimatorConfig {
    int k = 6;
    /// Relative amplitude of the tie-breaking jitter, applied only to
    /// coordinates that contain exact duplicates.
    double jitter_scale = 1e-10;
    std::uint64_t seed = 0;
    NeighborSearch search = NeighborSearch::brute_force;
};

struct JointSample {
    Eigen::MatrixXd x; ///< P x d feature block
    Eigen::VectorXd y; ///< P target values
};

struct MiEstimate {
    double nats = 0.0;
    bool degenerate = false; ///< target has zero variance
    bool jittered = false;   ///< duplicates were broken with seeded noise
};

/// Digamma function; accurate to ~1e-12 for v > 0. Throws DomainError for v <= 0.
double digamma(double v);

/// Per-point statistics of the nearest-neighbour estimator: `radius` is the
/// max-norm distance to the k-th joint neighbour, and nx / ny count marginal
/// neighbours strictly inside it.
struct NeighborCounts {
    std::vector<double> radius;
    std::vector<int> nx;
    std::vector<int> ny;
};

NeighborCounts neighbor_counts(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k, NeighborSearch search);

/// Kraskov-Stoegbauer-Grassberger estimator (first variant), in nats:
/// psi(k) + psi(P) - < psi(nx + 1) + psi(ny + 1) >.
MiEstimate mutual_information(const JointSample& sample, const MiEstimatorConfig& config);

/// Same estimator on the listed columns of `features`.
MiEstimate mutual_information_subset(const Eigen::MatrixXd& features, std::span<const std::size_t> columns,
                                     const Eigen::VectorXd& y, const MiEstimatorConfig& config);

} // namespace specsel
