#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "specsel/errors.hpp"
#include "specsel/models.hpp"

namespace specsel {

KMeansResult kmeans(const Eigen::MatrixXd& x, int clusters, std::uint64_t seed, int max_iterations) {
    const Eigen::Index p = x.rows();
    if (clusters < 1) throw PreconditionError("k-means needs at least one cluster");
    if (clusters > p)
        throw PreconditionError("k-means: " + std::to_string(clusters) + " clusters for " + std::to_string(p) +
                                " points");
    const auto m = static_cast<Eigen::Index>(clusters);
    std::mt19937_64 rng(seed);

    // k-means++ seeding
    KMeansResult out;
    out.centers.resize(m, x.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(p), false);
    std::uniform_int_distribution<Eigen::Index> pick(0, p - 1);
    Eigen::Index first = pick(rng);
    out.centers.row(0) = x.row(first);
    chosen[static_cast<std::size_t>(first)] = true;
    Eigen::VectorXd nearest = (x.rowwise() - out.centers.row(0)).rowwise().squaredNorm();
    for (Eigen::Index c = 1; c < m; ++c) {
        Eigen::Index next = 0;
        const double total = nearest.sum();
        if (total > 0.0) {
            std::uniform_real_distribution<double> unit(0.0, total);
            double target = unit(rng);
            next = p - 1;
            for (Eigen::Index i = 0; i < p; ++i) {
                target -= nearest[i];
                if (target < 0.0 && nearest[i] > 0.0) {
                    next = i;
                    break;
                }
            }
            while (nearest[next] == 0.0 && next > 0) --next; // guard against rounding at the tail
        } else {
            // Fewer distinct points than clusters: take any unused point.
            std::vector<Eigen::Index> unused;
            for (Eigen::Index i = 0; i < p; ++i)
                if (!chosen[static_cast<std::size_t>(i)]) unused.push_back(i);
            std::uniform_int_distribution<std::size_t> u(0, unused.size() - 1);
            next = unused[u(rng)];
        }
        chosen[static_cast<std::size_t>(next)] = true;
        out.centers.row(c) = x.row(next);
        nearest = nearest.cwiseMin((x.rowwise() - out.centers.row(c)).rowwise().squaredNorm());
    }

    // Lloyd iterations
    out.assignments.assign(static_cast<std::size_t>(p), -1);
    for (int it = 0; it < max_iterations; ++it) {
        bool changed = false;
        double distortion = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (Eigen::Index c = 0; c < m; ++c) {
                const double d = (x.row(i) - out.centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            distortion += best_d;
            if (out.assignments[static_cast<std::size_t>(i)] != best) {
                out.assignments[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        out.distortion.push_back(distortion);
        out.iterations = it + 1;
        if (!changed) break;

        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, x.cols());
        std::vector<int> count(static_cast<std::size_t>(m), 0);
        for (Eigen::Index i = 0; i < p; ++i) {
            const int c = out.assignments[static_cast<std::size_t>(i)];
            sums.row(c) += x.row(i);
            ++count[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index c = 0; c < m; ++c)
            if (count[static_cast<std::size_t>(c)] > 0) out.centers.row(c) = sums.row(c) / count[static_cast<std::size_t>(c)];
    }

    const Eigen::RowVectorXd mean = x.colwise().mean();
    double data_variance = (x.rowwise() - mean).rowwise().squaredNorm().mean();
    const double floor = 1e-12 * (data_variance > 0.0 ? data_variance : 1.0);

    out.variances = Eigen::VectorXd::Zero(m);
    std::vector<int> count(static_cast<std::size_t>(m), 0);
    for (Eigen::Index i = 0; i < p; ++i) {
        const int c = out.assignments[static_cast<std::size_t>(i)];
        out.variances[c] += (x.row(i) - out.centers.row(c)).squaredNorm();
        ++count[static_cast<std::size_t>(c)];
    }
    for (Eigen::Index c = 0; c < m; ++c) {
        const int n = count[static_cast<std::size_t>(c)];
        out.variances[c] = n > 0 ? std::max(out.variances[c] / n, floor) : std::max(data_variance, floor);
    }
    return out;
}

} // namespace specsel
