#include "specsel/mi.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "specsel/errors.hpp"
#include "specsel/kdtree.hpp"

namespace specsel {

double digamma(double v) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("digamma is only defined here for finite v > 0");
    double result = 0.0;
    while (v < 6.0) {
        result -= 1.0 / v;
        v += 1.0;
    }
    const double inv = 1.0 / v;
    const double inv2 = inv * inv;
    // Asymptotic expansion in Bernoulli numbers, truncated after x^-14.
    const double series =
        inv2 * (1.0 / 12 -
                inv2 * (1.0 / 120 -
                        inv2 * (1.0 / 252 -
                                inv2 * (1.0 / 240 - inv2 * (1.0 / 132 - inv2 * (691.0 / 32760 - inv2 / 12))))));
    return result + std::log(v) - 0.5 * inv - series;
}

namespace {

bool has_duplicates(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return std::adjacent_find(values.begin(), values.end()) != values.end();
}

// Row-major copy of the joint sample; jitter is added to duplicated columns.
struct PreparedSample {
    std::vector<double> x; // P x d
    std::vector<double> y; // P
    std::vector<double> joint; // P x (d + 1)
    std::size_t p = 0;
    std::size_t d = 0;
    bool jittered = false;
};

PreparedSample prepare(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const MiEstimatorConfig* config) {
    PreparedSample s;
    s.p = static_cast<std::size_t>(x.rows());
    s.d = static_cast<std::size_t>(x.cols());
    s.x.resize(s.p * s.d);
    s.y.assign(y.data(), y.data() + y.size());
    for (std::size_t i = 0; i < s.p; ++i)
        for (std::size_t c = 0; c < s.d; ++c)
            s.x[i * s.d + c] = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));

    if (config) {
        std::mt19937_64 rng(config->seed);
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        auto jitter = [&](auto get, auto set) {
            std::vector<double> col(s.p);
            for (std::size_t i = 0; i < s.p; ++i) col[i] = get(i);
            if (!has_duplicates(col)) return;
            double mean = 0.0;
            for (double v : col) mean += v;
            mean /= static_cast<double>(s.p);
            double var = 0.0;
            for (double v : col) var += (v - mean) * (v - mean);
            const double sd = std::sqrt(var / static_cast<double>(s.p));
            const double amplitude = config->jitter_scale * (sd > 0.0 ? sd : std::max(1.0, std::abs(mean)));
            for (std::size_t i = 0; i < s.p; ++i) set(i, col[i] + amplitude * unit(rng));
            s.jittered = true;
        };
        for (std::size_t c = 0; c < s.d; ++c)
            jitter([&](std::size_t i) { return s.x[i * s.d + c]; },
                   [&](std::size_t i, double v) { s.x[i * s.d + c] = v; });
        jitter([&](std::size_t i) { return s.y[i]; }, [&](std::size_t i, double v) { s.y[i] = v; });
    }

    s.joint.resize(s.p * (s.d + 1));
    for (std::size_t i = 0; i < s.p; ++i) {
        std::copy_n(s.x.begin() + static_cast<std::ptrdiff_t>(i * s.d), s.d,
                    s.joint.begin() + static_cast<std::ptrdiff_t>(i * (s.d + 1)));
        s.joint[i * (s.d + 1) + s.d] = s.y[i];
    }
    return s;
}

NeighborCounts counts_brute_force(const PreparedSample& s, int k) {
    NeighborCounts out;
    out.radius.resize(s.p);
    out.nx.resize(s.p);
    out.ny.resize(s.p);
    std::vector<double> dx(s.p), dy(s.p), dz(s.p);
    for (std::size_t i = 0; i < s.p; ++i) {
        const double* xi = s.x.data() + i * s.d;
        std::size_t m = 0;
        for (std::size_t j = 0; j < s.p; ++j) {
            if (j == i) continue;
            const double* xj = s.x.data() + j * s.d;
            double d = 0.0;
            for (std::size_t c = 0; c < s.d; ++c) d = std::max(d, std::abs(xi[c] - xj[c]));
            dx[m] = d;
            dy[m] = std::abs(s.y[i] - s.y[j]);
            dz[m] = std::max(d, dy[m]);
            ++m;
        }
        std::nth_element(dz.begin(), dz.begin() + (k - 1), dz.begin() + static_cast<std::ptrdiff_t>(m));
        const double r = dz[static_cast<std::size_t>(k - 1)];
        int nx = 0, ny = 0;
        for (std::size_t j = 0; j < m; ++j) {
            nx += dx[j] < r;
            ny += dy[j] < r;
        }
        out.radius[i] = r;
        out.nx[i] = nx;
        out.ny[i] = ny;
    }
    return out;
}

NeighborCounts counts_kd_tree(const PreparedSample& s, int k) {
    NeighborCounts out;
    out.radius.resize(s.p);
    out.nx.resize(s.p);
    out.ny.resize(s.p);
    const ChebyshevKdTree joint(s.joint, s.d + 1);
    const ChebyshevKdTree marginal_x(s.x, s.d);
    const ChebyshevKdTree marginal_y(s.y, 1);
    for (std::size_t i = 0; i < s.p; ++i) {
        const double r = joint.kth_neighbor_distance(i, static_cast<std::size_t>(k));
        out.radius[i] = r;
        out.nx[i] = static_cast<int>(marginal_x.count_closer(std::span(s.x).subspan(i * s.d, s.d), r, i));
        out.ny[i] = static_cast<int>(marginal_y.count_closer(std::span(s.y).subspan(i, 1), r, i));
    }
    return out;
}

void check_sample(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k) {
    if (x.rows() != y.size()) throw PreconditionError("feature and target sample sizes differ");
    if (x.cols() < 1) throw PreconditionError("feature block must have at least one column");
    if (k < 1) throw PreconditionError("neighbour count k must be at least 1");
    if (x.rows() <= k)
        throw PreconditionError("sample of size " + std::to_string(x.rows()) + " is too small for k = " +
                                std::to_string(k));
    if (!x.allFinite() || !y.allFinite()) throw PreconditionError("sample contains non-finite values");
}

} // namespace

NeighborCounts neighbor_counts(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int k, NeighborSearch search) {
    check_sample(x, y, k);
    const PreparedSample s = prepare(x, y, nullptr);
    return search == NeighborSearch::kd_tree ? counts_kd_tree(s, k) : counts_brute_force(s, k);
}

MiEstimate mutual_information(const JointSample& sample, const MiEstimatorConfig& config) {
    check_sample(sample.x, sample.y, config.k);
    const PreparedSample s = prepare(sample.x, sample.y, &config);
    const NeighborCounts counts =
        config.search == NeighborSearch::kd_tree ? counts_kd_tree(s, config.k) : counts_brute_force(s, config.k);

    std::vector<double> psi(s.p + 1);
    for (std::size_t v = 1; v <= s.p; ++v) psi[v] = digamma(static_cast<double>(v));
    double acc = 0.0;
    for (std::size_t i = 0; i < s.p; ++i)
        acc += psi[static_cast<std::size_t>(counts.nx[i]) + 1] + psi[static_cast<std::size_t>(counts.ny[i]) + 1];

    MiEstimate out;
    out.nats = psi[static_cast<std::size_t>(config.k)] + psi[s.p] - acc / static_cast<double>(s.p);
    out.jittered = s.jittered;
    out.degenerate = (sample.y.array() == sample.y[0]).all();
    return out;
}

MiEstimate mutual_information_subset(const Eigen::MatrixXd& features, std::span<const std::size_t> columns,
                                     const Eigen::VectorXd& y, const MiEstimatorConfig& config) {
    if (columns.empty()) throw PreconditionError("column subset is empty");
    JointSample sample;
    sample.x.resize(features.rows(), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] >= static_cast<std::size_t>(features.cols()))
            throw PreconditionError("column index " + std::to_string(columns[c]) + " out of range");
        sample.x.col(static_cast<Eigen::Index>(c)) = features.col(static_cast<Eigen::Index>(columns[c]));
    }
    sample.y = y;
    return mutual_information(sample, config);
}

} // namespace specsel
