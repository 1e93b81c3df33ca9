#include <algorithm>
#include <cmath>
#include <limits>

#include "specsel/errors.hpp"
#include "specsel/models.hpp"

namespace specsel {

namespace {

// Standardized copy of the kept columns plus the bookkeeping LinearModel needs.
struct Standardized {
    Eigen::MatrixXd x;       // P x q_kept
    std::vector<Eigen::Index> kept;
    Eigen::VectorXd means;   // full width
    Eigen::VectorXd stds;    // full width, 1 for dropped columns
    IndexSet dropped;
    double y_mean = 0.0;
    Eigen::VectorXd y_centered;
};

Standardized standardize(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() != y.size()) throw PreconditionError("input rows and target length differ");
    if (x.rows() < 2) throw PreconditionError("at least two samples are required");
    Standardized s;
    s.means = x.colwise().mean().transpose();
    s.stds = Eigen::VectorXd::Ones(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double sd = std::sqrt((x.col(j).array() - s.means[j]).square().sum() / static_cast<double>(x.rows() - 1));
        if (sd > 1e-14 * std::max(1.0, std::abs(s.means[j]))) {
            s.stds[j] = sd;
            s.kept.push_back(j);
        } else {
            s.dropped.push_back(static_cast<std::size_t>(j));
        }
    }
    s.x.resize(x.rows(), static_cast<Eigen::Index>(s.kept.size()));
    for (std::size_t c = 0; c < s.kept.size(); ++c) {
        const Eigen::Index j = s.kept[c];
        s.x.col(static_cast<Eigen::Index>(c)) = (x.col(j).array() - s.means[j]) / s.stds[j];
    }
    s.y_mean = y.mean();
    s.y_centered = y.array() - s.y_mean;
    return s;
}

LinearModel assemble(const Standardized& s, const Eigen::VectorXd& beta_kept, Eigen::Index width) {
    LinearModel m;
    m.coefficients = Eigen::VectorXd::Zero(width);
    for (std::size_t c = 0; c < s.kept.size(); ++c) m.coefficients[s.kept[c]] = beta_kept[static_cast<Eigen::Index>(c)];
    m.intercept = s.y_mean;
    m.input_means = s.means;
    m.input_stds = s.stds;
    m.dropped_columns = s.dropped;
    if (!s.dropped.empty())
        m.warnings.push_back(std::to_string(s.dropped.size()) + " zero-variance input column(s) dropped");
    return m;
}

} // namespace

Eigen::VectorXd LinearModel::predict(const Eigen::MatrixXd& x) const {
    if (x.cols() != coefficients.size())
        throw PreconditionError("linear model expects " + std::to_string(coefficients.size()) + " inputs, got " +
                                std::to_string(x.cols()));
    return (x.rowwise() - input_means.transpose()) * raw_coefficients() +
           Eigen::VectorXd::Constant(x.rows(), intercept);
}

Eigen::VectorXd LinearModel::raw_coefficients() const { return coefficients.cwiseQuotient(input_stds); }

double LinearModel::raw_intercept() const { return intercept - raw_coefficients().dot(input_means); }

LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const Standardized s = standardize(x, y);
    if (x.rows() <= s.x.cols())
        throw PreconditionError("least squares needs more samples (" + std::to_string(x.rows()) +
                                ") than non-constant inputs (" + std::to_string(s.x.cols()) + ")");
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(s.x.cols());
    bool deficient = false;
    if (s.x.cols() > 0) {
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(s.x);
        beta = cod.solve(s.y_centered);
        deficient = cod.rank() < s.x.cols();
    }
    LinearModel m = assemble(s, beta, x.cols());
    m.rank_deficient = deficient;
    if (deficient) m.warnings.push_back("rank-deficient inputs; minimum-norm solution returned");
    return m;
}

LatentModel fit_latent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LatentKind kind, int n_components) {
    const auto bound = std::min<Eigen::Index>(x.rows() - 1, x.cols());
    if (n_components < 1 || n_components > bound)
        throw PreconditionError("component count " + std::to_string(n_components) + " outside [1, " +
                                std::to_string(bound) + "]");
    const Standardized s = standardize(x, y);
    const Eigen::Index q = s.x.cols();

    LatentModel out;
    out.kind = kind;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(q);

    if (q == 0) {
        out.warnings.push_back("all inputs are constant; model reduces to the mean");
        out.n_components = 0;
    } else if (kind == LatentKind::pcr) {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(s.x, Eigen::ComputeThinU | Eigen::ComputeThinV);
        const Eigen::VectorXd& sv = svd.singularValues();
        const double tol = static_cast<double>(std::max(s.x.rows(), q)) * std::numeric_limits<double>::epsilon() *
                           (sv.size() ? sv[0] : 0.0);
        Eigen::Index rank = 0;
        while (rank < sv.size() && sv[rank] > tol) ++rank;
        Eigen::Index k = n_components;
        if (k > rank) {
            out.warnings.push_back("requested " + std::to_string(n_components) + " components but rank is " +
                                   std::to_string(rank) + "; truncated");
            k = rank;
        }
        out.directions = svd.matrixV().leftCols(k);
        for (Eigen::Index c = 0; c < k; ++c)
            beta += svd.matrixV().col(c) * (svd.matrixU().col(c).dot(s.y_centered) / sv[c]);
        out.n_components = static_cast<int>(k);
    } else {
        Eigen::MatrixXd xr = s.x;
        Eigen::VectorXd yr = s.y_centered;
        Eigen::MatrixXd w(q, n_components), p(q, n_components);
        Eigen::VectorXd qload(n_components);
        const double x_scale = s.x.norm();
        Eigen::Index k = 0;
        for (; k < n_components; ++k) {
            Eigen::VectorXd wk = xr.transpose() * yr;
            const double norm = wk.norm();
            if (!(norm > 1e-12 * x_scale * std::max(1.0, s.y_centered.norm()))) break;
            wk /= norm;
            const Eigen::VectorXd t = xr * wk;
            const double tt = t.squaredNorm();
            if (!(tt > 1e-24 * x_scale * x_scale)) break;
            const Eigen::VectorXd pk = xr.transpose() * t / tt;
            qload[k] = yr.dot(t) / tt;
            xr -= t * pk.transpose();
            yr -= qload[k] * t;
            w.col(k) = wk;
            p.col(k) = pk;
        }
        if (k < n_components)
            out.warnings.push_back("requested " + std::to_string(n_components) + " components but only " +
                                   std::to_string(k) + " could be extracted; truncated");
        if (k > 0) {
            const Eigen::MatrixXd pw = p.leftCols(k).transpose() * w.leftCols(k);
            out.directions = w.leftCols(k) * pw.inverse();
            beta = out.directions * qload.head(k);
        }
        out.n_components = static_cast<int>(k);
    }
    out.linear = assemble(s, beta, x.cols());
    out.linear.warnings.insert(out.linear.warnings.end(), out.warnings.begin(), out.warnings.end());
    return out;
}

ComponentCvResult cv_select_components(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LatentKind kind,
                                       int max_components, int folds, std::uint64_t seed) {
    if (max_components < 1) throw PreconditionError("max_components must be at least 1");
    IndexSet all(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto parts = kfold_stratified(all, y, folds, seed);

    std::vector<double> total(static_cast<std::size_t>(max_components), 0.0);
    std::vector<bool> feasible(static_cast<std::size_t>(max_components), true);
    for (std::size_t f = 0; f < parts.size(); ++f) {
        std::vector<Eigen::Index> train, valid(parts[f].begin(), parts[f].end());
        for (std::size_t g = 0; g < parts.size(); ++g)
            if (g != f) train.insert(train.end(), parts[g].begin(), parts[g].end());
        std::sort(train.begin(), train.end());
        const Eigen::MatrixXd xtr = x(train, Eigen::all), xva = x(valid, Eigen::all);
        const Eigen::VectorXd ytr = y(train), yva = y(valid);
        const auto bound = std::min<Eigen::Index>(xtr.rows() - 1, xtr.cols());
        for (int k = 1; k <= max_components; ++k) {
            if (k > bound) {
                feasible[static_cast<std::size_t>(k - 1)] = false;
                continue;
            }
            const LatentModel m = fit_latent(xtr, ytr, kind, k);
            total[static_cast<std::size_t>(k - 1)] +=
                (m.predict(xva) - yva).squaredNorm() / static_cast<double>(yva.size());
        }
    }
    ComponentCvResult out;
    bool have = false;
    for (int k = 1; k <= max_components; ++k) {
        const auto idx = static_cast<std::size_t>(k - 1);
        const double mse = feasible[idx] ? total[idx] / static_cast<double>(parts.size())
                                         : std::numeric_limits<double>::infinity();
        out.table.emplace_back(k, mse);
        if (feasible[idx] && (!have || mse < out.mse)) {
            have = true;
            out.n_components = k;
            out.mse = mse;
        }
    }
    if (!have) throw PreconditionError("no feasible component count in cross-validation");
    return out;
}

std::vector<Interval> important_wavelengths_linear(const LinearModel& model, const Eigen::VectorXd& wavelengths,
                                                   double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0, 1)");
    if (wavelengths.size() != model.coefficients.size())
        throw PreconditionError("wavelength grid and coefficient vector differ in length");
    std::vector<Interval> out;
    if (model.coefficients.size() == 0) return out;
    const Eigen::VectorXd mag = model.coefficients.cwiseAbs();
    const double threshold = epsilon * mag.maxCoeff();
    Eigen::Index run_start = -1;
    for (Eigen::Index i = 0; i <= mag.size(); ++i) {
        const bool on = i < mag.size() && mag[i] > threshold;
        if (on && run_start < 0) run_start = i;
        if (!on && run_start >= 0) {
            out.push_back({wavelengths[run_start], wavelengths[i - 1]});
            run_start = -1;
        }
    }
    return out;
}

double nmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double variance) {
    if (!(variance > 0.0)) throw PreconditionError("NMSE needs a positive variance");
    if (y_true.size() != y_pred.size()) throw PreconditionError("NMSE: length mismatch");
    if (y_true.size() == 0) throw PreconditionError("NMSE of an empty set");
    return (y_true - y_pred).squaredNorm() / static_cast<double>(y_true.size()) / variance;
}

double union_variance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const auto n = static_cast<double>(a.size() + b.size());
    if (n == 0) throw PreconditionError("variance of an empty set");
    const double mean = (a.sum() + b.sum()) / n;
    return ((a.array() - mean).square().sum() + (b.array() - mean).square().sum()) / n;
}

const char* to_string(LatentKind kind) { return kind == LatentKind::pcr ? "pcr" : "plsr"; }

} // namespace specsel
