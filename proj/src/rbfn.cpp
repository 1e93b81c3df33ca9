#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "specsel/errors.hpp"
#include "specsel/models.hpp"

namespace specsel {

Eigen::MatrixXd rbfn_kernels(const RbfnModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.centers.cols())
        throw PreconditionError("RBFN input has " + std::to_string(x.cols()) + " columns, model expects " +
                                std::to_string(model.centers.cols()));
    Eigen::MatrixXd k(x.rows(), model.centers.rows());
    for (Eigen::Index i = 0; i < model.centers.rows(); ++i) {
        const double width = model.width_scale * model.widths[i];
        const Eigen::VectorXd dist = (x.rowwise() - model.centers.row(i)).rowwise().norm();
        k.col(i) = (-(dist.array() / width).square()).exp();
    }
    return k;
}

namespace {

RbfnModel fit_from_clusters(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const KMeansResult& clusters,
                            double width_scale) {
    RbfnModel model;
    model.centers = clusters.centers;
    model.widths = clusters.variances.cwiseSqrt();
    model.width_scale = width_scale;

    const Eigen::Index m = model.centers.rows();
    Eigen::MatrixXd design(x.rows(), m + 1);
    design.leftCols(m) = rbfn_kernels(model, x);
    design.col(m).setOnes();

    const Eigen::VectorXd peak = design.leftCols(m).rowwise().maxCoeff();
    const auto vanished = (peak.array() < 1e-12).count();
    if (vanished > 0)
        model.warnings.push_back("kernels vanish for " + std::to_string(vanished) +
                                 " training samples; fit is poorly conditioned");

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    Eigen::VectorXd solution;
    if (qr.rank() == design.cols()) {
        solution = qr.solve(y);
    } else {
        Eigen::MatrixXd gram = design.transpose() * design;
        gram.diagonal().array() += 1e-8;
        solution = gram.ldlt().solve(design.transpose() * y);
        model.warnings.push_back("rank-deficient kernel design; ridge 1e-8 applied");
    }
    model.weights = solution.head(m);
    model.bias = solution[m];
    return model;
}

} // namespace

RbfnModel fit_rbfn(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int neurons, double width_scale,
                   std::uint64_t seed) {
    if (x.rows() != y.size()) throw PreconditionError("RBFN: input rows and target length differ");
    if (!(width_scale > 0.0)) throw PreconditionError("RBFN width scale must be positive");
    return fit_from_clusters(x, y, kmeans(x, neurons, seed), width_scale);
}

Eigen::VectorXd predict_rbfn(const RbfnModel& model, const Eigen::MatrixXd& x) {
    return rbfn_kernels(model, x) * model.weights + Eigen::VectorXd::Constant(x.rows(), model.bias);
}

RbfnCvResult cv_select_meta(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CvGrid& grid) {
    if (grid.neuron_counts.empty() || grid.width_scales.empty()) throw PreconditionError("empty CV grid");
    if (x.rows() != y.size()) throw PreconditionError("CV: input rows and target length differ");
    std::vector<int> neurons = grid.neuron_counts;
    std::vector<double> scales = grid.width_scales;
    std::sort(neurons.begin(), neurons.end());
    neurons.erase(std::unique(neurons.begin(), neurons.end()), neurons.end());
    std::sort(scales.begin(), scales.end());
    scales.erase(std::unique(scales.begin(), scales.end()), scales.end());

    RbfnCvResult out;
    if (x.rows() < 3 * neurons.back())
        out.warnings.push_back("fewer than 3 samples per neuron for the largest grid size (" +
                               std::to_string(neurons.back()) + ")");

    IndexSet all(static_cast<std::size_t>(x.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto folds = kfold_stratified(all, y, grid.folds, grid.seed);

    struct FoldData {
        Eigen::MatrixXd xtr, xva;
        Eigen::VectorXd ytr, yva;
    };
    std::vector<FoldData> data;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::vector<Eigen::Index> train, valid(folds[f].begin(), folds[f].end());
        for (std::size_t g = 0; g < folds.size(); ++g)
            if (g != f) train.insert(train.end(), folds[g].begin(), folds[g].end());
        std::sort(train.begin(), train.end());
        data.push_back({x(train, Eigen::all), x(valid, Eigen::all), y(train), y(valid)});
    }

    bool have_best = false;
    for (int m : neurons) {
        std::vector<KMeansResult> clusters;
        bool feasible = true;
        for (const auto& fd : data) {
            if (m > fd.xtr.rows()) {
                feasible = false;
                break;
            }
            clusters.push_back(kmeans(fd.xtr, m, grid.seed));
        }
        for (double s : scales) {
            CvCell cell{m, s, std::numeric_limits<double>::infinity(), feasible};
            if (feasible) {
                double total = 0.0;
                for (std::size_t f = 0; f < data.size(); ++f) {
                    const RbfnModel model = fit_from_clusters(data[f].xtr, data[f].ytr, clusters[f], s);
                    total += (predict_rbfn(model, data[f].xva) - data[f].yva).squaredNorm() /
                             static_cast<double>(data[f].yva.size());
                }
                cell.mse = total / static_cast<double>(data.size());
                if (!have_best || cell.mse < out.mse) {
                    have_best = true;
                    out.neurons = m;
                    out.width_scale = s;
                    out.mse = cell.mse;
                }
            }
            out.table.push_back(cell);
        }
    }
    if (!have_best) throw PreconditionError("no feasible (neurons, width) pair in the CV grid");
    return out;
}

} // namespace specsel
