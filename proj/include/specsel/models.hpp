#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "specsel/bspline.hpp"
#include "specsel/spectra.hpp"

namespace specsel {

// ---------------------------------------------------------------------------
// Vector quantization

struct KMeansResult {
    Eigen::MatrixXd centers;              ///< M x q
    std::vector<int> assignments;         ///< cluster of each row
    Eigen::VectorXd variances;            ///< mean squared distance to the center
    std::vector<double> distortion;       ///< total squared distance after each assignment pass
    int iterations = 0;
};

/// Seeded k-means++ initialization followed by Lloyd iterations until the
/// assignment stops changing or `max_iterations` passes. Cluster variances are
/// floored at 1e-12 times the data variance.
KMeansResult kmeans(const Eigen::MatrixXd& x, int clusters, std::uint64_t seed, int max_iterations = 100);

// ---------------------------------------------------------------------------
// Radial basis function network

struct RbfnModel {
    Eigen::MatrixXd centers;   ///< M x q
    Eigen::VectorXd widths;    ///< sigma_i, square root of the cluster variance
    Eigen::VectorXd weights;   ///< lambda_i
    double bias = 0.0;
    double width_scale = 1.0;
    std::vector<std::string> warnings;
};

/// Kernel matrix exp(-(|x - c_i| / (width_scale * sigma_i))^2), rows = samples.
Eigen::MatrixXd rbfn_kernels(const RbfnModel& model, const Eigen::MatrixXd& x);

/// Centers and widths from k-means, then weights and bias by least squares on
/// the kernel design (ridge 1e-8 if that design is rank deficient).
RbfnModel fit_rbfn(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int neurons, double width_scale,
                   std::uint64_t seed);

Eigen::VectorXd predict_rbfn(const RbfnModel& model, const Eigen::MatrixXd& x);

struct CvGrid {
    std::vector<int> neuron_counts{2, 3, 5, 8, 12, 20, 30};
    std::vector<double> width_scales{0.5, 1.0, 2.0, 4.0, 8.0};
    int folds = 3;
    std::uint64_t seed = 0;
};

struct CvCell {
    int neurons;
    double width_scale;
    double mse;     ///< mean validation MSE over the folds; infinity if infeasible
    bool feasible;
};

struct RbfnCvResult {
    int neurons = 0;
    double width_scale = 0.0;
    double mse = 0.0;
    std::vector<CvCell> table;
    std::vector<std::string> warnings;
};

/// Grid search of (neurons, width_scale) by stratified k-fold CV. Ties go to
/// fewer neurons, then to the smaller scale.
RbfnCvResult cv_select_meta(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const CvGrid& grid);

// ---------------------------------------------------------------------------
// Linear models

/// y = intercept + sum_i coefficients_i * (x_i - mean_i) / std_i.
/// Zero-variance inputs are dropped: their coefficient is 0 and std is 1.
struct LinearModel {
    Eigen::VectorXd coefficients;
    double intercept = 0.0;
    Eigen::VectorXd input_means;
    Eigen::VectorXd input_stds;
    IndexSet dropped_columns;
    bool rank_deficient = false;
    std::vector<std::string> warnings;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    /// Coefficients and intercept acting on unscaled inputs.
    Eigen::VectorXd raw_coefficients() const;
    double raw_intercept() const;
};

/// Ordinary least squares on standardized inputs. Rank deficiency gives the
/// minimum-norm solution and sets `rank_deficient`.
LinearModel fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

enum class LatentKind { pcr, plsr };

struct LatentModel {
    LatentKind kind = LatentKind::plsr;
    int n_components = 0;
    Eigen::MatrixXd directions; ///< q x k: principal axes (PCR) or PLS weights W* (PLSR)
    LinearModel linear;         ///< equivalent model on the same inputs
    std::vector<std::string> warnings;

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const { return linear.predict(x); }
};

/// PCR regresses y on the leading principal components of the standardized
/// inputs; PLSR extracts components one at a time with deflation (NIPALS
/// PLS1). Asking for more components than the data's rank truncates with a
/// warning.
LatentModel fit_latent(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LatentKind kind, int n_components);

struct ComponentCvResult {
    int n_components = 0;
    double mse = 0.0;
    std::vector<std::pair<int, double>> table;
};

ComponentCvResult cv_select_components(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, LatentKind kind,
                                       int max_components, int folds, std::uint64_t seed);

/// Wavelengths whose standardized coefficient exceeds epsilon times the
/// largest one, merged into runs of consecutive grid points.
std::vector<Interval> important_wavelengths_linear(const LinearModel& model, const Eigen::VectorXd& wavelengths,
                                                   double epsilon);

/// Mean squared error divided by `variance`.
double nmse(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred, double variance);

/// Population variance of the concatenation of two target vectors.
double union_variance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

const char* to_string(LatentKind kind);

} // namespace specsel
