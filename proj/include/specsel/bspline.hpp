#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "specsel/spectra.hpp"

namespace specsel {

/// Clamped B-spline basis of order d (degree d-1) on p uniform knot intervals
/// spanning [w_min, w_max]. The boundary knots are repeated d times, which
/// yields n = p - 1 + d basis functions.
///
/// Knot intervals are half-open, [t_k, t_{k+1}), except the last one which is
/// closed at w_max.
class BsplineBasis {
public:
    BsplineBasis(double w_min, double w_max, int intervals, int order);

    int order() const noexcept { return order_; }
    int intervals() const noexcept { return intervals_; }
    int n_functions() const noexcept { return intervals_ - 1 + order_; }
    double w_min() const noexcept { return knots_.front(); }
    double w_max() const noexcept { return knots_.back(); }

    /// t_0 .. t_p
    const std::vector<double>& knots() const noexcept { return knots_; }
    /// t_0 repeated d times, interior knots, t_p repeated d times.
    const std::vector<double>& extended_knots() const noexcept { return extended_; }

    /// Knot interval containing w. Throws DomainError outside [w_min, w_max].
    int interval_of(double w) const;

    /// Writes the d possibly-nonzero basis values at w into `values` and
    /// returns the index of the first of them (de Boor-Cox recursion).
    int evaluate_nonzero(double w, std::span<double> values) const;

    /// All n basis values at w.
    Eigen::VectorXd evaluate(double w) const;

    /// Greville abscissae: the knot averages locating each basis function.
    /// Strictly increasing; used as column labels for coefficient files.
    Eigen::VectorXd greville() const;

private:
    int order_;
    int intervals_;
    std::vector<double> knots_;
    std::vector<double> extended_;
};

BsplineBasis build_basis(double w_min, double w_max, int intervals, int order);
Eigen::VectorXd evaluate_basis(const BsplineBasis& basis, double w);

/// Least-squares B-spline fitting on a fixed wavelength grid.
///
/// The N x n design matrix has at most d consecutive nonzeros per row. It is
/// reduced to an upper-triangular band U by Givens rotations, processed row by
/// row; the rotations are kept so that any number of spectra can be fitted in
/// O(N d) each. Leverages come from the band of (U^T U)^{-1}, which is all a
/// banded row of the design ever touches.
class SplineFitter {
public:
    /// Throws SingularDesignError if the design does not have full column rank.
    SplineFitter(BsplineBasis basis, Eigen::VectorXd wavelengths);

    const BsplineBasis& basis() const noexcept { return basis_; }
    const Eigen::VectorXd& wavelengths() const noexcept { return wavelengths_; }

    /// Rows of `samples` are spectra on the wavelength grid (P x N);
    /// returns their coefficients (P x n).
    Eigen::MatrixXd fit(const Eigen::MatrixXd& samples) const;

    /// Evaluates coefficient rows (P x n) back on the grid (P x N).
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& coefficients) const;

    /// Diagonal of the hat matrix B (B^T B)^{-1} B^T.
    const Eigen::VectorXd& leverages() const noexcept { return leverage_; }

    /// Leave-one-out error of each spectrum (row) via the leverage identity.
    /// Throws IllPosedLooError when a leverage reaches 1 - 1e-10.
    Eigen::VectorXd loo_errors(const Eigen::MatrixXd& samples) const;

    /// The n x N matrix mapping samples to coefficients.
    Eigen::MatrixXd projection() const;

private:
    BsplineBasis basis_;
    Eigen::VectorXd wavelengths_;
    std::vector<int> first_;       // first nonzero column per design row
    Eigen::MatrixXd band_;         // N x d design values
    Eigen::MatrixXd upper_;        // n x d, upper_(i, c) = U(i, i + c)
    Eigen::MatrixXd cos_, sin_;    // N x d Givens rotations
    Eigen::VectorXd leverage_;
};

struct ProjectionMatrix {
    Eigen::MatrixXd entries; ///< n x N
    BsplineBasis basis;
    Eigen::VectorXd wavelengths;
};

ProjectionMatrix projection_matrix(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths);

struct CompressedSet {
    Eigen::MatrixXd coefficients; ///< P x n
    BsplineBasis basis;
    std::optional<Eigen::VectorXd> target;

    /// Coefficients as a SpectraSet whose "wavelengths" are the Greville
    /// abscissae, so compressed data can go through the same CSV tooling.
    SpectraSet as_spectra() const;
};

CompressedSet compress(const ProjectionMatrix& projection, const SpectraSet& set);

/// Evaluates coefficient rows (P x n) at the given wavelengths.
Eigen::MatrixXd reconstruct(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths,
                            const Eigen::MatrixXd& coefficients);

double loo_error_spectrum(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths,
                          const Eigen::VectorXd& sample);

double total_loo(const BsplineBasis& basis, const SpectraSet& set);

struct LooPoint {
    int n_functions;
    int order;
    double loo;
};

struct BasisSelection {
    int n_functions;
    int order;
    std::vector<LooPoint> curve; ///< every evaluated candidate, sorted by (order, n)
};

enum class SearchStrategy { exhaustive, coarse_to_fine };

struct SizeRange {
    int lo;
    int hi;
};

/// [N/20, N/2], clipped to what the largest order allows.
SizeRange default_size_range(std::size_t n_wavelengths, int max_order);

/// Chooses the basis size (and order) minimizing the total leave-one-out
/// error. Values within 1e-12 of the data's mean square are ties, resolved
/// toward smaller n, then smaller order.
BasisSelection select_basis_size(const SpectraSet& set, SizeRange n_range, std::span<const int> orders,
                                 SearchStrategy strategy, int probes = 10);

struct WavelengthRange {
    std::size_t variable_index = 0;
    double lower = 0.0;
    double upper = 0.0;
    double epsilon = 0.0;
    std::size_t lower_index = 0;
    std::size_t upper_index = 0;
};

/// Wavelengths outside the range carry less than epsilon times the row's
/// largest absolute weight. `i` is 0-based.
WavelengthRange wavelength_range(const ProjectionMatrix& projection, std::size_t i, double epsilon);

struct Interval {
    double lower;
    double upper;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Union of closed intervals as maximal disjoint intervals, ascending.
std::vector<Interval> merge_ranges(std::span<const Interval> intervals);
std::vector<Interval> merge_ranges(std::span<const WavelengthRange> ranges);

/// "wavelength,R0,...,R{n-1}", one row per wavelength.
void write_projection_csv(std::ostream& out, const ProjectionMatrix& projection);

} // namespace specsel
