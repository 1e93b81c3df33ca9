#include "specsel/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

#include "specsel/errors.hpp"

namespace specsel {

BsplineBasis::BsplineBasis(double w_min, double w_max, int intervals, int order)
    : order_(order), intervals_(intervals) {
    if (intervals < 1) throw PreconditionError("number of knot intervals must be positive");
    if (order < 1) throw PreconditionError("spline order must be positive");
    if (!(w_min < w_max) || !std::isfinite(w_min) || !std::isfinite(w_max))
        throw PreconditionError("basis domain requires finite w_min < w_max");

    knots_.resize(static_cast<std::size_t>(intervals) + 1);
    const double width = w_max - w_min;
    for (int k = 0; k <= intervals; ++k)
        knots_[static_cast<std::size_t>(k)] = w_min + width * static_cast<double>(k) / static_cast<double>(intervals);
    knots_.back() = w_max;

    extended_.reserve(knots_.size() + 2 * static_cast<std::size_t>(order - 1));
    extended_.insert(extended_.end(), static_cast<std::size_t>(order - 1), w_min);
    extended_.insert(extended_.end(), knots_.begin(), knots_.end());
    extended_.insert(extended_.end(), static_cast<std::size_t>(order - 1), w_max);
}

int BsplineBasis::interval_of(double w) const {
    if (!(w >= w_min() && w <= w_max()))
        throw DomainError("wavelength " + std::to_string(w) + " outside the basis domain");
    const double h = (w_max() - w_min()) / intervals_;
    int k = std::clamp(static_cast<int>((w - w_min()) / h), 0, intervals_ - 1);
    while (k > 0 && w < knots_[static_cast<std::size_t>(k)]) --k;
    while (k < intervals_ - 1 && w >= knots_[static_cast<std::size_t>(k) + 1]) ++k;
    return k;
}

int BsplineBasis::evaluate_nonzero(double w, std::span<double> values) const {
    if (values.size() < static_cast<std::size_t>(order_))
        throw PreconditionError("output span shorter than the spline order");
    const int k = interval_of(w);
    const auto mu = static_cast<std::size_t>(k + order_ - 1);
    const auto& t = extended_;

    // Triangular de Boor-Cox scheme; only order <= a handful is used in
    // practice, so fixed-size scratch would do, but keep it general.
    std::vector<double> left(static_cast<std::size_t>(order_)), right(static_cast<std::size_t>(order_));
    values[0] = 1.0;
    for (std::size_t j = 1; j < static_cast<std::size_t>(order_); ++j) {
        left[j] = w - t[mu + 1 - j];
        right[j] = t[mu + j] - w;
        double saved = 0.0;
        for (std::size_t r = 0; r < j; ++r) {
            const double temp = values[r] / (right[r + 1] + left[j - r]);
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    return k;
}

Eigen::VectorXd BsplineBasis::evaluate(double w) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(n_functions());
    std::vector<double> local(static_cast<std::size_t>(order_));
    const int first = evaluate_nonzero(w, local);
    for (int a = 0; a < order_; ++a) out[first + a] = local[static_cast<std::size_t>(a)];
    return out;
}

Eigen::VectorXd BsplineBasis::greville() const {
    const int n = n_functions();
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) {
        const auto base = static_cast<std::size_t>(i);
        if (order_ == 1) {
            g[i] = 0.5 * (extended_[base] + extended_[base + 1]);
        } else {
            double s = 0.0;
            for (int a = 1; a < order_; ++a) s += extended_[base + static_cast<std::size_t>(a)];
            g[i] = s / (order_ - 1);
        }
    }
    return g;
}

BsplineBasis build_basis(double w_min, double w_max, int intervals, int order) {
    return BsplineBasis(w_min, w_max, intervals, order);
}

Eigen::VectorXd evaluate_basis(const BsplineBasis& basis, double w) { return basis.evaluate(w); }

namespace {

std::string describe_rank_failure(const BsplineBasis& basis, const Eigen::VectorXd& w, int function) {
    const auto& t = basis.knots();
    std::vector<int> count(static_cast<std::size_t>(basis.intervals()), 0);
    for (Eigen::Index j = 0; j < w.size(); ++j)
        if (w[j] >= basis.w_min() && w[j] <= basis.w_max()) ++count[static_cast<std::size_t>(basis.interval_of(w[j]))];
    std::ostringstream msg;
    msg << "design matrix is rank deficient (order " << basis.order() << ", " << basis.n_functions()
        << " functions): ";
    for (std::size_t k = 0; k < count.size(); ++k)
        if (count[k] == 0) {
            msg << "knot interval " << k << " [" << t[k] << ", " << t[k + 1] << ") contains no wavelength";
            return msg.str();
        }
    msg << "basis function " << function << " has no wavelength left to support it";
    return msg.str();
}

} // namespace

SplineFitter::SplineFitter(BsplineBasis basis, Eigen::VectorXd wavelengths)
    : basis_(std::move(basis)), wavelengths_(std::move(wavelengths)) {
    const Eigen::Index n_points = wavelengths_.size();
    const int d = basis_.order();
    const int n = basis_.n_functions();
    if (n > n_points)
        throw PreconditionError("basis has " + std::to_string(n) + " functions but only " +
                                std::to_string(n_points) + " wavelengths");
    for (Eigen::Index j = 1; j < n_points; ++j)
        if (!(wavelengths_[j] > wavelengths_[j - 1]))
            throw PreconditionError("wavelengths must be strictly increasing");

    first_.resize(static_cast<std::size_t>(n_points));
    band_.resize(n_points, d);
    std::vector<double> local(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < n_points; ++j) {
        first_[static_cast<std::size_t>(j)] = basis_.evaluate_nonzero(wavelengths_[j], local);
        for (int a = 0; a < d; ++a) band_(j, a) = local[static_cast<std::size_t>(a)];
    }

    // Schoenberg-Whitney: each basis function needs its own wavelength, taken
    // in increasing order, where it is strictly positive.
    {
        Eigen::Index j = 0;
        for (int i = 0; i < n; ++i) {
            while (j < n_points) {
                const int f = first_[static_cast<std::size_t>(j)];
                if (f > i) break;
                if (i < f + d && band_(j, i - f) > 0.0) break;
                ++j;
            }
            if (j >= n_points || first_[static_cast<std::size_t>(j)] > i)
                throw SingularDesignError(describe_rank_failure(basis_, wavelengths_, i));
            ++j;
        }
    }

    upper_ = Eigen::MatrixXd::Zero(n, d);
    cos_ = Eigen::MatrixXd::Ones(n_points, d);
    sin_ = Eigen::MatrixXd::Zero(n_points, d);
    std::vector<double> row(static_cast<std::size_t>(d));
    for (Eigen::Index j = 0; j < n_points; ++j) {
        const int f = first_[static_cast<std::size_t>(j)];
        for (int a = 0; a < d; ++a) row[static_cast<std::size_t>(a)] = band_(j, a);
        for (int a = 0; a < d; ++a) {
            const double pivot = row[static_cast<std::size_t>(a)];
            if (pivot == 0.0) continue;
            const int i = f + a;
            const double diag = upper_(i, 0);
            const double h = std::hypot(diag, pivot);
            const double c = diag / h;
            const double s = pivot / h;
            upper_(i, 0) = h;
            // Rows are processed in order of their first column, so nothing
            // in U extends past column f + d - 1 yet: no fill-in.
            for (int e = 1; a + e < d; ++e) {
                const double u = upper_(i, e);
                const double v = row[static_cast<std::size_t>(a + e)];
                upper_(i, e) = c * u + s * v;
                row[static_cast<std::size_t>(a + e)] = -s * u + c * v;
            }
            row[static_cast<std::size_t>(a)] = 0.0;
            cos_(j, a) = c;
            sin_(j, a) = s;
        }
    }
    const double scale = upper_.col(0).cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i)
        if (!(std::abs(upper_(i, 0)) > 1e-13 * scale))
            throw SingularDesignError(describe_rank_failure(basis_, wavelengths_, i));

    // Band of S = (U^T U)^{-1}: from U S = U^{-T}, whose upper part is
    // diag(1 / U_ii), solved bottom-up; sigma(i, c) = S(i, i + c).
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(n, d);
    auto sym = [&](int a, int b) { return a <= b ? sigma(a, b - a) : sigma(b, a - b); };
    for (int i = n - 1; i >= 0; --i) {
        for (int c = std::min(d - 1, n - 1 - i); c >= 0; --c) {
            double acc = c == 0 ? 1.0 / upper_(i, 0) : 0.0;
            for (int e = 1; e < d && i + e < n; ++e) acc -= upper_(i, e) * sym(i + e, i + c);
            sigma(i, c) = acc / upper_(i, 0);
        }
    }
    leverage_.resize(n_points);
    for (Eigen::Index j = 0; j < n_points; ++j) {
        const int f = first_[static_cast<std::size_t>(j)];
        double h = 0.0;
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) h += band_(j, a) * band_(j, b) * sym(f + a, f + b);
        leverage_[j] = h;
    }
}

Eigen::MatrixXd SplineFitter::fit(const Eigen::MatrixXd& samples) const {
    const Eigen::Index n_points = wavelengths_.size();
    if (samples.cols() != n_points)
        throw PreconditionError("samples have " + std::to_string(samples.cols()) + " columns, expected " +
                                std::to_string(n_points));
    const int d = basis_.order();
    const int n = basis_.n_functions();
    const Eigen::Index m = samples.rows();

    // Column i of rhs holds the i-th rotated right-hand side for all spectra.
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, n);
    Eigen::VectorXd z(m), tmp(m);
    for (Eigen::Index j = 0; j < n_points; ++j) {
        z = samples.col(j);
        const int f = first_[static_cast<std::size_t>(j)];
        for (int a = 0; a < d; ++a) {
            const double s = sin_(j, a);
            if (s == 0.0) continue;
            const double c = cos_(j, a);
            tmp = rhs.col(f + a);
            rhs.col(f + a) = c * tmp + s * z;
            z = -s * tmp + c * z;
        }
    }
    Eigen::MatrixXd coef(m, n);
    for (int i = n - 1; i >= 0; --i) {
        tmp = rhs.col(i);
        for (int e = 1; e < d && i + e < n; ++e) tmp -= upper_(i, e) * coef.col(i + e);
        coef.col(i) = tmp / upper_(i, 0);
    }
    return coef;
}

Eigen::MatrixXd SplineFitter::reconstruct(const Eigen::MatrixXd& coefficients) const {
    const int d = basis_.order();
    if (coefficients.cols() != basis_.n_functions())
        throw PreconditionError("coefficient matrix has the wrong number of columns");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coefficients.rows(), wavelengths_.size());
    for (Eigen::Index j = 0; j < wavelengths_.size(); ++j) {
        const int f = first_[static_cast<std::size_t>(j)];
        for (int a = 0; a < d; ++a) out.col(j) += band_(j, a) * coefficients.col(f + a);
    }
    return out;
}

Eigen::VectorXd SplineFitter::loo_errors(const Eigen::MatrixXd& samples) const {
    const Eigen::Index n_points = wavelengths_.size();
    for (Eigen::Index j = 0; j < n_points; ++j)
        if (leverage_[j] >= 1.0 - 1e-10)
            throw IllPosedLooError("leaving out wavelength " + std::to_string(wavelengths_[j]) +
                                   " (index " + std::to_string(j) + ") makes the fit underdetermined for order " +
                                   std::to_string(basis_.order()) + " with " +
                                   std::to_string(basis_.n_functions()) + " functions");
    const Eigen::MatrixXd residual = samples - reconstruct(fit(samples));
    const Eigen::ArrayXd inflate = (1.0 - leverage_.array()).inverse();
    Eigen::VectorXd out(samples.rows());
    for (Eigen::Index l = 0; l < samples.rows(); ++l)
        out[l] = (residual.row(l).transpose().array() * inflate).square().sum() / static_cast<double>(n_points);
    return out;
}

Eigen::MatrixXd SplineFitter::projection() const {
    const Eigen::Index n_points = wavelengths_.size();
    return fit(Eigen::MatrixXd::Identity(n_points, n_points)).transpose();
}

ProjectionMatrix projection_matrix(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths) {
    SplineFitter fitter(basis, wavelengths);
    return ProjectionMatrix{fitter.projection(), basis, wavelengths};
}

SpectraSet CompressedSet::as_spectra() const { return SpectraSet(basis.greville(), coefficients, target); }

CompressedSet compress(const ProjectionMatrix& projection, const SpectraSet& set) {
    if (set.wavelengths().size() != projection.wavelengths.size() ||
        set.wavelengths() != projection.wavelengths)
        throw PreconditionError("spectra wavelengths differ from the projection's wavelength grid");
    return CompressedSet{set.responses() * projection.entries.transpose(), projection.basis, set.target()};
}

Eigen::MatrixXd reconstruct(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths,
                            const Eigen::MatrixXd& coefficients) {
    if (coefficients.cols() != basis.n_functions())
        throw PreconditionError("coefficient matrix has the wrong number of columns");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(coefficients.rows(), wavelengths.size());
    std::vector<double> local(static_cast<std::size_t>(basis.order()));
    for (Eigen::Index j = 0; j < wavelengths.size(); ++j) {
        const int f = basis.evaluate_nonzero(wavelengths[j], local);
        for (int a = 0; a < basis.order(); ++a)
            out.col(j) += local[static_cast<std::size_t>(a)] * coefficients.col(f + a);
    }
    return out;
}

double loo_error_spectrum(const BsplineBasis& basis, const Eigen::VectorXd& wavelengths,
                          const Eigen::VectorXd& sample) {
    SplineFitter fitter(basis, wavelengths);
    return fitter.loo_errors(sample.transpose())[0];
}

double total_loo(const BsplineBasis& basis, const SpectraSet& set) {
    if (set.n_spectra() == 0) return 0.0;
    SplineFitter fitter(basis, set.wavelengths());
    const Eigen::VectorXd per = fitter.loo_errors(set.responses());
    double sum = 0.0;
    for (Eigen::Index l = 0; l < per.size(); ++l) sum += per[l];
    return sum;
}

SizeRange default_size_range(std::size_t n_wavelengths, int max_order) {
    const int n = static_cast<int>(n_wavelengths);
    const int lo = std::max(n / 20, max_order + 1);
    const int hi = std::max(lo, std::min(n / 2, n));
    return {lo, hi};
}

BasisSelection select_basis_size(const SpectraSet& set, SizeRange n_range, std::span<const int> orders,
                                 SearchStrategy strategy, int probes) {
    if (orders.empty()) throw PreconditionError("no spline orders to search");
    if (n_range.lo > n_range.hi) throw PreconditionError("empty basis size range");
    const int max_order = *std::max_element(orders.begin(), orders.end());
    const int min_order = *std::min_element(orders.begin(), orders.end());
    if (min_order < 1) throw PreconditionError("spline orders must be positive");
    const int n_points = static_cast<int>(set.n_wavelengths());
    if (n_range.lo < max_order + 1 || n_range.hi > n_points)
        throw PreconditionError("basis size range [" + std::to_string(n_range.lo) + ", " +
                                std::to_string(n_range.hi) + "] must lie within [" +
                                std::to_string(max_order + 1) + ", " + std::to_string(n_points) + "]");

    const double w_min = set.wavelengths()[0];
    const double w_max = set.wavelengths()[set.wavelengths().size() - 1];
    std::map<std::pair<int, int>, double> evaluated; // (n, order) -> LOO

    auto evaluate = [&](int n) {
        for (int d : orders) {
            if (evaluated.count({n, d})) continue;
            evaluated[{n, d}] = total_loo(BsplineBasis(w_min, w_max, n - d + 1, d), set);
        }
    };

    if (strategy == SearchStrategy::exhaustive || n_range.hi - n_range.lo + 1 <= probes) {
        for (int n = n_range.lo; n <= n_range.hi; ++n) evaluate(n);
    } else {
        if (probes < 2) throw PreconditionError("coarse-to-fine search needs at least two probes");
        std::vector<int> grid;
        for (int t = 0; t < probes; ++t) {
            const int n = n_range.lo + static_cast<int>(std::lround(static_cast<double>(t) *
                                                                    (n_range.hi - n_range.lo) / (probes - 1)));
            if (grid.empty() || grid.back() != n) grid.push_back(n);
        }
        for (int n : grid) evaluate(n);
        std::size_t best = 0;
        double best_loo = 0.0;
        for (std::size_t g = 0; g < grid.size(); ++g)
            for (int d : orders) {
                const double v = evaluated[{grid[g], d}];
                if ((g == 0 && d == orders.front()) || v < best_loo) {
                    best_loo = v;
                    best = g;
                }
            }
        const int lo = grid[best == 0 ? 0 : best - 1];
        const int hi = grid[std::min(best + 1, grid.size() - 1)];
        for (int n = lo; n <= hi; ++n) evaluate(n);
    }

    double mean_square = 0.0;
    for (Eigen::Index l = 0; l < set.responses().rows(); ++l)
        mean_square += set.responses().row(l).squaredNorm() / n_points;
    const double tie = 1e-12 * mean_square;

    BasisSelection out{0, 0, {}};
    bool first = true;
    double best = 0.0;
    for (const auto& [key, loo] : evaluated) { // ascending (n, order)
        if (first || loo < best - tie) {
            best = loo;
            out.n_functions = key.first;
            out.order = key.second;
            first = false;
        }
        out.curve.push_back({key.first, key.second, loo});
    }
    std::sort(out.curve.begin(), out.curve.end(), [](const LooPoint& a, const LooPoint& b) {
        return a.order != b.order ? a.order < b.order : a.n_functions < b.n_functions;
    });
    return out;
}

WavelengthRange wavelength_range(const ProjectionMatrix& projection, std::size_t i, double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw PreconditionError("epsilon must lie in (0, 1)");
    if (i >= static_cast<std::size_t>(projection.entries.rows()))
        throw PreconditionError("variable index " + std::to_string(i) + " out of range");
    const auto row = projection.entries.row(static_cast<Eigen::Index>(i)).cwiseAbs().eval();
    const double peak = row.maxCoeff();
    if (!(peak > 0.0)) throw DomainError("projection row " + std::to_string(i) + " is identically zero");
    const double threshold = epsilon * peak;

    Eigen::Index lo = 0;
    while (row[lo] < threshold) ++lo;
    Eigen::Index hi = row.size() - 1;
    while (row[hi] < threshold) --hi;

    WavelengthRange out;
    out.variable_index = i;
    out.epsilon = epsilon;
    out.lower_index = static_cast<std::size_t>(lo);
    out.upper_index = static_cast<std::size_t>(hi);
    out.lower = projection.wavelengths[lo];
    out.upper = projection.wavelengths[hi];
    return out;
}

std::vector<Interval> merge_ranges(std::span<const Interval> intervals) {
    std::vector<Interval> sorted(intervals.begin(), intervals.end());
    std::sort(sorted.begin(), sorted.end(), [](const Interval& a, const Interval& b) {
        return a.lower != b.lower ? a.lower < b.lower : a.upper < b.upper;
    });
    std::vector<Interval> out;
    for (const auto& iv : sorted) {
        if (!out.empty() && iv.lower <= out.back().upper)
            out.back().upper = std::max(out.back().upper, iv.upper);
        else
            out.push_back(iv);
    }
    return out;
}

std::vector<Interval> merge_ranges(std::span<const WavelengthRange> ranges) {
    std::vector<Interval> iv;
    iv.reserve(ranges.size());
    for (const auto& r : ranges) iv.push_back({r.lower, r.upper});
    return merge_ranges(iv);
}

void write_projection_csv(std::ostream& out, const ProjectionMatrix& projection) {
    const auto old = out.precision(17);
    out << "wavelength";
    for (Eigen::Index i = 0; i < projection.entries.rows(); ++i) out << ",R" << i;
    out << '\n';
    for (Eigen::Index j = 0; j < projection.wavelengths.size(); ++j) {
        out << projection.wavelengths[j];
        for (Eigen::Index i = 0; i < projection.entries.rows(); ++i) out << ',' << projection.entries(i, j);
        out << '\n';
    }
    out.precision(old);
}

} // namespace specsel
