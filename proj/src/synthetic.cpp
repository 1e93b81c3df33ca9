#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

namespace specsel {

SyntheticData make_synthetic(const SyntheticOptions& o) {
    if (o.n_wavelengths < 8 || o.n_spectra < 2) throw PreconditionError("synthetic data needs N >= 8 and P >= 2");
    if (!(o.w_max > o.w_min)) throw PreconditionError("synthetic data needs w_max > w_min");
    std::mt19937_64 rng(o.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);

    const auto N = static_cast<Eigen::Index>(o.n_wavelengths);
    const auto P = static_cast<Eigen::Index>(o.n_spectra);
    const double span = o.w_max - o.w_min;
    const Eigen::VectorXd wl = Eigen::VectorXd::LinSpaced(N, o.w_min, o.w_max);

    auto bump = [&](double center, double sigma) {
        return Eigen::VectorXd((-0.5 * ((wl.array() - center) / sigma).square()).exp());
    };

    // Shared background shapes; each spectrum mixes them with its own weights.
    constexpr int n_background = 6;
    std::vector<Eigen::VectorXd> background;
    for (int b = 0; b < n_background; ++b)
        background.push_back(bump(o.w_min + span * unit(rng), span * (0.06 + 0.12 * unit(rng))));

    const double sigma_band = 0.02 * span;
    const double center_a = o.w_min + 0.25 * span;
    const double center_b = o.w_min + 0.70 * span;
    const Eigen::VectorXd band_a = bump(center_a, sigma_band);
    const Eigen::VectorXd band_b = bump(center_b, sigma_band);

    Eigen::MatrixXd x(P, N);
    Eigen::VectorXd y(P);
    for (Eigen::Index i = 0; i < P; ++i) {
        Eigen::VectorXd s = Eigen::VectorXd::Constant(N, 0.2 * unit(rng));
        s += 0.1 * unit(rng) * (wl.array() - o.w_min).matrix() / span;
        for (const auto& shape : background) s += 0.15 * unit(rng) * shape;
        const double u1 = sym(rng);
        const double u2 = sym(rng);
        s += (0.6 + 0.4 * u1) * band_a + (0.6 + 0.4 * u2) * band_b;
        for (Eigen::Index k = 0; k < N; ++k) s[k] += o.spectral_noise * gauss(rng);
        x.row(i) = s.transpose();
        y[i] = o.response == SyntheticResponse::linear ? u1 + u2 : 2.0 * u1 * u1 + std::sin(std::numbers::pi * u2);
        y[i] += o.target_noise * gauss(rng);
    }
    return SyntheticData{SpectraSet(wl, std::move(x), std::move(y)),
                         {{center_a - 2 * sigma_band, center_a + 2 * sigma_band},
                          {center_b - 2 * sigma_band, center_b + 2 * sigma_band}}};
}

std::vector<BenchmarkRow> benchmark_complexity(std::span<const BenchmarkSize> sizes, std::uint64_t seed,
                                               const BenchmarkOptions& options) {
    if (options.orders.empty()) throw PreconditionError("benchmark needs at least one spline order");
    if (options.repeats < 1) throw PreconditionError("benchmark repeats must be positive");
    const SelectionOptions forced{options.steps, -std::numeric_limits<double>::infinity()};
    const int order = options.orders.front();

    auto seconds = [](auto&& body) {
        const auto start = std::chrono::steady_clock::now();
        body();
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    std::vector<BenchmarkRow> rows;
    for (const BenchmarkSize& size : sizes) {
        if (size.n_functions < static_cast<std::size_t>(order) || size.n_functions > size.n_wavelengths)
            throw PreconditionError("benchmark basis size must lie in [order, N]");
        SyntheticOptions so;
        so.n_wavelengths = size.n_wavelengths;
        so.n_spectra = size.n_spectra;
        so.seed = seed;
        const SyntheticData data = make_synthetic(so);
        const Eigen::VectorXd& y = data.set.require_target();
        MiEstimatorConfig mi = options.mi;
        mi.k = std::min<int>(mi.k, static_cast<int>(size.n_spectra) - 1); // tiny P still gets a row

        BenchmarkRow row;
        row.size = size;
        row.compressed_seconds = row.raw_seconds = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < options.repeats; ++rep) {
            SelectionTrace compressed_trace, raw_trace;
            row.compressed_seconds = std::min(row.compressed_seconds, seconds([&] {
                const int max_order = *std::max_element(options.orders.begin(), options.orders.end());
                select_basis_size(data.set, default_size_range(size.n_wavelengths, max_order), options.orders,
                                  SearchStrategy::coarse_to_fine);
                const BsplineBasis basis(data.set.wavelengths()[0],
                                         data.set.wavelengths()[data.set.wavelengths().size() - 1],
                                         static_cast<int>(size.n_functions) + 1 - order, order);
                const CompressedSet c = compress(projection_matrix(basis, data.set.wavelengths()), data.set);
                compressed_trace = forward_phase(c.coefficients, y, mi, forced);
            }));
            row.raw_seconds = std::min(row.raw_seconds, seconds([&] {
                raw_trace = forward_phase(data.set.responses(), y, mi, forced);
            }));
            row.compressed_evaluations = compressed_trace.forward_evaluations;
            row.raw_evaluations = raw_trace.forward_evaluations;
        }
        row.ratio = row.compressed_seconds / row.raw_seconds;
        const double r = static_cast<double>(size.n_functions) / static_cast<double>(size.n_wavelengths);
        row.inequality = 1.0 / static_cast<double>(size.n_spectra) + r * r * r;
        rows.push_back(row);
    }
    return rows;
}

void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows) {
    out << "n_wavelengths,n_functions,n_spectra,compressed_seconds,raw_seconds,ratio,inequality,"
           "compressed_evaluations,raw_evaluations\n";
    for (const BenchmarkRow& r : rows)
        out << r.size.n_wavelengths << ',' << r.size.n_functions << ',' << r.size.n_spectra << ','
            << r.compressed_seconds << ',' << r.raw_seconds << ',' << r.ratio << ',' << r.inequality << ','
            << r.compressed_evaluations << ',' << r.raw_evaluations << '\n';
}

} // namespace specsel
