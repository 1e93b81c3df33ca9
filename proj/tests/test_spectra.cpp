#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "specsel/errors.hpp"
#include "specsel/spectra.hpp"

using namespace specsel;

namespace {

SpectraSet ramp_set(std::size_t p, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(n));
    Eigen::VectorXd y(static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = g(rng);
        y[i] = g(rng);
    }
    return SpectraSet(Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(n), 1.0, static_cast<double>(n)), x, y);
}

} // namespace

TEST_CASE("CSV with a target column parses") {
    std::istringstream in("target,400,410,420\n1.5,0.1,0.2,0.3\n-2,1e-3,2E2,+4\n");
    const SpectraSet s = read_spectra(in, CsvLayout::target_first_column);
    CHECK(s.n_spectra() == 2);
    CHECK(s.n_wavelengths() == 3);
    CHECK(s.wavelengths()[2] == 420.0);
    CHECK(s.responses()(1, 1) == 200.0);
    CHECK(s.responses()(1, 2) == 4.0);
    CHECK(s.require_target()[1] == -2.0);
}

TEST_CASE("CSV without target") {
    std::istringstream in("400,410\n0.1,0.2\n");
    const SpectraSet s = read_spectra(in, CsvLayout::no_target);
    CHECK_FALSE(s.has_target());
    CHECK_THROWS_AS(s.require_target(), PreconditionError);
}

TEST_CASE("malformed CSV is rejected") {
    SUBCASE("ragged row") {
        std::istringstream in("target,400,410\n1,0.1\n");
        CHECK_THROWS_AS(read_spectra(in, CsvLayout::target_first_column), FormatError);
    }
    SUBCASE("non-numeric cell") {
        std::istringstream in("target,400,410\n1,0.1,abc\n");
        CHECK_THROWS_AS(read_spectra(in, CsvLayout::target_first_column), FormatError);
    }
    SUBCASE("missing target header") {
        std::istringstream in("400,410\n1,0.1\n");
        CHECK_THROWS_AS(read_spectra(in, CsvLayout::target_first_column), FormatError);
    }
    SUBCASE("non-increasing wavelengths") {
        std::istringstream in("target,400,400\n1,0.1,0.2\n");
        CHECK_THROWS_AS(read_spectra(in, CsvLayout::target_first_column), ValidationError);
    }
    SUBCASE("non-finite value") {
        std::istringstream in("target,400,410\n1,nan,0.2\n");
        CHECK_THROWS_AS(read_spectra(in, CsvLayout::target_first_column), ValidationError);
    }
}

TEST_CASE("write then read round-trips exactly") {
    const SpectraSet s = ramp_set(7, 5, 3);
    std::stringstream io;
    write_spectra(io, s);
    const SpectraSet back = read_spectra(io, CsvLayout::target_first_column);
    CHECK(back.wavelengths() == s.wavelengths());
    CHECK(back.responses() == s.responses());
    CHECK(*back.target() == *s.target());
}

TEST_CASE("subset keeps order and target") {
    const SpectraSet s = ramp_set(6, 4, 1);
    const IndexSet rows{4, 1};
    const SpectraSet sub = s.subset(rows);
    CHECK(sub.responses().row(0) == s.responses().row(4));
    CHECK((*sub.target())[1] == (*s.target())[1]);
    const IndexSet bad{6};
    CHECK_THROWS_AS(s.subset(bad), PreconditionError);
}

TEST_CASE("stratified split is a seeded partition of the right size") {
    const SpectraSet s = ramp_set(101, 3, 5);
    for (double f : {0.1, 0.25, 0.5}) {
        const SplitAssignment a = stratified_split(s, f, 11);
        CHECK(a.test_indices.size() == static_cast<std::size_t>(std::lround(f * 101)));
        std::set<std::size_t> all(a.train_indices.begin(), a.train_indices.end());
        all.insert(a.test_indices.begin(), a.test_indices.end());
        CHECK(all.size() == 101);
        CHECK(a.train_indices.size() + a.test_indices.size() == 101);
        const SplitAssignment b = stratified_split(s, f, 11);
        CHECK(a.test_indices == b.test_indices);
    }
    CHECK(stratified_split(s, 0.25, 1).test_indices != stratified_split(s, 0.25, 2).test_indices);
}

TEST_CASE("stratified split spreads the test set over the target range") {
    // Sorting by target and taking one per block of 4 means every quartile of
    // the target distribution gets about a quarter of the test slots.
    const SpectraSet s = ramp_set(200, 2, 9);
    const SplitAssignment a = stratified_split(s, 0.25, 4);
    std::vector<double> sorted(s.target()->begin(), s.target()->end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = sorted[50], q2 = sorted[100], q3 = sorted[150];
    int counts[4] = {0, 0, 0, 0};
    for (std::size_t i : a.test_indices) {
        const double v = (*s.target())[static_cast<Eigen::Index>(i)];
        counts[v < q1 ? 0 : v < q2 ? 1 : v < q3 ? 2 : 3]++;
    }
    for (int c : counts) CHECK(std::abs(c - 12.5) <= 1.5);
}

TEST_CASE("split file") {
    const auto path = std::filesystem::temp_directory_path() / "specsel_split_test.txt";
    {
        std::ofstream out(path);
        out << "3, 0\n5\n";
    }
    const SplitAssignment a = read_split_file(path, 6);
    CHECK(a.test_indices == IndexSet{0, 3, 5});
    CHECK(a.train_indices == IndexSet{1, 2, 4});
    CHECK_THROWS(read_split_file(path, 5));
    std::filesystem::remove(path);
}

TEST_CASE("k-fold partitions are balanced and disjoint") {
    const SpectraSet s = ramp_set(23, 2, 2);
    IndexSet idx(23);
    std::iota(idx.begin(), idx.end(), 0);
    for (int k : {2, 3, 5}) {
        const auto folds = kfold_stratified(idx, *s.target(), k, 7);
        REQUIRE(folds.size() == static_cast<std::size_t>(k));
        std::size_t lo = 100, hi = 0;
        std::set<std::size_t> seen;
        for (const auto& f : folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            seen.insert(f.begin(), f.end());
        }
        CHECK(hi - lo <= 1);
        CHECK(seen.size() == 23);
    }
}

TEST_CASE("standardizer uses training statistics") {
    Eigen::MatrixXd train(4, 2);
    train << 1, 5, 2, 5, 3, 5, 4, 5;
    const Standardizer st = Standardizer::fit(train);
    const Eigen::MatrixXd z = st.apply(train);
    CHECK(z.col(0).mean() == doctest::Approx(0.0));
    CHECK(std::sqrt(z.col(0).squaredNorm() / 3.0) == doctest::Approx(1.0));
    CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0); // constant column maps to zero
    Eigen::MatrixXd other(1, 2);
    other << 2.5, 6;
    CHECK(st.apply(other)(0, 1) == doctest::Approx(1.0));
}
