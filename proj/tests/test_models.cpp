#include <doctest.h>

#include <cmath>
#include <random>

#include "specsel/errors.hpp"
#include "specsel/models.hpp"

using namespace specsel;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
    return m;
}

} // namespace

TEST_CASE("k-means separates distant blobs") {
    std::mt19937_64 rng(1);
    Eigen::MatrixXd x = 0.1 * gaussian(90, 2, rng);
    x.topRows(30).col(0).array() += 10;
    x.middleRows(30, 30).col(1).array() += 10;
    const KMeansResult r = kmeans(x, 3, 5);
    for (int b = 0; b < 3; ++b)
        for (int i = 1; i < 30; ++i) CHECK(r.assignments[static_cast<std::size_t>(30 * b + i)] == r.assignments[static_cast<std::size_t>(30 * b)]);
    CHECK(r.assignments[0] != r.assignments[30]);
    CHECK(r.assignments[30] != r.assignments[60]);
    for (std::size_t i = 1; i < r.distortion.size(); ++i) CHECK(r.distortion[i] <= r.distortion[i - 1] + 1e-12);
    CHECK(r.variances.maxCoeff() < 0.1);
    const KMeansResult again = kmeans(x, 3, 5);
    CHECK(again.centers == r.centers);
    CHECK_THROWS_AS(kmeans(x, 91, 0), PreconditionError);
    CHECK_THROWS_AS(kmeans(x, 0, 0), PreconditionError);
}

TEST_CASE("k-means variance floor on duplicate points") {
    Eigen::MatrixXd x(6, 1);
    x << 0, 0, 0, 1, 1, 1;
    const KMeansResult r = kmeans(x, 2, 0);
    CHECK(r.variances.minCoeff() > 0.0);
}

TEST_CASE("RBFN kernels follow their formula") {
    RbfnModel m;
    m.centers = Eigen::MatrixXd::Zero(2, 2);
    m.centers(1, 0) = 1.0;
    m.widths = Eigen::Vector2d(0.5, 2.0);
    m.width_scale = 2.0;
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 1.0;
    const Eigen::MatrixXd k = rbfn_kernels(m, x);
    CHECK(k(0, 0) == doctest::Approx(std::exp(-2.0 / 1.0)));
    CHECK(k(0, 1) == doctest::Approx(std::exp(-1.0 / 16.0)));
    CHECK_THROWS_AS(rbfn_kernels(m, Eigen::MatrixXd::Zero(1, 3)), PreconditionError);
}

TEST_CASE("RBFN with one neuron per point interpolates") {
    std::mt19937_64 rng(4);
    const Eigen::MatrixXd x = gaussian(30, 2, rng);
    const Eigen::VectorXd y = gaussian(30, 1, rng);
    const RbfnModel m = fit_rbfn(x, y, 30, 0.1, 3);
    CHECK((predict_rbfn(m, x) - y).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("RBFN fits a smooth function") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd x(200, 1);
    for (Eigen::Index i = 0; i < 200; ++i) x(i, 0) = u(rng);
    const Eigen::VectorXd y = (3 * x.col(0).array()).sin();
    const RbfnModel m = fit_rbfn(x, y, 12, 4.0, 1);
    CHECK((predict_rbfn(m, x) - y).norm() / y.norm() < 0.05);
}

TEST_CASE("meta-parameter CV picks the minimum of its table") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd x(90, 2);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    const Eigen::VectorXd y = x.col(0).array().square() + x.col(1).array();
    CvGrid grid{{2, 5, 8}, {0.5, 1, 2}, 3, 7};
    const RbfnCvResult r = cv_select_meta(x, y, grid);
    CHECK(r.table.size() == 9);
    for (const CvCell& c : r.table) CHECK(c.mse >= r.mse);
    const RbfnCvResult again = cv_select_meta(x, y, grid);
    CHECK(again.neurons == r.neurons);
    CHECK(again.width_scale == r.width_scale);
    CHECK(again.mse == r.mse);
}

TEST_CASE("OLS recovers an exact linear relation") {
    std::mt19937_64 rng(3);
    const Eigen::MatrixXd x = gaussian(40, 4, rng) * 3.0;
    const Eigen::Vector4d beta(1.5, -2, 0.25, 0);
    const Eigen::VectorXd y = x * beta + Eigen::VectorXd::Constant(40, 7.0);
    const LinearModel m = fit_linear(x, y);
    CHECK((m.raw_coefficients() - beta).norm() < 1e-10);
    CHECK(m.raw_intercept() == doctest::Approx(7.0));
    CHECK((m.predict(x) - y).norm() < 1e-9);
    CHECK_FALSE(m.rank_deficient);
}

TEST_CASE("OLS drops constant columns and reports rank deficiency") {
    std::mt19937_64 rng(5);
    Eigen::MatrixXd x = gaussian(30, 3, rng);
    x.col(1).setConstant(2.0);
    Eigen::VectorXd y = x.col(0) - x.col(2);
    const LinearModel m = fit_linear(x, y);
    CHECK(m.dropped_columns == IndexSet{1});
    CHECK(m.coefficients[1] == 0.0);
    CHECK_FALSE(m.warnings.empty());

    Eigen::MatrixXd dup(30, 2);
    dup.col(0) = x.col(0);
    dup.col(1) = 2.0 * x.col(0);
    const LinearModel d = fit_linear(dup, x.col(0));
    CHECK(d.rank_deficient);
    CHECK((d.predict(dup) - x.col(0)).norm() < 1e-9);
    CHECK_THROWS_AS(fit_linear(gaussian(3, 5, rng), Eigen::VectorXd::Ones(3)), PreconditionError);
}

TEST_CASE("all components: PCR, PLSR and OLS coincide") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 10; ++rep) {
        const Eigen::Index p = 25 + rep, q = 2 + rep % 6;
        const Eigen::MatrixXd x = gaussian(p, q, rng);
        const Eigen::VectorXd y = gaussian(p, 1, rng);
        const Eigen::VectorXd ols = fit_linear(x, y).predict(x);
        const int k = static_cast<int>(q);
        CHECK((fit_latent(x, y, LatentKind::pcr, k).predict(x) - ols).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((fit_latent(x, y, LatentKind::plsr, k).predict(x) - ols).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("one PLS component points along X^T y") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd x = gaussian(50, 4, rng);
    const Eigen::VectorXd y = gaussian(50, 1, rng);
    const LatentModel m = fit_latent(x, y, LatentKind::plsr, 1);
    const Eigen::MatrixXd z = (x.rowwise() - x.colwise().mean()).array().rowwise() /
                              ((x.rowwise() - x.colwise().mean()).colwise().norm().array() / std::sqrt(49.0));
    const Eigen::VectorXd w = z.transpose() * (y.array() - y.mean()).matrix();
    const Eigen::VectorXd c = m.linear.coefficients;
    CHECK(std::abs(c.normalized().dot(w.normalized())) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("PCR with one component regresses on the first principal axis") {
    std::mt19937_64 rng(10);
    Eigen::MatrixXd x = gaussian(60, 3, rng);
    x.col(1) += 2.0 * x.col(0);
    const Eigen::VectorXd y = gaussian(60, 1, rng);
    const LatentModel m = fit_latent(x, y, LatentKind::pcr, 1);
    REQUIRE(m.directions.cols() == 1);
    const Eigen::VectorXd c = m.linear.coefficients;
    CHECK(std::abs(c.normalized().dot(m.directions.col(0))) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("latent component bounds and truncation") {
    std::mt19937_64 rng(11);
    const Eigen::MatrixXd x = gaussian(10, 4, rng);
    const Eigen::VectorXd y = gaussian(10, 1, rng);
    CHECK_THROWS_AS(fit_latent(x, y, LatentKind::pcr, 0), PreconditionError);
    CHECK_THROWS_AS(fit_latent(x, y, LatentKind::pcr, 5), PreconditionError);
    Eigen::MatrixXd dup(10, 3);
    dup.col(0) = x.col(0);
    dup.col(1) = x.col(0);
    dup.col(2) = x.col(1);
    const LatentModel m = fit_latent(dup, y, LatentKind::pcr, 3);
    CHECK(m.n_components == 2);
    CHECK_FALSE(m.warnings.empty());
}

TEST_CASE("component CV") {
    std::mt19937_64 rng(12);
    const Eigen::MatrixXd x = gaussian(60, 8, rng);
    const Eigen::VectorXd y = x.col(0) + 0.5 * x.col(3) + 0.05 * gaussian(60, 1, rng);
    const ComponentCvResult r = cv_select_components(x, y, LatentKind::plsr, 8, 3, 1);
    CHECK(r.table.size() == 8);
    for (const auto& [k, mse] : r.table) CHECK(mse >= r.mse);
    CHECK(r.mse < 0.05);
}

TEST_CASE("important wavelengths follow their definition") {
    LinearModel m;
    m.coefficients = Eigen::VectorXd(7);
    m.coefficients << 0.001, 1.0, -0.5, 0.0, 0.02, -0.03, 0.005;
    Eigen::VectorXd wl(7);
    wl << 10, 20, 30, 40, 50, 60, 70;
    const auto iv = important_wavelengths_linear(m, wl, 0.01);
    CHECK(iv == std::vector<Interval>{{20, 30}, {50, 60}});
    CHECK_THROWS_AS(important_wavelengths_linear(m, wl, 1.0), PreconditionError);
}

TEST_CASE("NMSE and union variance") {
    Eigen::VectorXd a(3), b(2);
    a << 1, 2, 3;
    b << 4, 5;
    CHECK(union_variance(a, b) == doctest::Approx(2.0)); // population variance of 1..5
    CHECK(nmse(a, a, 1.0) == 0.0);
    Eigen::VectorXd shifted = a.array() + 1.0;
    CHECK(nmse(a, shifted, 2.0) == doctest::Approx(0.5));
    CHECK_THROWS_AS(nmse(a, a, 0.0), PreconditionError);
    CHECK_THROWS_AS(nmse(a, b, 1.0), PreconditionError);
}
