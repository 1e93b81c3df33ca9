// Acceptance suite: one line per criterion, non-zero exit if any blocking
// criterion fails. The real-data replication runs only when the datasets are
// supplied through SPECSEL_SHOOTOUT_CSV / SPECSEL_DIESEL_CSV.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <random>
#include <string>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

using namespace specsel;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
    bool skipped = false;
};

int failures = 0;

void criterion(const std::string& name, double time_limit, bool blocking, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.skipped && secs > time_limit) {
        o.pass = false;
        o.detail += "; exceeded " + std::to_string(time_limit) + " s";
    }
    const char* tag = o.skipped ? "SKIP" : o.pass ? "PASS" : blocking ? "FAIL" : "FAIL (non-blocking)";
    std::printf("%-22s %-34s %s [%.2f s]\n", tag, name.c_str(), o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.skipped && !o.pass && blocking) ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

Eigen::MatrixXd dense_design(const BsplineBasis& basis, const Eigen::VectorXd& wl) {
    Eigen::MatrixXd b(wl.size(), basis.n_functions());
    for (Eigen::Index k = 0; k < wl.size(); ++k) b.row(k) = basis.evaluate(wl[k]).transpose();
    return b;
}

double refit_loo(const Eigen::MatrixXd& b, const Eigen::VectorXd& s) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < b.rows(); ++k) {
        Eigen::MatrixXd bk(b.rows() - 1, b.cols());
        Eigen::VectorXd sk(b.rows() - 1);
        for (Eigen::Index r = 0, o = 0; r < b.rows(); ++r)
            if (r != k) {
                bk.row(o) = b.row(r);
                sk[o++] = s[r];
            }
        const Eigen::VectorXd c = bk.colPivHouseholderQr().solve(sk);
        const double e = s[k] - b.row(k).dot(c);
        total += e * e;
    }
    return total / static_cast<double>(b.rows());
}

bool overlaps(const std::vector<Interval>& found, const Interval& band) {
    for (const Interval& iv : found)
        if (iv.lower <= band.upper && iv.upper >= band.lower) return true;
    return false;
}

double loglog_slope(const std::vector<double>& p, const std::vector<double>& t) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mx += std::log(p[i]);
        my += std::log(t[i]);
    }
    mx /= static_cast<double>(p.size());
    my /= static_cast<double>(p.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sxy += (std::log(p[i]) - mx) * (std::log(t[i]) - my);
        sxx += (std::log(p[i]) - mx) * (std::log(p[i]) - mx);
    }
    return sxy / sxx;
}

Outcome real_data(const char* data_env, const char* split_env, std::vector<int> orders, SizeRange range,
                  std::pair<int, int> n_window, std::pair<double, double> nmse_window,
                  const std::vector<Interval>& reference) {
    const char* path = std::getenv(data_env);
    if (!path) return {true, std::string(data_env) + " not set", true};
    const SpectraSet data = load_spectra(path, CsvLayout::target_first_column);
    const BasisSelection basis = select_basis_size(data, range, orders, SearchStrategy::exhaustive);
    bool ok = basis.n_functions >= n_window.first && basis.n_functions <= n_window.second;
    std::string detail = "n*=" + std::to_string(basis.n_functions) + " d*=" + std::to_string(basis.order);

    double mean_nmse = 0.0;
    double overlap_total = 0.0, reference_total = 0.0;
    const int runs = std::getenv(split_env) ? 1 : 5;
    for (int seed = 0; seed < runs; ++seed) {
        PipelineConfig c;
        c.data = path;
        c.orders = orders;
        c.n_range = range;
        c.methods = {Method::bspline_mi_rbfn};
        c.seed = c.mi.seed = c.rbfn_grid.seed = static_cast<std::uint64_t>(seed);
        if (const char* split = std::getenv(split_env)) c.split_file = split;
        const PipelineReport r = run_pipeline(c, data);
        mean_nmse += r.methods[0].nmse_test / runs;
        for (const Interval& ref : reference) {
            reference_total += ref.upper - ref.lower;
            for (const Interval& iv : r.methods[0].intervals)
                overlap_total += std::max(0.0, std::min(iv.upper, ref.upper) - std::max(iv.lower, ref.lower));
        }
    }
    const double coverage = overlap_total / reference_total;
    ok = ok && mean_nmse >= nmse_window.first && mean_nmse <= nmse_window.second && coverage >= 0.5;
    detail += " NMSE=" + fmt(mean_nmse) + " coverage=" + fmt(coverage);
    return {ok, detail};
}

} // namespace

int main() {
    criterion("B-spline exactness", 1.0, true, [] {
        const Eigen::VectorXd wl = Eigen::VectorXd::LinSpaced(200, 400, 2500);
        std::mt19937_64 rng(1);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int order = 1; order <= 5; ++order)
            for (int intervals : {1, 4, 13}) {
                const SplineFitter fitter(BsplineBasis(400, 2500, intervals, order), wl);
                const Eigen::ArrayXd t = (wl.array() - 1450.0) / 1050.0;
                Eigen::VectorXd s = Eigen::VectorXd::Zero(wl.size());
                for (int p = 0; p < order; ++p) s.array() += g(rng) * t.pow(p);
                s.array() += 1.0; // keep the norm away from zero
                const Eigen::MatrixXd back = fitter.reconstruct(fitter.fit(s.transpose()));
                worst = std::max(worst, (back.row(0).transpose() - s).norm() / s.norm());
            }
        return Outcome{worst < 1e-9, "max relative residual " + fmt(worst)};
    });

    criterion("Partition of unity", 1.0, true, [] {
        std::mt19937_64 rng(2);
        std::uniform_int_distribution<int> ip(1, 40), id(1, 6);
        double worst = 0.0;
        for (int b = 0; b < 20; ++b) {
            const BsplineBasis basis(400, 2500, ip(rng), id(rng));
            std::uniform_real_distribution<double> uw(400, 2500);
            for (int s = 0; s < 1000; ++s) worst = std::max(worst, std::abs(basis.evaluate(uw(rng)).sum() - 1.0));
        }
        return Outcome{worst <= 1e-12, "max |sum - 1| " + fmt(worst)};
    });

    criterion("Fast-LOO oracle equivalence", 5.0, true, [] {
        std::mt19937_64 rng(3);
        std::uniform_int_distribution<int> in(8, 30), id(1, 5);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> g;
        int done = 0, redraws = 0;
        double worst = 0.0;
        while (done < 50) {
            const int n_points = in(rng);
            const int order = id(rng);
            std::uniform_int_distribution<int> nn(order, std::min(10, n_points - 2));
            const int n = nn(rng);
            std::vector<double> w(static_cast<std::size_t>(n_points));
            w.front() = 0.0;
            w.back() = 1.0;
            for (std::size_t i = 1; i + 1 < w.size(); ++i) w[i] = u(rng);
            std::sort(w.begin(), w.end());
            const Eigen::VectorXd wl = Eigen::Map<Eigen::VectorXd>(w.data(), n_points);
            Eigen::VectorXd s(n_points);
            for (auto& v : s) v = g(rng);
            const BsplineBasis basis(0.0, 1.0, n - order + 1, order);
            double fast = 0.0;
            try {
                fast = loo_error_spectrum(basis, wl, s);
            } catch (const SingularDesignError&) {
                ++redraws;
                continue;
            } catch (const IllPosedLooError&) {
                ++redraws;
                continue;
            }
            const double slow = refit_loo(dense_design(basis, wl), s);
            worst = std::max(worst, std::abs(fast - slow) / slow);
            ++done;
        }
        return Outcome{worst <= 1e-8, "50 instances, max relative gap " + fmt(worst) + " (" + std::to_string(redraws) +
                                          " rank-deficient draws redrawn)"};
    });

    criterion("MI accuracy", 30.0, true, [] {
        const double exact = -0.5 * std::log(1.0 - 0.81);
        double dep = 0.0, indep = 0.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            for (double rho : {0.9, 0.0}) {
                std::mt19937_64 rng(seed * 2 + (rho > 0 ? 0 : 1));
                std::normal_distribution<double> g;
                JointSample s{Eigen::MatrixXd(2000, 1), Eigen::VectorXd(2000)};
                for (Eigen::Index i = 0; i < 2000; ++i) {
                    const double a = g(rng), b = g(rng);
                    s.x(i, 0) = a;
                    s.y[i] = rho * a + std::sqrt(1 - rho * rho) * b;
                }
                MiEstimatorConfig cfg;
                cfg.seed = seed;
                (rho > 0 ? dep : indep) += mutual_information(s, cfg).nats / 10.0;
            }
        }
        const bool ok = std::abs(dep - exact) < 0.1 && std::abs(indep) < 0.05;
        return Outcome{ok, "rho=0.9 mean " + fmt(dep) + " (exact " + fmt(exact) + "), independent mean " + fmt(indep)};
    });

    criterion("Greedy vs exhaustive", 120.0, true, [] {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> u(-1, 1);
        std::uniform_int_distribution<int> pick(0, 5);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int problem = 0; problem < 20; ++problem) {
            int a = pick(rng), b = pick(rng);
            while (b == a) b = pick(rng);
            Eigen::MatrixXd x(200, 6);
            Eigen::VectorXd y(200);
            for (Eigen::Index i = 0; i < 200; ++i) {
                for (Eigen::Index c = 0; c < 6; ++c) x(i, c) = u(rng);
                y[i] = problem % 2 ? x(i, a) + x(i, b) : std::sin(3 * x(i, a)) * x(i, b);
                y[i] += 0.05 * g(rng);
            }
            MiEstimatorConfig cfg;
            cfg.seed = static_cast<std::uint64_t>(problem);
            const SubsetScore score = cached(mi_score(x, y, cfg));
            const double greedy = forward_backward(score, 6).final_mi;
            double best = -std::numeric_limits<double>::infinity();
            for (unsigned mask = 1; mask < 64; ++mask) {
                IndexSet s;
                for (std::size_t c = 0; c < 6; ++c)
                    if (mask & (1u << c)) s.push_back(c);
                best = std::max(best, score(s));
            }
            worst = std::max(worst, best - greedy);
        }
        return Outcome{worst <= 0.05, "20 problems, worst shortfall " + fmt(worst) + " nats"};
    });

    criterion("RBFN interpolation", 10.0, true, [] {
        std::mt19937_64 rng(6);
        std::normal_distribution<double> g;
        Eigen::MatrixXd x(30, 3);
        Eigen::VectorXd y(30);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
        for (auto& v : y) v = g(rng);
        const RbfnModel m = fit_rbfn(x, y, 30, 0.05, 1);
        const double res = (predict_rbfn(m, x) - y).cwiseAbs().maxCoeff();
        return Outcome{res < 1e-6, "M = P = 30, width_scale 0.05, max residual " + fmt(res)};
    });

    criterion("Full-model equivalence", 10.0, true, [] {
        std::mt19937_64 rng(7);
        std::normal_distribution<double> g;
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            const Eigen::Index p = 20 + rep * 3, q = 2 + rep % 12;
            Eigen::MatrixXd x(p, q);
            Eigen::VectorXd y(p);
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng) * (1 + i % 5);
            for (auto& v : y) v = g(rng);
            const Eigen::VectorXd ols = fit_linear(x, y).predict(x);
            const int k = static_cast<int>(q);
            worst = std::max(worst, (fit_latent(x, y, LatentKind::pcr, k).predict(x) - ols).cwiseAbs().maxCoeff());
            worst = std::max(worst, (fit_latent(x, y, LatentKind::plsr, k).predict(x) - ols).cwiseAbs().maxCoeff());
        }
        return Outcome{worst < 1e-6, "20 instances, max prediction gap " + fmt(worst)};
    });

    criterion("End-to-end synthetic", 180.0, true, [] {
        bool ok = true;
        std::string detail;
        for (std::uint64_t seed : {1, 2, 3}) {
            SyntheticOptions o; // N = 300, P = 150, nonlinear response
            o.seed = seed;
            const SyntheticData d = make_synthetic(o);
            PipelineConfig c;
            c.data = "synthetic";
            c.methods = {Method::bspline_mi_rbfn, Method::bspline_mi_lr};
            c.seed = c.mi.seed = c.rbfn_grid.seed = seed;
            const PipelineReport r = run_pipeline(c, d.set);
            const MethodResult& rbfn = r.methods[0];
            const MethodResult& lr = r.methods[1];
            const bool both = overlaps(rbfn.intervals, d.bands[0]) && overlaps(rbfn.intervals, d.bands[1]);
            ok = ok && rbfn.nmse_test < lr.nmse_test && both;
            detail += "seed " + std::to_string(seed) + ": RBFN " + fmt(rbfn.nmse_test) + " vs LR " +
                      fmt(lr.nmse_test) + (both ? " bands ok; " : " band missed; ");
        }
        return Outcome{ok, detail};
    });

    criterion("Complexity trend", 120.0, true, [] {
        const std::vector<BenchmarkSize> sizes{{400, 80, 40}, {400, 80, 80}, {400, 80, 160}};
        BenchmarkOptions opt;
        opt.repeats = 3;
        const auto rows = benchmark_complexity(sizes, 1, opt);
        std::vector<double> p, ta, tb;
        for (const BenchmarkRow& r : rows) {
            p.push_back(static_cast<double>(r.size.n_spectra));
            ta.push_back(r.compressed_seconds);
            tb.push_back(r.raw_seconds);
        }
        const double sa = loglog_slope(p, ta), sb = loglog_slope(p, tb);
        const double growth_a = ta.back() / ta.front(), growth_b = tb.back() / tb.front();
        return Outcome{sb > sa && growth_b > growth_a,
                       "time ~ P^" + fmt(sa) + " compressed vs P^" + fmt(sb) + " raw; x" + fmt(growth_a) +
                           " vs x" + fmt(growth_b) + " from P=40 to 160"};
    });

    criterion("Shootout replication", 3600.0, false, [] {
        return real_data("SPECSEL_SHOOTOUT_CSV", "SPECSEL_SHOOTOUT_SPLIT", {4, 5}, {50, 500}, {120, 180},
                         {0.08, 0.20}, {{400, 816}, {874, 1118}, {2002, 2478}});
    });

    criterion("Diesel replication", 3600.0, false, [] {
        return real_data("SPECSEL_DIESEL_CSV", "SPECSEL_DIESEL_SPLIT", {4, 5}, {20, 200}, {110, 160},
                         {0.32, 0.45}, {{816, 902}, {954, 1102}, {1288, 1370}});
    });

    std::printf("%s: %d blocking failure(s)\n", failures ? "FAILED" : "ALL PASSED", failures);
    return failures ? 1 : 0;
}
