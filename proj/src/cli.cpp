#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "specsel/cli.hpp"
#include "specsel/errors.hpp"
#include "specsel/model_io.hpp"
#include "specsel/pipeline.hpp"

namespace specsel {

namespace {

CsvLayout parse_layout(const std::string& s) {
    if (s == "target_first_column") return CsvLayout::target_first_column;
    if (s == "no_target") return CsvLayout::no_target;
    throw ConfigError("unknown layout '" + s + "'");
}

SearchStrategy parse_strategy(const std::string& s) {
    if (s == "exhaustive") return SearchStrategy::exhaustive;
    if (s == "coarse_to_fine") return SearchStrategy::coarse_to_fine;
    throw ConfigError("unknown strategy '" + s + "'");
}

NeighborSearch parse_search(const std::string& s) {
    if (s == "brute_force") return NeighborSearch::brute_force;
    if (s == "kd_tree") return NeighborSearch::kd_tree;
    throw ConfigError("unknown neighbour search '" + s + "'");
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    out.precision(17);
    return out;
}

// Writes to `path`, or to `fallback` when no path was given.
template <typename F>
void emit(const std::string& path, std::ostream& fallback, F&& write) {
    if (path.empty()) {
        write(fallback);
    } else {
        std::ofstream out = open_out(path);
        write(out);
    }
}

std::vector<BenchmarkSize> parse_sizes(const std::string& text) {
    std::vector<BenchmarkSize> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        BenchmarkSize s{};
        char x1 = 0, x2 = 0;
        std::istringstream is(item);
        if (!(is >> s.n_wavelengths >> x1 >> s.n_functions >> x2 >> s.n_spectra) || x1 != 'x' || x2 != 'x')
            throw ConfigError("benchmark size '" + item + "' is not NxnxP");
        sizes.push_back(s);
    }
    if (sizes.empty()) throw ConfigError("no benchmark sizes given");
    return sizes;
}

struct CompressArgs {
    std::string data, layout = "target_first_column", strategy = "exhaustive";
    std::vector<int> orders{4};
    int n_min = -1, n_max = -1, n = 0, order = 0;
    std::string out, projection, loo_curve;
};

struct SelectArgs {
    std::string data, out, search = "brute_force";
    int k = 6;
    std::uint64_t seed = 0;
    std::size_t max_size = 0;
    double min_delta = 0.0;
};

struct TrainArgs {
    std::string data, model = "rbfn", out = "model.json";
    std::vector<std::size_t> columns;
    std::vector<int> neurons{2, 3, 5, 8, 12, 20, 30};
    std::vector<double> scales{0.5, 1, 2, 4, 8};
    int components = 0, max_components = 20, folds = 3;
    bool no_standardize = false;
    std::uint64_t seed = 0;
};

struct PredictArgs {
    std::string model, data, layout = "no_target", out;
};

struct EvaluateArgs {
    std::string predictions;
    double variance = 0.0;
};

struct PipelineArgs {
    std::string config, out;
    std::optional<std::uint64_t> seed;
};

struct BenchmarkArgs {
    std::string sizes = "400x80x40,400x80x80,400x80x160", out;
    std::uint64_t seed = 0;
    std::size_t steps = 3;
    int repeats = 1;
    std::vector<int> orders{4};
};

struct ExportArgs {
    std::string report, what, out;
};

void run_compress(const CompressArgs& a, std::ostream& out) {
    const SpectraSet set = load_spectra(a.data, parse_layout(a.layout));
    int n = a.n, order = a.order;
    std::vector<LooPoint> curve;
    if (n == 0) {
        if (a.orders.empty()) throw ConfigError("--orders is empty");
        const int max_order = *std::max_element(a.orders.begin(), a.orders.end());
        SizeRange range = default_size_range(set.n_wavelengths(), max_order);
        if (a.n_min >= 0) range.lo = a.n_min;
        if (a.n_max >= 0) range.hi = a.n_max;
        const BasisSelection sel = select_basis_size(set, range, a.orders, parse_strategy(a.strategy));
        n = sel.n_functions;
        order = sel.order;
        curve = sel.curve;
    } else if (order == 0) {
        order = a.orders.front();
    }
    const Eigen::VectorXd& wl = set.wavelengths();
    const BsplineBasis basis(wl[0], wl[wl.size() - 1], n + 1 - order, order);
    const ProjectionMatrix r = projection_matrix(basis, wl);
    const CompressedSet c = compress(r, set);
    emit(a.out, out, [&](std::ostream& o) { write_spectra(o, c.as_spectra()); });
    if (!a.projection.empty()) {
        std::ofstream o = open_out(a.projection);
        write_projection_csv(o, r);
    }
    if (!a.loo_curve.empty()) {
        std::ofstream o = open_out(a.loo_curve);
        o << "order,n,loo\n";
        for (const LooPoint& p : curve) o << p.order << ',' << p.n_functions << ',' << p.loo << '\n';
    }
    if (!a.out.empty()) out << "n " << n << " order " << order << '\n';
}

void run_select(const SelectArgs& a, std::ostream& out) {
    const SpectraSet set = load_spectra(a.data, CsvLayout::target_first_column);
    MiEstimatorConfig mi;
    mi.k = a.k;
    mi.seed = a.seed;
    mi.search = parse_search(a.search);
    SelectionOptions opt;
    if (a.max_size > 0) opt.max_size = a.max_size;
    opt.min_delta = a.min_delta;
    const SelectionTrace trace = forward_backward(set.responses(), set.require_target(), mi, opt);
    emit(a.out, out, [&](std::ostream& o) { write_trace_csv(o, trace); });
    if (!a.out.empty()) {
        out << "selected";
        for (std::size_t j : trace.final_subset) out << ' ' << j;
        out << "\nmi " << trace.final_mi << '\n';
    }
}

void run_train(const TrainArgs& a, std::ostream& out) {
    const SpectraSet set = load_spectra(a.data, CsvLayout::target_first_column);
    const Eigen::VectorXd& y = set.require_target();
    SavedModel m;
    m.kind = a.model;
    m.input_width = set.n_wavelengths();
    m.columns = a.columns;
    if (m.columns.empty())
        for (std::size_t j = 0; j < m.input_width; ++j) m.columns.push_back(j);
    for (std::size_t c : m.columns)
        if (c >= m.input_width) throw ConfigError("--columns index " + std::to_string(c) + " out of range");
    Eigen::MatrixXd x = set.responses();
    if (!a.no_standardize && a.model == "rbfn") {
        m.standardization = Standardizer::fit(x);
        x = m.standardization->apply(x);
    }
    const std::vector<Eigen::Index> cols(m.columns.begin(), m.columns.end());
    const Eigen::MatrixXd used = x(Eigen::all, cols);

    if (a.model == "rbfn") {
        const RbfnCvResult cv = cv_select_meta(used, y, CvGrid{a.neurons, a.scales, a.folds, a.seed});
        m.rbfn = fit_rbfn(used, y, cv.neurons, cv.width_scale, a.seed);
        m.meta = {{"neurons", cv.neurons}, {"width_scale", cv.width_scale}, {"cv_mse", cv.mse}};
        out << "neurons " << cv.neurons << " width_scale " << cv.width_scale << " cv_mse " << cv.mse << '\n';
    } else if (a.model == "linear") {
        m.linear = fit_linear(used, y);
    } else if (a.model == "pcr" || a.model == "plsr") {
        const LatentKind kind = a.model == "pcr" ? LatentKind::pcr : LatentKind::plsr;
        int k = a.components;
        if (k == 0) {
            const int fold_rows = static_cast<int>(used.rows()) - static_cast<int>(used.rows()) / a.folds - 1;
            const int bound = std::min({a.max_components, fold_rows, static_cast<int>(used.cols())});
            if (bound < 1) throw PreconditionError("too few samples for component cross-validation");
            k = cv_select_components(used, y, kind, bound, a.folds, a.seed).n_components;
        }
        const LatentModel lm = fit_latent(used, y, kind, k);
        m.linear = lm.linear;
        m.meta = {{"components", lm.n_components}};
        out << "components " << lm.n_components << '\n';
    } else {
        throw ConfigError("unknown model kind '" + a.model + "' (expected rbfn, linear, pcr or plsr)");
    }
    save_model(a.out, m);
}

void run_predict(const PredictArgs& a, std::ostream& out) {
    const SavedModel m = load_model(a.model);
    const SpectraSet set = load_spectra(a.data, parse_layout(a.layout));
    const Eigen::VectorXd pred = m.predict(set.responses());
    emit(a.out, out, [&](std::ostream& o) {
        o.precision(17);
        o << "prediction\n";
        for (double v : pred) o << v << '\n';
    });
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out) {
    std::ifstream in(a.predictions);
    if (!in) throw Error("cannot open " + a.predictions);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("empty predictions file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "y_true,y_pred") throw FormatError("predictions file needs the header 'y_true,y_pred'");
    std::vector<double> t, p;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        std::istringstream is(line);
        double a1 = 0, a2 = 0;
        char comma = 0;
        if (!(is >> a1 >> comma >> a2) || comma != ',')
            throw FormatError("predictions file line " + std::to_string(line_no) + ": expected two numbers");
        t.push_back(a1);
        p.push_back(a2);
    }
    const Eigen::Map<const Eigen::VectorXd> yt(t.data(), static_cast<Eigen::Index>(t.size()));
    const Eigen::Map<const Eigen::VectorXd> yp(p.data(), static_cast<Eigen::Index>(p.size()));
    double variance = a.variance;
    if (variance <= 0.0) variance = union_variance(yt, Eigen::VectorXd());
    out << "NMSE " << nmse(yt, yp, variance) << '\n';
}

void run_pipeline_cmd(const PipelineArgs& a, std::ostream& out) {
    PipelineConfig cfg = load_config(a.config);
    if (a.seed) {
        cfg.seed = *a.seed;
        cfg.mi.seed = *a.seed;
        cfg.rbfn_grid.seed = *a.seed;
    }
    if (!a.out.empty()) cfg.output = a.out;
    const PipelineReport report = run_pipeline(cfg);
    {
        std::ofstream o = open_out(cfg.output.string());
        o << to_json(report).dump(2) << '\n';
    }
    for (const MethodResult& m : report.methods)
        out << label(m.method) << ": " << m.n_variables << " variables, NMSE " << m.nmse_test << '\n';
    out << "report written to " << cfg.output.string() << '\n';
}

void run_benchmark(const BenchmarkArgs& a, std::ostream& out) {
    BenchmarkOptions opt;
    opt.steps = a.steps;
    opt.repeats = a.repeats;
    opt.orders = a.orders;
    opt.mi.seed = a.seed;
    const auto rows = benchmark_complexity(parse_sizes(a.sizes), a.seed, opt);
    emit(a.out, out, [&](std::ostream& o) { write_benchmark_csv(o, rows); });
}

void run_export(const ExportArgs& a, std::ostream& out) {
    const PlotData what = parse_plot_data(a.what);
    std::ifstream in(a.report);
    if (!in) throw Error("cannot open report " + a.report);
    nlohmann::json report;
    try {
        in >> report;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("report " + a.report + ": " + e.what());
    }
    emit(a.out, out, [&](std::ostream& o) { export_plot_data(report, what, o); });
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spectral variable selection with B-spline compression and mutual information", "specsel"};
    app.require_subcommand(1);

    CompressArgs ca;
    auto* compress = app.add_subcommand("compress", "Choose a B-spline basis by leave-one-out error and compress spectra");
    compress->add_option("--data", ca.data, "spectra CSV")->required();
    compress->add_option("--layout", ca.layout, "target_first_column or no_target");
    compress->add_option("--orders", ca.orders, "spline orders to search")->delimiter(',');
    compress->add_option("--n-min", ca.n_min, "smallest basis size (default N/20)");
    compress->add_option("--n-max", ca.n_max, "largest basis size (default N/2)");
    compress->add_option("--strategy", ca.strategy, "exhaustive or coarse_to_fine");
    compress->add_option("--n", ca.n, "fixed basis size, skips the search");
    compress->add_option("--order", ca.order, "order used with --n (default: first of --orders)");
    compress->add_option("--out", ca.out, "compressed CSV (default stdout)");
    compress->add_option("--projection", ca.projection, "projection matrix CSV");
    compress->add_option("--loo-curve", ca.loo_curve, "leave-one-out curve CSV");

    SelectArgs sa;
    auto* select = app.add_subcommand("select", "Forward-backward mutual information selection");
    select->add_option("--data", sa.data, "features CSV with the target in the first column")->required();
    select->add_option("--mi-k", sa.k, "neighbour count of the MI estimator");
    select->add_option("--seed", sa.seed, "jitter seed");
    select->add_option("--mi-search", sa.search, "brute_force or kd_tree");
    select->add_option("--max-size", sa.max_size, "largest subset size (0 = unlimited)");
    select->add_option("--min-delta", sa.min_delta, "smallest accepted MI gain");
    select->add_option("--out", sa.out, "trace CSV (default stdout)");

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "Fit a regression model and save it as JSON");
    train->add_option("--data", ta.data, "training CSV with the target in the first column")->required();
    train->add_option("--model", ta.model, "rbfn, linear, pcr or plsr");
    train->add_option("--columns", ta.columns, "0-based input columns (default all)")->delimiter(',');
    train->add_option("--neurons", ta.neurons, "RBFN neuron grid")->delimiter(',');
    train->add_option("--scales", ta.scales, "RBFN width-scale grid")->delimiter(',');
    train->add_option("--components", ta.components, "latent components (0 = cross-validate)");
    train->add_option("--max-components", ta.max_components, "largest component count tried");
    train->add_option("--folds", ta.folds, "cross-validation folds");
    train->add_flag("--no-standardize", ta.no_standardize, "feed RBFN inputs unscaled");
    train->add_option("--seed", ta.seed, "seed for folds and k-means");
    train->add_option("--out", ta.out, "model JSON");

    PredictArgs pa;
    auto* predict = app.add_subcommand("predict", "Apply a saved model to spectra");
    predict->add_option("--model", pa.model, "model JSON")->required();
    predict->add_option("--data", pa.data, "spectra CSV")->required();
    predict->add_option("--layout", pa.layout, "no_target or target_first_column");
    predict->add_option("--out", pa.out, "predictions CSV (default stdout)");

    EvaluateArgs ea;
    auto* evaluate = app.add_subcommand("evaluate", "NMSE of a predictions file with columns y_true,y_pred");
    evaluate->add_option("--predictions", ea.predictions, "CSV with header y_true,y_pred")->required();
    evaluate->add_option("--variance", ea.variance, "normalizing variance (default: variance of y_true)");

    PipelineArgs pla;
    auto* pipeline = app.add_subcommand("pipeline", "Run the full method comparison from a config file");
    pipeline->add_option("--config", pla.config, "key = value config file")->required();
    pipeline->add_option("--out", pla.out, "report JSON (overrides 'output')");
    pipeline->add_option("--seed", pla.seed, "overrides every seed in the config");

    BenchmarkArgs ba;
    auto* benchmark = app.add_subcommand("benchmark", "Time compressed versus raw-variable selection");
    benchmark->add_option("--sizes", ba.sizes, "comma-separated NxnxP triples");
    benchmark->add_option("--seed", ba.seed, "data and jitter seed");
    benchmark->add_option("--steps", ba.steps, "forced forward steps");
    benchmark->add_option("--repeats", ba.repeats, "best-of repeats");
    benchmark->add_option("--orders", ba.orders, "spline orders for the basis search")->delimiter(',');
    benchmark->add_option("--out", ba.out, "timing CSV (default stdout)");

    ExportArgs xa;
    auto* exporter = app.add_subcommand("export", "Plot-ready CSV from a report");
    exporter->add_option("--report", xa.report, "report JSON")->required();
    exporter->add_option("--what", xa.what,
                         "coefficient_rows, loo_curve, selected_coefficients or linear_coefficients")
        ->required();
    exporter->add_option("--out", xa.out, "CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, err, err);
        err << app.help();
        return 2;
    }

    try {
        if (*compress) run_compress(ca, out);
        else if (*select) run_select(sa, out);
        else if (*train) run_train(ta, out);
        else if (*predict) run_predict(pa, out);
        else if (*evaluate) run_evaluate(ea, out);
        else if (*pipeline) run_pipeline_cmd(pla, out);
        else if (*benchmark) run_benchmark(ba, out);
        else if (*exporter) run_export(xa, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace specsel
