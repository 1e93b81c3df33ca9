#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

namespace specsel {

using nlohmann::json;

const Eigen::VectorXd& HeldOutTargets::reveal() const {
    if (audit_ && !sealed_) throw PreconditionError("test targets read before the models were sealed");
    return values_;
}

namespace {

class StageClock {
public:
    explicit StageClock(std::map<std::string, double>& sink) : sink_(sink) {}

    // Runs `body` under the stage name: times it and tags any library error.
    template <typename F>
    auto run(const std::string& stage, F&& body) -> decltype(body()) {
        const auto start = std::chrono::steady_clock::now();
        struct Record {
            std::map<std::string, double>& sink;
            const std::string& stage;
            std::chrono::steady_clock::time_point start;
            ~Record() {
                sink[stage] += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            }
        } record{sink_, stage, start};
        try {
            return body();
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(stage, e.what());
        }
    }

private:
    std::map<std::string, double>& sink_;
};

bool is_bspline(Method m) { return m == Method::bspline_mi_rbfn || m == Method::bspline_mi_lr; }

json config_echo(const PipelineConfig& c) {
    json j;
    j["data"] = c.data.generic_string();
    j["layout"] = c.layout == CsvLayout::target_first_column ? "target_first_column" : "no_target";
    j["test_fraction"] = c.test_fraction;
    j["split_file"] = c.split_file ? json(c.split_file->generic_string()) : json(nullptr);
    j["seed"] = c.seed;
    j["orders"] = c.orders;
    j["n_range"] = c.n_range ? json::array({c.n_range->lo, c.n_range->hi}) : json(nullptr);
    j["strategy"] = c.strategy == SearchStrategy::exhaustive ? "exhaustive" : "coarse_to_fine";
    j["epsilon"] = c.epsilon;
    j["mi"] = {{"k", c.mi.k},
               {"jitter_scale", c.mi.jitter_scale},
               {"seed", c.mi.seed},
               {"search", c.mi.search == NeighborSearch::brute_force ? "brute_force" : "kd_tree"}};
    j["selection"] = {{"max_size", c.selection.max_size ? json(*c.selection.max_size) : json(nullptr)},
                      {"min_delta", std::isfinite(c.selection.min_delta) ? json(c.selection.min_delta)
                                                                         : json("-inf")}};
    j["rbfn_grid"] = {{"neurons", c.rbfn_grid.neuron_counts},
                      {"width_scales", c.rbfn_grid.width_scales},
                      {"folds", c.rbfn_grid.folds},
                      {"seed", c.rbfn_grid.seed}};
    j["max_components"] = c.max_components;
    json methods = json::array();
    for (Method m : c.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    j["standardize"] = c.standardize;
    j["audit_test_isolation"] = c.audit_test_isolation;
    return j;
}

struct FeatureSelection {
    SelectionTrace trace;
    IndexSet selected; // ascending
    std::vector<std::string> warnings;
};

FeatureSelection select_features(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const PipelineConfig& config) {
    FeatureSelection out;
    const SubsetScore score = cached(mi_score(x, y, config.mi));
    out.trace = forward_backward(score, static_cast<std::size_t>(x.cols()), config.selection);
    out.selected = out.trace.final_subset;
    if (out.selected.empty()) {
        std::size_t best = 0;
        double best_mi = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < static_cast<std::size_t>(x.cols()); ++j) {
            const double v = score(IndexSet{j});
            if (v > best_mi) {
                best_mi = v;
                best = j;
            }
        }
        out.selected = {best};
        out.warnings.push_back("selection kept no feature; falling back to the single best-MI feature " +
                               std::to_string(best));
    }
    std::sort(out.selected.begin(), out.selected.end());
    return out;
}

Eigen::MatrixXd columns(const Eigen::MatrixXd& x, const IndexSet& idx) {
    const std::vector<Eigen::Index> cols(idx.begin(), idx.end());
    return x(Eigen::all, cols);
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from, const std::string& prefix = {}) {
    for (const auto& w : from) to.push_back(prefix + w);
}

} // namespace

PipelineReport run_pipeline(const PipelineConfig& config) {
    std::map<std::string, double> load_time;
    StageClock clock(load_time);
    const SpectraSet data = clock.run("load", [&] { return load_spectra(config.data, config.layout); });
    PipelineReport report = run_pipeline(config, data);
    report.timing["load"] = load_time["load"];
    return report;
}

PipelineReport run_pipeline(const PipelineConfig& config, const SpectraSet& data) {
    PipelineReport report;
    report.config_echo = config_echo(config);
    StageClock clock(report.timing);

    const SplitAssignment split = clock.run("split", [&] {
        data.require_target();
        SplitAssignment s = config.split_file ? read_split_file(*config.split_file, data.n_spectra())
                                              : stratified_split(data, config.test_fraction, config.seed);
        if (s.train_indices.size() < 2 || s.test_indices.empty())
            throw PreconditionError("split leaves " + std::to_string(s.train_indices.size()) + " training and " +
                                    std::to_string(s.test_indices.size()) + " test spectra");
        return s;
    });

    const SpectraSet train = data.subset(split.train_indices);
    const SpectraSet test = data.subset(split.test_indices).without_target();
    HeldOutTargets held_out(data.require_target()(std::vector<Eigen::Index>(split.test_indices.begin(),
                                                                              split.test_indices.end())),
                            config.audit_test_isolation);
    const Eigen::VectorXd& y = train.require_target();
    const Eigen::VectorXd& wl = data.wavelengths();

    report.n_train = train.n_spectra();
    report.n_test = test.n_spectra();
    report.wavelengths = wl;

    auto maybe_standardize = [&](const Eigen::MatrixXd& tr, const Eigen::MatrixXd& te) {
        if (!config.standardize) return std::pair{tr, te};
        const Standardizer s = Standardizer::fit(tr);
        return std::pair{s.apply(tr), s.apply(te)};
    };

    const bool need_bspline = std::any_of(config.methods.begin(), config.methods.end(), is_bspline);
    const bool need_raw_selection =
        std::find(config.methods.begin(), config.methods.end(), Method::mi_rbfn) != config.methods.end();

    Eigen::MatrixXd coef_train, coef_test;
    IndexSet coef_selected;
    std::vector<Interval> coef_intervals;
    if (need_bspline) {
        const BasisSelection chosen = clock.run("basis_search", [&] {
            const int max_order = *std::max_element(config.orders.begin(), config.orders.end());
            const SizeRange fallback = default_size_range(train.n_wavelengths(), max_order);
            SizeRange range = config.n_range.value_or(fallback);
            if (range.lo < 0) range.lo = fallback.lo;
            if (range.hi < 0) range.hi = fallback.hi;
            return select_basis_size(train, range, config.orders, config.strategy);
        });
        const BsplineBasis basis(wl[0], wl[wl.size() - 1], chosen.n_functions + 1 - chosen.order, chosen.order);
        report.basis = BasisReport{chosen.order, basis.intervals(), chosen.n_functions, basis.w_min(), basis.w_max(),
                                   chosen.curve};

        const ProjectionMatrix projection = clock.run("compression", [&] {
            ProjectionMatrix r = projection_matrix(basis, wl);
            std::tie(coef_train, coef_test) =
                maybe_standardize(compress(r, train).coefficients, compress(r, test).coefficients);
            return r;
        });

        clock.run("selection_coefficients", [&] {
            FeatureSelection fs = select_features(coef_train, y, config);
            report.coefficient_selection = fs.trace;
            coef_selected = fs.selected;
            append(report.warnings, fs.warnings, "coefficient selection: ");
        });

        clock.run("ranges", [&] {
            report.selected_rows.resize(static_cast<Eigen::Index>(coef_selected.size()), projection.entries.cols());
            for (std::size_t r = 0; r < coef_selected.size(); ++r) {
                report.ranges.push_back(wavelength_range(projection, coef_selected[r], config.epsilon));
                report.selected_rows.row(static_cast<Eigen::Index>(r)) =
                    projection.entries.row(static_cast<Eigen::Index>(coef_selected[r]));
            }
            coef_intervals = merge_ranges(std::span<const WavelengthRange>(report.ranges));
        });
    }

    Eigen::MatrixXd raw_train, raw_test;
    IndexSet raw_selected;
    std::vector<Interval> raw_intervals;
    if (need_raw_selection) {
        clock.run("selection_wavelengths", [&] {
            std::tie(raw_train, raw_test) = maybe_standardize(train.responses(), test.responses());
            FeatureSelection fs = select_features(raw_train, y, config);
            report.wavelength_selection = fs.trace;
            raw_selected = fs.selected;
            append(report.warnings, fs.warnings, "wavelength selection: ");
            std::vector<Interval> points;
            for (std::size_t j : raw_selected) points.push_back({wl[static_cast<Eigen::Index>(j)],
                                                                 wl[static_cast<Eigen::Index>(j)]});
            raw_intervals = merge_ranges(std::span<const Interval>(points));
        });
    }

    for (Method method : config.methods) {
        MethodResult result;
        result.method = method;
        clock.run(std::string("model:") + to_string(method), [&] {
            switch (method) {
            case Method::bspline_mi_rbfn:
            case Method::mi_rbfn: {
                const bool spline = method == Method::bspline_mi_rbfn;
                const IndexSet& sel = spline ? coef_selected : raw_selected;
                const Eigen::MatrixXd xtr = columns(spline ? coef_train : raw_train, sel);
                const Eigen::MatrixXd xte = columns(spline ? coef_test : raw_test, sel);
                const RbfnCvResult cv = cv_select_meta(xtr, y, config.rbfn_grid);
                const RbfnModel model = fit_rbfn(xtr, y, cv.neurons, cv.width_scale, config.rbfn_grid.seed);
                result.selected = sel;
                result.n_variables = sel.size();
                result.intervals = spline ? coef_intervals : raw_intervals;
                result.test_predictions = predict_rbfn(model, xte);
                json grid = json::array();
                for (const CvCell& c : cv.table)
                    grid.push_back({{"neurons", c.neurons},
                                    {"width_scale", c.width_scale},
                                    {"mse", c.feasible ? json(c.mse) : json(nullptr)}});
                result.meta = {{"neurons", cv.neurons},
                               {"width_scale", cv.width_scale},
                               {"cv_mse", cv.mse},
                               {"cv_table", grid}};
                append(result.warnings, cv.warnings);
                append(result.warnings, model.warnings);
                break;
            }
            case Method::bspline_mi_lr: {
                const Eigen::MatrixXd xtr = columns(coef_train, coef_selected);
                const LinearModel model = fit_linear(xtr, y);
                result.selected = coef_selected;
                result.n_variables = coef_selected.size();
                result.intervals = coef_intervals;
                result.test_predictions = model.predict(columns(coef_test, coef_selected));
                result.meta = {{"intercept", model.intercept},
                               {"coefficients", std::vector<double>(model.coefficients.begin(),
                                                                    model.coefficients.end())}};
                append(result.warnings, model.warnings);
                break;
            }
            case Method::pcr:
            case Method::plsr: {
                const LatentKind kind = method == Method::pcr ? LatentKind::pcr : LatentKind::plsr;
                const Eigen::MatrixXd& xtr = train.responses();
                const auto fold_rows = static_cast<int>(xtr.rows()) - static_cast<int>(xtr.rows()) /
                                                                          std::max(1, config.rbfn_grid.folds) - 1;
                const int bound = std::min({config.max_components, fold_rows, static_cast<int>(xtr.cols())});
                if (bound < 1) throw PreconditionError("too few training spectra for latent-variable CV");
                const ComponentCvResult cv =
                    cv_select_components(xtr, y, kind, bound, config.rbfn_grid.folds, config.rbfn_grid.seed);
                const LatentModel model = fit_latent(xtr, y, kind, cv.n_components);
                result.n_variables = static_cast<std::size_t>(model.n_components);
                result.intervals = important_wavelengths_linear(model.linear, wl, config.epsilon);
                const double cut = config.epsilon * model.linear.coefficients.cwiseAbs().maxCoeff();
                for (Eigen::Index j = 0; j < model.linear.coefficients.size(); ++j)
                    if (std::abs(model.linear.coefficients[j]) > cut) result.selected.push_back(static_cast<std::size_t>(j));
                result.test_predictions = model.predict(test.responses());
                json table = json::array();
                for (const auto& [k, mse] : cv.table)
                    table.push_back({{"components", k}, {"mse", std::isfinite(mse) ? json(mse) : json(nullptr)}});
                result.meta = {{"components", model.n_components}, {"cv_mse", cv.mse}, {"cv_table", table}};
                append(result.warnings, model.linear.warnings);
                if (kind == LatentKind::plsr || !report.linear_coefficients)
                    report.linear_coefficients = std::pair{method, model.linear.coefficients};
                break;
            }
            }
        });
        report.methods.push_back(std::move(result));
    }

    held_out.seal();
    clock.run("evaluation", [&] {
        const Eigen::VectorXd& y_test = held_out.reveal();
        report.target_variance = union_variance(y, y_test);
        for (MethodResult& r : report.methods) r.nmse_test = nmse(y_test, r.test_predictions, report.target_variance);
    });
    return report;
}

namespace {

json trace_json(const SelectionTrace& t) {
    json steps = json::array();
    for (const SelectionStep& s : t.steps)
        steps.push_back({{"phase", s.phase == Phase::forward ? "forward" : "backward"},
                         {"candidate", s.candidate},
                         {"subset", s.subset_after},
                         {"mi", s.mi_after}});
    return {{"steps", steps},
            {"final_subset", t.final_subset},
            {"final_mi", t.final_mi},
            {"forward_evaluations", t.forward_evaluations},
            {"backward_evaluations", t.backward_evaluations}};
}

json intervals_json(const std::vector<Interval>& v) {
    json out = json::array();
    for (const Interval& i : v) out.push_back(json::array({i.lower, i.upper}));
    return out;
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

} // namespace

json to_json(const PipelineReport& r) {
    json j;
    j["schema"] = 1;
    j["config"] = r.config_echo;
    j["data"] = {{"n_train", r.n_train},
                 {"n_test", r.n_test},
                 {"n_wavelengths", r.wavelengths.size()},
                 {"w_min", r.wavelengths.size() ? r.wavelengths[0] : 0.0},
                 {"w_max", r.wavelengths.size() ? r.wavelengths[r.wavelengths.size() - 1] : 0.0},
                 {"target_variance", r.target_variance}};
    if (r.basis) {
        json curve = json::array();
        for (const LooPoint& p : r.basis->curve) curve.push_back({{"order", p.order}, {"n", p.n_functions}, {"loo", p.loo}});
        j["basis"] = {{"order", r.basis->order},
                      {"intervals", r.basis->intervals},
                      {"n_functions", r.basis->n_functions},
                      {"w_min", r.basis->w_min},
                      {"w_max", r.basis->w_max},
                      {"loo_curve", curve}};
    } else {
        j["basis"] = nullptr;
    }
    j["selection"] = {
        {"coefficients", r.coefficient_selection ? trace_json(*r.coefficient_selection) : json(nullptr)},
        {"wavelengths", r.wavelength_selection ? trace_json(*r.wavelength_selection) : json(nullptr)}};
    json ranges = json::array();
    for (const WavelengthRange& w : r.ranges)
        ranges.push_back({{"variable", w.variable_index},
                          {"lower", w.lower},
                          {"upper", w.upper},
                          {"lower_index", w.lower_index},
                          {"upper_index", w.upper_index},
                          {"epsilon", w.epsilon}});
    j["ranges"] = ranges;
    j["merged_ranges"] = intervals_json(merge_ranges(std::span<const WavelengthRange>(r.ranges)));

    json methods = json::array();
    for (const MethodResult& m : r.methods)
        methods.push_back({{"method", to_string(m.method)},
                           {"label", label(m.method)},
                           {"n_variables", m.n_variables},
                           {"selected", m.selected},
                           {"intervals", intervals_json(m.intervals)},
                           {"meta", m.meta},
                           {"nmse_test", m.nmse_test},
                           {"test_predictions", to_vector(m.test_predictions)},
                           {"warnings", m.warnings}});
    j["methods"] = methods;

    json artifacts;
    artifacts["wavelengths"] = to_vector(r.wavelengths);
    if (r.coefficient_selection) {
        json rows = json::array();
        for (Eigen::Index i = 0; i < r.selected_rows.rows(); ++i) rows.push_back(to_vector(r.selected_rows.row(i).transpose()));
        json vars = json::array();
        for (const WavelengthRange& w : r.ranges) vars.push_back(w.variable_index);
        artifacts["coefficient_rows"] = {{"variables", vars}, {"rows", rows}};
    } else {
        artifacts["coefficient_rows"] = nullptr;
    }
    if (r.linear_coefficients)
        artifacts["linear_coefficients"] = {{"method", to_string(r.linear_coefficients->first)},
                                            {"coefficients", to_vector(r.linear_coefficients->second)}};
    else
        artifacts["linear_coefficients"] = nullptr;
    j["artifacts"] = artifacts;
    j["warnings"] = r.warnings;
    j["timing"] = r.timing;
    return j;
}

} // namespace specsel
