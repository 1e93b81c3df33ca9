#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "specsel/bspline.hpp"
#include "specsel/mi.hpp"
#include "specsel/models.hpp"
#include "specsel/selection.hpp"
#include "specsel/spectra.hpp"

namespace specsel {

enum class Method { bspline_mi_rbfn, bspline_mi_lr, mi_rbfn, pcr, plsr };

const char* to_string(Method m);
const char* label(Method m);
Method parse_method(const std::string& name);

struct PipelineConfig {
    std::filesystem::path data;
    CsvLayout layout = CsvLayout::target_first_column;
    double test_fraction = 0.25;
    std::optional<std::filesystem::path> split_file;
    std::uint64_t seed = 0;

    std::vector<int> orders{4};
    std::optional<SizeRange> n_range; ///< default [N/20, N/2]
    SearchStrategy strategy = SearchStrategy::exhaustive;
    double epsilon = 0.01;

    MiEstimatorConfig mi;
    SelectionOptions selection;
    CvGrid rbfn_grid;
    int max_components = 20;

    std::vector<Method> methods{Method::bspline_mi_rbfn, Method::bspline_mi_lr, Method::mi_rbfn, Method::pcr,
                                Method::plsr};
    /// Per-variable standardization (training statistics) of the selection
    /// and model inputs.
    bool standardize = true;
    /// Make any read of the test targets before final evaluation throw.
    bool audit_test_isolation = false;
    std::filesystem::path output = "report.json";
};

/// Flat "key = value" text; '#' starts a comment; lists are comma-separated.
/// Relative paths are resolved against `base_dir`. Throws ConfigError.
PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Test-set targets kept out of reach until the models are final.
class HeldOutTargets {
public:
    HeldOutTargets(Eigen::VectorXd values, bool audit) : values_(std::move(values)), audit_(audit) {}
    void seal() noexcept { sealed_ = true; }
    bool sealed() const noexcept { return sealed_; }
    /// Throws PreconditionError in audit mode if called before seal().
    const Eigen::VectorXd& reveal() const;

private:
    Eigen::VectorXd values_;
    bool audit_;
    bool sealed_ = false;
};

struct MethodResult {
    Method method;
    std::size_t n_variables = 0;        ///< selected features, or latent components
    IndexSet selected;                  ///< feature indices (coefficients or wavelengths)
    std::vector<Interval> intervals;    ///< merged wavelength intervals
    nlohmann::json meta = nlohmann::json::object();
    Eigen::VectorXd test_predictions;
    double nmse_test = 0.0;
    std::vector<std::string> warnings;
};

struct BasisReport {
    int order = 0;
    int intervals = 0;
    int n_functions = 0;
    double w_min = 0.0;
    double w_max = 0.0;
    std::vector<LooPoint> curve;
};

struct PipelineReport {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double target_variance = 0.0;     ///< over train and test together
    Eigen::VectorXd wavelengths;
    std::optional<BasisReport> basis;
    std::optional<SelectionTrace> coefficient_selection;
    std::optional<SelectionTrace> wavelength_selection;
    std::vector<WavelengthRange> ranges; ///< per selected coefficient
    std::vector<MethodResult> methods;
    Eigen::MatrixXd selected_rows;       ///< projection rows of the selected coefficients
    std::optional<std::pair<Method, Eigen::VectorXd>> linear_coefficients;
    std::vector<std::string> warnings;
    std::map<std::string, double> timing; ///< seconds per stage
    nlohmann::json config_echo;
};

PipelineReport run_pipeline(const PipelineConfig& config);
PipelineReport run_pipeline(const PipelineConfig& config, const SpectraSet& data);

/// Versioned report document ("schema": 1). Timing lives under "timing" only.
nlohmann::json to_json(const PipelineReport& report);

enum class PlotData { coefficient_rows, loo_curve, selected_coefficients, linear_coefficients };
PlotData parse_plot_data(const std::string& name);

/// Plot-ready CSV from a report document. Throws PreconditionError naming
/// the stage if the report lacks the requested artifact.
void export_plot_data(const nlohmann::json& report, PlotData what, std::ostream& out);

// ---------------------------------------------------------------------------
// Synthetic data and the complexity benchmark

enum class SyntheticResponse { linear, nonlinear };

struct SyntheticOptions {
    std::size_t n_wavelengths = 300;
    std::size_t n_spectra = 150;
    double w_min = 400.0;
    double w_max = 2500.0;
    SyntheticResponse response = SyntheticResponse::nonlinear;
    double target_noise = 0.05;
    double spectral_noise = 0.002;
    std::uint64_t seed = 0;
};

struct SyntheticData {
    SpectraSet set;
    std::vector<Interval> bands; ///< where the target-relevant absorption lives
};

/// Smooth random spectra carrying two localized absorption bands whose
/// intensities u1, u2 ~ U(-1, 1) drive the target: u1 + u2 (linear) or
/// 2 u1^2 + sin(pi u2) (nonlinear), plus Gaussian noise.
SyntheticData make_synthetic(const SyntheticOptions& options);

struct BenchmarkSize {
    std::size_t n_wavelengths;
    std::size_t n_functions;
    std::size_t n_spectra;
};

struct BenchmarkOptions {
    std::size_t steps = 3;       ///< forced forward steps in both searches
    std::vector<int> orders{4};
    int repeats = 1;             ///< best-of timing
    MiEstimatorConfig mi;        ///< brute-force search unless told otherwise
};

struct BenchmarkRow {
    BenchmarkSize size;
    double compressed_seconds = 0.0; ///< basis search + compression + selection on coefficients
    double raw_seconds = 0.0;        ///< selection on the raw wavelengths
    double ratio = 0.0;              ///< compressed / raw
    double inequality = 0.0;         ///< 1/P + (n/N)^3
    std::size_t compressed_evaluations = 0;
    std::size_t raw_evaluations = 0;
};

std::vector<BenchmarkRow> benchmark_complexity(std::span<const BenchmarkSize> sizes, std::uint64_t seed,
                                               const BenchmarkOptions& options = {});
void write_benchmark_csv(std::ostream& out, std::span<const BenchmarkRow> rows);

} // namespace specsel
