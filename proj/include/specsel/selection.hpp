#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "specsel/mi.hpp"
#include "specsel/spectra.hpp"

namespace specsel {

enum class Phase { forward, backward };

struct SelectionStep {
    Phase phase;
    std::size_t candidate;  ///< feature added or removed
    IndexSet subset_after;  ///< in order of insertion
    double mi_after;
};

struct SelectionTrace {
    std::vector<SelectionStep> steps;
    IndexSet final_subset;
    double final_mi = 0.0;
    std::size_t forward_evaluations = 0;
    std::size_t backward_evaluations = 0;
};

struct SelectionOptions {
    std::optional<std::size_t> max_size;
    /// A step is accepted only if it raises the score by more than this.
    /// Negative values (down to -infinity) force the forward search to keep
    /// adding the best candidate until max_size; only the benchmark does that.
    double min_delta = 0.0;
};

/// Score of a feature subset. Called with indices sorted ascending.
using SubsetScore = std::function<double(const IndexSet&)>;

/// Memoizes a score by sorted index tuple. Copies share the cache.
SubsetScore cached(SubsetScore score);

/// Score backed by the nearest-neighbour MI estimator on columns of `features`.
SubsetScore mi_score(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const MiEstimatorConfig& config);

/// Greedy forward search from the empty set (whose score is 0). Candidates are
/// scanned in index order, so ties go to the lowest index.
SelectionTrace forward_phase(const SubsetScore& score, std::size_t n_features, const SelectionOptions& options = {});

/// Greedy elimination from `start`, never below one feature.
SelectionTrace backward_phase(const SubsetScore& score, const IndexSet& start, const SelectionOptions& options = {});

/// Forward phase followed by a backward phase on its result; one score cache
/// serves both.
SelectionTrace forward_backward(const SubsetScore& score, std::size_t n_features, const SelectionOptions& options = {});

SelectionTrace forward_phase(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                             const MiEstimatorConfig& config, const SelectionOptions& options = {});
SelectionTrace backward_phase(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const IndexSet& start,
                              const MiEstimatorConfig& config, const SelectionOptions& options = {});
SelectionTrace forward_backward(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                const MiEstimatorConfig& config, const SelectionOptions& options = {});

/// "step,phase,candidate,subset,mi"; subset members joined with ';'.
void write_trace_csv(std::ostream& out, const SelectionTrace& trace);

} // namespace specsel
