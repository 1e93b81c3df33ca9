#include "specsel/selection.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <ostream>

#include "specsel/errors.hpp"

namespace specsel {

namespace {

IndexSet sorted_copy(const IndexSet& s) {
    IndexSet out = s;
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

SubsetScore cached(SubsetScore score) {
    auto cache = std::make_shared<std::map<IndexSet, double>>();
    return [cache, score = std::move(score)](const IndexSet& subset) {
        auto it = cache->find(subset);
        if (it != cache->end()) return it->second;
        const double v = score(subset);
        cache->emplace(subset, v);
        return v;
    };
}

SubsetScore mi_score(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const MiEstimatorConfig& config) {
    if (features.rows() != y.size()) throw PreconditionError("feature rows and target length differ");
    if (features.rows() <= config.k)
        throw PreconditionError("too few samples for the MI estimator's k");
    return [&features, &y, config](const IndexSet& subset) {
        return mutual_information_subset(features, subset, y, config).nats;
    };
}

SelectionTrace forward_phase(const SubsetScore& score, std::size_t n_features, const SelectionOptions& options) {
    if (n_features == 0) throw PreconditionError("forward selection needs at least one feature");
    SelectionTrace trace;
    IndexSet current;
    std::vector<bool> used(n_features, false);
    double current_score = 0.0;
    const std::size_t cap = std::min(n_features, options.max_size.value_or(n_features));

    while (current.size() < cap) {
        bool found = false;
        std::size_t best = 0;
        double best_score = 0.0;
        IndexSet trial = sorted_copy(current);
        for (std::size_t f = 0; f < n_features; ++f) {
            if (used[f]) continue;
            IndexSet candidate = trial;
            candidate.insert(std::upper_bound(candidate.begin(), candidate.end(), f), f);
            const double v = score(candidate);
            ++trace.forward_evaluations;
            if (!found || v > best_score) {
                found = true;
                best = f;
                best_score = v;
            }
        }
        if (!(best_score > current_score + options.min_delta)) break;
        used[best] = true;
        current.push_back(best);
        current_score = best_score;
        trace.steps.push_back({Phase::forward, best, current, best_score});
    }
    trace.final_subset = current;
    trace.final_mi = current_score;
    return trace;
}

SelectionTrace backward_phase(const SubsetScore& score, const IndexSet& start, const SelectionOptions& options) {
    if (start.empty()) throw PreconditionError("backward elimination needs a non-empty start subset");
    SelectionTrace trace;
    IndexSet current = start;
    double current_score = score(sorted_copy(current));

    while (current.size() > 1) {
        IndexSet order = sorted_copy(current);
        bool found = false;
        std::size_t best = 0;
        double best_score = 0.0;
        for (std::size_t f : order) {
            IndexSet candidate;
            candidate.reserve(order.size() - 1);
            for (std::size_t g : order)
                if (g != f) candidate.push_back(g);
            const double v = score(candidate);
            ++trace.backward_evaluations;
            if (!found || v > best_score) {
                found = true;
                best = f;
                best_score = v;
            }
        }
        if (!(best_score > current_score + options.min_delta)) break;
        current.erase(std::find(current.begin(), current.end(), best));
        current_score = best_score;
        trace.steps.push_back({Phase::backward, best, current, best_score});
    }
    trace.final_subset = current;
    trace.final_mi = current_score;
    return trace;
}

SelectionTrace forward_backward(const SubsetScore& score, std::size_t n_features, const SelectionOptions& options) {
    const SubsetScore memo = cached(score);
    SelectionTrace trace = forward_phase(memo, n_features, options);
    if (trace.final_subset.empty()) return trace;
    SelectionTrace back = backward_phase(memo, trace.final_subset, options);
    trace.steps.insert(trace.steps.end(), back.steps.begin(), back.steps.end());
    trace.backward_evaluations = back.backward_evaluations;
    trace.final_subset = back.final_subset;
    trace.final_mi = back.final_mi;
    return trace;
}

SelectionTrace forward_phase(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                             const MiEstimatorConfig& config, const SelectionOptions& options) {
    return forward_phase(mi_score(features, y, config), static_cast<std::size_t>(features.cols()), options);
}

SelectionTrace backward_phase(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const IndexSet& start,
                              const MiEstimatorConfig& config, const SelectionOptions& options) {
    return backward_phase(mi_score(features, y, config), start, options);
}

SelectionTrace forward_backward(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                const MiEstimatorConfig& config, const SelectionOptions& options) {
    return forward_backward(mi_score(features, y, config), static_cast<std::size_t>(features.cols()), options);
}

void write_trace_csv(std::ostream& out, const SelectionTrace& trace) {
    const auto old = out.precision(17);
    out << "step,phase,candidate,subset,mi\n";
    for (std::size_t s = 0; s < trace.steps.size(); ++s) {
        const auto& st = trace.steps[s];
        out << s << ',' << (st.phase == Phase::forward ? "forward" : "backward") << ',' << st.candidate << ',';
        for (std::size_t i = 0; i < st.subset_after.size(); ++i) out << (i ? ";" : "") << st.subset_after[i];
        out << ',' << st.mi_after << '\n';
    }
    out.precision(old);
}

} // namespace specsel
