#include <algorithm>
#include <cmath>
#include <ostream>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

namespace specsel {

using nlohmann::json;

PlotData parse_plot_data(const std::string& name) {
    if (name == "coefficient_rows") return PlotData::coefficient_rows;
    if (name == "loo_curve") return PlotData::loo_curve;
    if (name == "selected_coefficients") return PlotData::selected_coefficients;
    if (name == "linear_coefficients") return PlotData::linear_coefficients;
    throw ConfigError("unknown export '" + name +
                      "' (expected coefficient_rows, loo_curve, selected_coefficients or linear_coefficients)");
}

namespace {

const json& require(const json& report, const char* artifact, const char* stage) {
    const json* node = &report;
    std::string path;
    std::string rest = artifact;
    while (!rest.empty()) {
        const auto dot = rest.find('.');
        const std::string key = rest.substr(0, dot);
        rest = dot == std::string::npos ? "" : rest.substr(dot + 1);
        if (!node->is_object() || !node->contains(key) || (*node)[key].is_null())
            throw PreconditionError(std::string("report has no ") + artifact + "; the '" + stage +
                                    "' stage did not run");
        node = &(*node)[key];
    }
    return *node;
}

// Rows of |R_i| / max |R_i|, one vector per selected variable.
std::vector<std::vector<double>> normalized_rows(const json& rows) {
    std::vector<std::vector<double>> out;
    for (const auto& row : rows) {
        std::vector<double> v = row.get<std::vector<double>>();
        double peak = 0.0;
        for (double& x : v) {
            x = std::abs(x);
            peak = std::max(peak, x);
        }
        if (peak > 0.0)
            for (double& x : v) x /= peak;
        out.push_back(std::move(v));
    }
    return out;
}

} // namespace

void export_plot_data(const json& report, PlotData what, std::ostream& out) {
    out.precision(17);
    switch (what) {
    case PlotData::loo_curve: {
        const json& curve = require(report, "basis.loo_curve", "basis_search");
        out << "order,n,loo\n";
        for (const auto& p : curve)
            out << p.at("order").get<int>() << ',' << p.at("n").get<int>() << ',' << p.at("loo").get<double>() << '\n';
        return;
    }
    case PlotData::coefficient_rows: {
        const json& cr = require(report, "artifacts.coefficient_rows", "selection_coefficients");
        const auto wl = require(report, "artifacts.wavelengths", "load").get<std::vector<double>>();
        const auto vars = cr.at("variables").get<std::vector<std::size_t>>();
        const auto rows = normalized_rows(cr.at("rows"));
        out << "wavelength";
        for (std::size_t v : vars) out << ",R" << v;
        out << '\n';
        for (std::size_t k = 0; k < wl.size(); ++k) {
            out << wl[k];
            for (const auto& r : rows) out << ',' << r.at(k);
            out << '\n';
        }
        return;
    }
    case PlotData::selected_coefficients: {
        const json& cr = require(report, "artifacts.coefficient_rows", "selection_coefficients");
        const auto wl = require(report, "artifacts.wavelengths", "load").get<std::vector<double>>();
        const auto rows = normalized_rows(cr.at("rows"));
        std::vector<std::pair<double, double>> merged;
        for (const auto& iv : require(report, "merged_ranges", "ranges"))
            merged.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
        out << "wavelength,max_normalized,in_interval\n";
        for (std::size_t k = 0; k < wl.size(); ++k) {
            double peak = 0.0;
            for (const auto& r : rows) peak = std::max(peak, r.at(k));
            const bool inside = std::any_of(merged.begin(), merged.end(),
                                            [&](const auto& iv) { return wl[k] >= iv.first && wl[k] <= iv.second; });
            out << wl[k] << ',' << peak << ',' << (inside ? 1 : 0) << '\n';
        }
        return;
    }
    case PlotData::linear_coefficients: {
        const json& lc = require(report, "artifacts.linear_coefficients", "model:plsr or model:pcr");
        const auto wl = require(report, "artifacts.wavelengths", "load").get<std::vector<double>>();
        const auto coef = lc.at("coefficients").get<std::vector<double>>();
        double peak = 0.0;
        for (double c : coef) peak = std::max(peak, std::abs(c));
        out << "wavelength,coefficient,normalized_abs\n";
        for (std::size_t k = 0; k < wl.size(); ++k)
            out << wl[k] << ',' << coef.at(k) << ',' << (peak > 0.0 ? std::abs(coef[k]) / peak : 0.0) << '\n';
        return;
    }
    }
}

} // namespace specsel
