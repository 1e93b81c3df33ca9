#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

#include "specsel/errors.hpp"
#include "specsel/pipeline.hpp"

namespace specsel {

namespace {

std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = strip(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    T v{};
    const std::string s = strip(value);
    if (s == "inf" || s == "-inf") {
        if constexpr (std::is_floating_point_v<T>)
            return s == "inf" ? std::numeric_limits<T>::infinity() : -std::numeric_limits<T>::infinity();
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

} // namespace

const char* to_string(Method m) {
    switch (m) {
    case Method::bspline_mi_rbfn: return "bspline_mi_rbfn";
    case Method::bspline_mi_lr: return "bspline_mi_lr";
    case Method::mi_rbfn: return "mi_rbfn";
    case Method::pcr: return "pcr";
    case Method::plsr: return "plsr";
    }
    return "?";
}

const char* label(Method m) {
    switch (m) {
    case Method::bspline_mi_rbfn: return "B-Splines + MI + RBFN";
    case Method::bspline_mi_lr: return "B-Splines + MI + LR";
    case Method::mi_rbfn: return "MI + RBFN";
    case Method::pcr: return "PCR";
    case Method::plsr: return "PLSR";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    for (Method m : {Method::bspline_mi_rbfn, Method::bspline_mi_lr, Method::mi_rbfn, Method::pcr, Method::plsr})
        if (name == to_string(m)) return m;
    throw ConfigError("unknown method '" + name + "'");
}

PipelineConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    bool mi_seed_given = false;
    int n_min = -1, n_max = -1;
    auto resolve = [&](const std::string& v) {
        std::filesystem::path p(v);
        return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = strip(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = strip(line.substr(0, eq));
        const std::string value = strip(line.substr(eq + 1));

        if (key == "data") {
            cfg.data = resolve(value);
        } else if (key == "layout") {
            if (value == "target_first_column")
                cfg.layout = CsvLayout::target_first_column;
            else if (value == "no_target")
                cfg.layout = CsvLayout::no_target;
            else
                throw ConfigError("unknown layout '" + value + "'");
        } else if (key == "test_fraction") {
            cfg.test_fraction = parse_number<double>(key, value);
        } else if (key == "split_file") {
            cfg.split_file = resolve(value);
        } else if (key == "seed") {
            cfg.seed = parse_number<std::uint64_t>(key, value);
        } else if (key == "orders") {
            cfg.orders.clear();
            for (const auto& v : split_list(value)) cfg.orders.push_back(parse_number<int>(key, v));
        } else if (key == "n_min") {
            n_min = parse_number<int>(key, value);
        } else if (key == "n_max") {
            n_max = parse_number<int>(key, value);
        } else if (key == "strategy") {
            if (value == "exhaustive")
                cfg.strategy = SearchStrategy::exhaustive;
            else if (value == "coarse_to_fine")
                cfg.strategy = SearchStrategy::coarse_to_fine;
            else
                throw ConfigError("unknown strategy '" + value + "'");
        } else if (key == "epsilon") {
            cfg.epsilon = parse_number<double>(key, value);
        } else if (key == "mi_k") {
            cfg.mi.k = parse_number<int>(key, value);
        } else if (key == "mi_seed") {
            cfg.mi.seed = parse_number<std::uint64_t>(key, value);
            mi_seed_given = true;
        } else if (key == "mi_jitter") {
            cfg.mi.jitter_scale = parse_number<double>(key, value);
        } else if (key == "mi_search") {
            if (value == "brute_force")
                cfg.mi.search = NeighborSearch::brute_force;
            else if (value == "kd_tree")
                cfg.mi.search = NeighborSearch::kd_tree;
            else
                throw ConfigError("unknown mi_search '" + value + "'");
        } else if (key == "max_size") {
            cfg.selection.max_size = parse_number<std::size_t>(key, value);
        } else if (key == "min_delta") {
            cfg.selection.min_delta = parse_number<double>(key, value);
        } else if (key == "rbfn_neurons") {
            cfg.rbfn_grid.neuron_counts.clear();
            for (const auto& v : split_list(value)) cfg.rbfn_grid.neuron_counts.push_back(parse_number<int>(key, v));
        } else if (key == "rbfn_scales") {
            cfg.rbfn_grid.width_scales.clear();
            for (const auto& v : split_list(value)) cfg.rbfn_grid.width_scales.push_back(parse_number<double>(key, v));
        } else if (key == "cv_folds") {
            cfg.rbfn_grid.folds = parse_number<int>(key, value);
        } else if (key == "max_components") {
            cfg.max_components = parse_number<int>(key, value);
        } else if (key == "methods") {
            cfg.methods.clear();
            for (const auto& v : split_list(value)) cfg.methods.push_back(parse_method(v));
        } else if (key == "standardize") {
            cfg.standardize = parse_bool(key, value);
        } else if (key == "audit_test_isolation") {
            cfg.audit_test_isolation = parse_bool(key, value);
        } else if (key == "output") {
            cfg.output = resolve(value);
        } else {
            throw ConfigError("unknown config key '" + key + "' on line " + std::to_string(line_no));
        }
    }

    if (!mi_seed_given) cfg.mi.seed = cfg.seed;
    cfg.rbfn_grid.seed = cfg.seed;
    if (n_min >= 0 || n_max >= 0) cfg.n_range = SizeRange{n_min, n_max};

    if (cfg.data.empty()) throw ConfigError("config must set 'data'");
    if (cfg.methods.empty()) throw ConfigError("config must list at least one method");
    if (cfg.orders.empty() || std::any_of(cfg.orders.begin(), cfg.orders.end(), [](int d) { return d < 1; }))
        throw ConfigError("orders must be positive integers");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0, 1)");
    if (!(cfg.epsilon > 0.0 && cfg.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
    if (cfg.mi.k < 1) throw ConfigError("mi_k must be at least 1");
    if (cfg.rbfn_grid.folds < 2) throw ConfigError("cv_folds must be at least 2");
    if (cfg.max_components < 1) throw ConfigError("max_components must be at least 1");
    if (cfg.rbfn_grid.neuron_counts.empty() || cfg.rbfn_grid.width_scales.empty())
        throw ConfigError("RBFN grid lists must be non-empty");
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    PipelineConfig cfg = parse_config(in, path.parent_path());
    if (!std::filesystem::exists(cfg.data)) throw ConfigError("data file " + cfg.data.string() + " does not exist");
    if (cfg.split_file && !std::filesystem::exists(*cfg.split_file))
        throw ConfigError("split file " + cfg.split_file->string() + " does not exist");
    return cfg;
}

} // namespace specsel
