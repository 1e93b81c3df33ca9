#include <fstream>

#include "specsel/errors.hpp"
#include "specsel/model_io.hpp"

namespace specsel {

using nlohmann::json;

namespace {

std::vector<double> vec(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }
std::vector<double> vec(const Eigen::RowVectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_vector(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vec(Eigen::VectorXd(m.row(i).transpose())));
    return rows;
}

Eigen::MatrixXd to_matrix(const json& j, Eigen::Index cols) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto row = j.at(static_cast<std::size_t>(i)).get<std::vector<double>>();
        if (static_cast<Eigen::Index>(row.size()) != cols) throw FormatError("model file: ragged center matrix");
        m.row(i) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), cols);
    }
    return m;
}

} // namespace

Eigen::VectorXd SavedModel::predict(const Eigen::MatrixXd& x) const {
    if (static_cast<std::size_t>(x.cols()) != input_width)
        throw PreconditionError("dimension mismatch: model expects " + std::to_string(input_width) +
                                " input columns, data has " + std::to_string(x.cols()));
    Eigen::MatrixXd z = x;
    if (standardization) z = standardization->apply(z);
    const std::vector<Eigen::Index> cols(columns.begin(), columns.end());
    const Eigen::MatrixXd used = z(Eigen::all, cols);
    if (rbfn) return predict_rbfn(*rbfn, used);
    if (linear) return linear->predict(used);
    throw PreconditionError("model has no fitted parameters");
}

json to_json(const SavedModel& m) {
    json j;
    j["schema"] = 1;
    j["kind"] = m.kind;
    j["input_width"] = m.input_width;
    j["columns"] = m.columns;
    j["standardization"] = m.standardization
                               ? json{{"means", vec(m.standardization->mean)}, {"stds", vec(m.standardization->scale)}}
                               : json(nullptr);
    if (m.rbfn)
        j["rbfn"] = {{"centers", matrix(m.rbfn->centers)},
                     {"widths", vec(m.rbfn->widths)},
                     {"weights", vec(m.rbfn->weights)},
                     {"bias", m.rbfn->bias},
                     {"width_scale", m.rbfn->width_scale}};
    if (m.linear)
        j["linear"] = {{"coefficients", vec(m.linear->coefficients)},
                       {"intercept", m.linear->intercept},
                       {"input_means", vec(m.linear->input_means)},
                       {"input_stds", vec(m.linear->input_stds)}};
    j["meta"] = m.meta;
    return j;
}

SavedModel model_from_json(const json& j) {
    try {
        if (j.at("schema").get<int>() != 1) throw FormatError("unsupported model schema");
        SavedModel m;
        m.kind = j.at("kind").get<std::string>();
        m.input_width = j.at("input_width").get<std::size_t>();
        m.columns = j.at("columns").get<IndexSet>();
        for (std::size_t c : m.columns)
            if (c >= m.input_width) throw FormatError("model file: column index out of range");
        if (!j.at("standardization").is_null()) {
            Standardizer s;
            s.mean = to_vector(j["standardization"].at("means")).transpose();
            s.scale = to_vector(j["standardization"].at("stds")).transpose();
            if (static_cast<std::size_t>(s.mean.size()) != m.input_width || s.scale.size() != s.mean.size())
                throw FormatError("model file: standardization width mismatch");
            m.standardization = s;
        }
        const auto q = static_cast<Eigen::Index>(m.columns.size());
        if (j.contains("rbfn")) {
            const json& r = j["rbfn"];
            RbfnModel model;
            model.centers = to_matrix(r.at("centers"), q);
            model.widths = to_vector(r.at("widths"));
            model.weights = to_vector(r.at("weights"));
            model.bias = r.at("bias").get<double>();
            model.width_scale = r.at("width_scale").get<double>();
            if (model.widths.size() != model.centers.rows() || model.weights.size() != model.centers.rows())
                throw FormatError("model file: inconsistent RBFN sizes");
            m.rbfn = model;
        } else if (j.contains("linear")) {
            const json& l = j["linear"];
            LinearModel model;
            model.coefficients = to_vector(l.at("coefficients"));
            model.intercept = l.at("intercept").get<double>();
            model.input_means = to_vector(l.at("input_means"));
            model.input_stds = to_vector(l.at("input_stds"));
            if (model.coefficients.size() != q || model.input_means.size() != q || model.input_stds.size() != q)
                throw FormatError("model file: inconsistent linear model sizes");
            m.linear = model;
        } else {
            throw FormatError("model file has neither 'rbfn' nor 'linear' parameters");
        }
        if (j.contains("meta")) m.meta = j["meta"];
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

void save_model(const std::filesystem::path& path, const SavedModel& model) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(model).dump(2) << '\n';
}

SavedModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

} // namespace specsel
