#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "specsel/models.hpp"
#include "specsel/spectra.hpp"

namespace specsel {

/// A trained regressor with the column subset and scaling it was fitted on,
/// as written by `specsel train` and read by `specsel predict`.
struct SavedModel {
    std::string kind;          ///< rbfn, linear, pcr or plsr
    std::size_t input_width = 0;
    IndexSet columns;          ///< columns of the input used by the model
    std::optional<Standardizer> standardization;
    std::optional<RbfnModel> rbfn;
    std::optional<LinearModel> linear;
    nlohmann::json meta = nlohmann::json::object();

    /// Throws PreconditionError when `x` does not have input_width columns.
    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

nlohmann::json to_json(const SavedModel& model);
SavedModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SavedModel& model);
SavedModel load_model(const std::filesystem::path& path);

} // namespace specsel
