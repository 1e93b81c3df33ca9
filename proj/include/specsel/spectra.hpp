#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace specsel {

using IndexSet = std::vector<std::size_t>;

enum class CsvLayout { target_first_column, no_target };

/// P spectra sampled on N shared, strictly increasing wavelengths, with an
/// optional target value per spectrum. Immutable once constructed.
class SpectraSet {
public:
    /// Throws ValidationError if any invariant is violated.
    SpectraSet(Eigen::VectorXd wavelengths, Eigen::MatrixXd responses,
               std::optional<Eigen::VectorXd> target = std::nullopt);

    const Eigen::VectorXd& wavelengths() const noexcept { return wavelengths_; }
    const Eigen::MatrixXd& responses() const noexcept { return responses_; }
    const std::optional<Eigen::VectorXd>& target() const noexcept { return target_; }
    bool has_target() const noexcept { return target_.has_value(); }

    std::size_t n_spectra() const noexcept { return static_cast<std::size_t>(responses_.rows()); }
    std::size_t n_wavelengths() const noexcept { return static_cast<std::size_t>(wavelengths_.size()); }

    /// Target vector; throws PreconditionError when absent.
    const Eigen::VectorXd& require_target() const;

    /// Row subset, order preserved as given.
    SpectraSet subset(std::span<const std::size_t> rows) const;

    /// Same spectra with the target removed.
    SpectraSet without_target() const;

private:
    Eigen::VectorXd wavelengths_;
    Eigen::MatrixXd responses_;
    std::optional<Eigen::VectorXd> target_;
};

SpectraSet load_spectra(const std::filesystem::path& path, CsvLayout layout);
SpectraSet read_spectra(std::istream& in, CsvLayout layout);
void write_spectra(std::ostream& out, const SpectraSet& set);

struct SplitAssignment {
    IndexSet train_indices;
    IndexSet test_indices;
    std::uint64_t seed = 0;
};

/// Distribution-preserving train/test split. Samples are sorted by target and
/// cut into consecutive blocks of ceil(1/test_fraction); each block receives a
/// proportional share of the round(test_fraction * P) test slots (largest
/// remainder, seeded tie-break) and its members are drawn at random.
SplitAssignment stratified_split(const SpectraSet& set, double test_fraction, std::uint64_t seed);

/// Reads an explicit split: the 0-based indices of the test spectra, separated
/// by commas, whitespace or newlines. Every other index in [0, n) is training.
SplitAssignment read_split_file(const std::filesystem::path& path, std::size_t n);

/// k disjoint folds over `indices` whose sizes differ by at most one. Indices
/// are sorted by target and dealt block by block (blocks of k) to random folds.
std::vector<IndexSet> kfold_stratified(std::span<const std::size_t> indices,
                                       const Eigen::VectorXd& target, int k, std::uint64_t seed);

/// Per-column standardization with statistics taken from a training matrix.
/// Zero-variance columns keep unit scale so they map to zero.
struct Standardizer {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& train);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

} // namespace specsel
