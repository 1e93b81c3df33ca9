#include "specsel/spectra.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

#include "specsel/errors.hpp"

namespace specsel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_real(std::string_view field, std::size_t line_no) {
    double v = 0.0;
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        // from_chars rejects "inf"/"nan" spellings on some platforms; report
        // them as non-finite rather than as a parse failure.
        std::string lower(field);
        std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
        if (lower == "nan" || lower == "inf" || lower == "-inf" || lower == "infinity")
            throw ValidationError("non-finite entry '" + std::string(field) + "' on line " +
                                  std::to_string(line_no));
        throw FormatError("cannot parse '" + std::string(field) + "' as a number on line " +
                          std::to_string(line_no));
    }
    return v;
}

} // namespace

SpectraSet::SpectraSet(Eigen::VectorXd wavelengths, Eigen::MatrixXd responses,
                       std::optional<Eigen::VectorXd> target)
    : wavelengths_(std::move(wavelengths)), responses_(std::move(responses)), target_(std::move(target)) {
    if (wavelengths_.size() < 2)
        throw ValidationError("at least two wavelengths are required");
    for (Eigen::Index j = 0; j < wavelengths_.size(); ++j) {
        if (!std::isfinite(wavelengths_[j]))
            throw ValidationError("non-finite wavelength at column " + std::to_string(j));
        if (j > 0 && !(wavelengths_[j] > wavelengths_[j - 1]))
            throw ValidationError("wavelengths must be strictly increasing (column " + std::to_string(j) + ")");
    }
    if (responses_.cols() != wavelengths_.size())
        throw ValidationError("response matrix has " + std::to_string(responses_.cols()) +
                              " columns but there are " + std::to_string(wavelengths_.size()) + " wavelengths");
    if (!responses_.allFinite())
        throw ValidationError("responses contain non-finite values");
    if (target_) {
        if (target_->size() != responses_.rows())
            throw ValidationError("target length differs from the number of spectra");
        if (!target_->allFinite())
            throw ValidationError("target contains non-finite values");
    }
}

const Eigen::VectorXd& SpectraSet::require_target() const {
    if (!target_) throw PreconditionError("operation requires a target vector");
    return *target_;
}

SpectraSet SpectraSet::subset(std::span<const std::size_t> rows) const {
    Eigen::MatrixXd r(static_cast<Eigen::Index>(rows.size()), responses_.cols());
    std::optional<Eigen::VectorXd> t;
    if (target_) t = Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= n_spectra()) throw PreconditionError("row index out of range");
        r.row(static_cast<Eigen::Index>(i)) = responses_.row(static_cast<Eigen::Index>(rows[i]));
        if (t) (*t)[static_cast<Eigen::Index>(i)] = (*target_)[static_cast<Eigen::Index>(rows[i])];
    }
    return SpectraSet(wavelengths_, std::move(r), std::move(t));
}

SpectraSet SpectraSet::without_target() const { return SpectraSet(wavelengths_, responses_); }

SpectraSet read_spectra(std::istream& in, CsvLayout layout) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<double> wl;
    // header
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) throw FormatError("empty spectra file");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3); // UTF-8 BOM

    auto header = split_commas(line);
    std::size_t first = 0;
    if (layout == CsvLayout::target_first_column) {
        if (header.empty() || header.front() != "target")
            throw FormatError("header must start with 'target' for the target_first_column layout");
        first = 1;
    }
    for (std::size_t c = first; c < header.size(); ++c) wl.push_back(parse_real(header[c], line_no));
    const std::size_t n = wl.size();
    if (n < 2) throw ValidationError("at least two wavelengths are required");
    for (std::size_t j = 1; j < n; ++j)
        if (!(wl[j] > wl[j - 1]))
            throw ValidationError("wavelengths in the header are not strictly increasing at column " +
                                  std::to_string(j + first));

    std::vector<double> values;
    std::vector<double> targets;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_commas(line);
        if (fields.size() != header.size())
            throw FormatError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                              " fields, expected " + std::to_string(header.size()));
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = parse_real(fields[c], line_no);
            if (!std::isfinite(v))
                throw ValidationError("non-finite entry on line " + std::to_string(line_no));
            if (c < first)
                targets.push_back(v);
            else
                values.push_back(v);
        }
        ++rows;
    }

    Eigen::VectorXd w = Eigen::Map<Eigen::VectorXd>(wl.data(), static_cast<Eigen::Index>(n));
    Eigen::MatrixXd r(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < n; ++j)
            r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i * n + j];
    std::optional<Eigen::VectorXd> t;
    if (first == 1) t = Eigen::Map<Eigen::VectorXd>(targets.data(), static_cast<Eigen::Index>(rows));
    return SpectraSet(std::move(w), std::move(r), std::move(t));
}

SpectraSet load_spectra(const std::filesystem::path& path, CsvLayout layout) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open spectra file " + path.string());
    return read_spectra(in, layout);
}

void write_spectra(std::ostream& out, const SpectraSet& set) {
    auto old = out.precision(17);
    if (set.has_target()) out << "target,";
    for (Eigen::Index j = 0; j < set.wavelengths().size(); ++j)
        out << (j ? "," : "") << set.wavelengths()[j];
    out << '\n';
    for (Eigen::Index i = 0; i < set.responses().rows(); ++i) {
        if (set.has_target()) out << (*set.target())[i] << ',';
        for (Eigen::Index j = 0; j < set.responses().cols(); ++j)
            out << (j ? "," : "") << set.responses()(i, j);
        out << '\n';
    }
    out.precision(old);
}

namespace {

IndexSet sorted_by_target(std::span<const std::size_t> indices, const Eigen::VectorXd& target) {
    IndexSet order(indices.begin(), indices.end());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return target[static_cast<Eigen::Index>(a)] < target[static_cast<Eigen::Index>(b)];
    });
    return order;
}

} // namespace

SplitAssignment stratified_split(const SpectraSet& set, double test_fraction, std::uint64_t seed) {
    const auto& y = set.require_target();
    const std::size_t p = set.n_spectra();
    if (p < 4) throw PreconditionError("stratified_split needs at least 4 spectra");
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw PreconditionError("test_fraction must lie in (0, 1)");
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(p)));
    if (n_test == 0 || n_test >= p)
        throw PreconditionError("test_fraction leaves an empty train or test set");

    IndexSet all(p);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const IndexSet order = sorted_by_target(all, y);
    const auto block = static_cast<std::size_t>(std::ceil(1.0 / test_fraction - 1e-12));

    std::mt19937_64 rng(seed);
    const std::size_t n_blocks = (p + block - 1) / block;
    std::vector<std::size_t> quota(n_blocks);
    std::vector<double> remainder(n_blocks);
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t size = std::min(block, p - b * block);
        const double ideal = test_fraction * static_cast<double>(size);
        quota[b] = static_cast<std::size_t>(std::floor(ideal + 1e-12));
        remainder[b] = ideal - static_cast<double>(quota[b]);
        assigned += quota[b];
    }
    // Largest remainder first; equal remainders are ordered by a seeded shuffle.
    std::vector<std::size_t> rank(n_blocks);
    std::iota(rank.begin(), rank.end(), std::size_t{0});
    std::shuffle(rank.begin(), rank.end(), rng);
    std::stable_sort(rank.begin(), rank.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b] + 1e-12; });
    for (std::size_t r = 0; assigned < n_test; r = (r + 1) % n_blocks) {
        const std::size_t b = rank[r];
        const std::size_t size = std::min(block, p - b * block);
        if (quota[b] < size) {
            ++quota[b];
            ++assigned;
        }
    }
    while (assigned > n_test) { // only reachable through rounding of tiny fractions
        for (auto b = rank.rbegin(); b != rank.rend() && assigned > n_test; ++b)
            if (quota[*b] > 0) {
                --quota[*b];
                --assigned;
            }
    }

    SplitAssignment out;
    out.seed = seed;
    for (std::size_t b = 0; b < n_blocks; ++b) {
        const std::size_t begin = b * block;
        const std::size_t end = std::min(p, begin + block);
        IndexSet members(order.begin() + static_cast<std::ptrdiff_t>(begin),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t m = 0; m < members.size(); ++m)
            (m < quota[b] ? out.test_indices : out.train_indices).push_back(members[m]);
    }
    std::sort(out.train_indices.begin(), out.train_indices.end());
    std::sort(out.test_indices.begin(), out.test_indices.end());
    return out;
}

SplitAssignment read_split_file(const std::filesystem::path& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open split file " + path.string());
    std::vector<bool> is_test(n, false);
    std::string token;
    std::stringstream all;
    all << in.rdbuf();
    std::string text = all.str();
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream tokens(text);
    while (tokens >> token) {
        std::size_t idx = 0;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), idx);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw FormatError("split file entry '" + token + "' is not an index");
        if (idx >= n) throw ValidationError("split file index " + token + " out of range");
        if (is_test[idx]) throw ValidationError("split file lists index " + token + " twice");
        is_test[idx] = true;
    }
    SplitAssignment out;
    for (std::size_t i = 0; i < n; ++i) (is_test[i] ? out.test_indices : out.train_indices).push_back(i);
    if (out.test_indices.empty() || out.train_indices.empty())
        throw ValidationError("split file leaves an empty train or test set");
    return out;
}

std::vector<IndexSet> kfold_stratified(std::span<const std::size_t> indices, const Eigen::VectorXd& target,
                                       int k, std::uint64_t seed) {
    if (k < 2) throw PreconditionError("k-fold split needs k >= 2");
    const auto folds_n = static_cast<std::size_t>(k);
    if (indices.size() < folds_n)
        throw PreconditionError("k-fold split: k = " + std::to_string(k) + " exceeds the " +
                                std::to_string(indices.size()) + " available samples");
    for (auto i : indices)
        if (i >= static_cast<std::size_t>(target.size())) throw PreconditionError("fold index out of range");

    const IndexSet order = sorted_by_target(indices, target);
    std::mt19937_64 rng(seed);
    std::vector<IndexSet> folds(folds_n);
    std::vector<std::size_t> perm(folds_n);
    for (std::size_t begin = 0; begin < order.size(); begin += folds_n) {
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        std::shuffle(perm.begin(), perm.end(), rng);
        const std::size_t end = std::min(order.size(), begin + folds_n);
        for (std::size_t m = begin; m < end; ++m) folds[perm[m - begin]].push_back(order[m]);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& train) {
    if (train.rows() < 2) throw PreconditionError("standardization needs at least two rows");
    Standardizer s;
    s.mean = train.colwise().mean();
    const Eigen::MatrixXd centered = train.rowwise() - s.mean;
    s.scale = (centered.array().square().colwise().sum() / static_cast<double>(train.rows() - 1)).sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw PreconditionError("standardizer column count mismatch");
    return (x.rowwise() - mean).array().rowwise() / scale.array();
}

} // namespace specsel
