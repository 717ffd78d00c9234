#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "propneat/tensor.hpp"

namespace propneat {

enum class ColumnKind { continuous, categorical, ordinal, target };

const char* to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& s);

// Key-value schema file: one "column: kind" line per column, '#' comments.
struct Schema {
    std::vector<std::pair<std::string, ColumnKind>> columns;
    static Schema from_text(const std::string& text);
    static Schema load(const std::filesystem::path& path);
    std::string to_text() const;
};

struct RawColumn {
    std::string name;
    ColumnKind kind = ColumnKind::continuous;
    std::vector<double> numeric;     // continuous and target
    std::vector<std::string> labels; // categorical and ordinal
};

struct RawDataset {
    std::vector<RawColumn> columns;
    int n_rows = 0;
    int target_index = -1;
    const RawColumn& target() const { return columns.at(static_cast<std::size_t>(target_index)); }
};

// Header row required; schema columns must all be present (extra CSV columns
// are ignored). Unparseable values raise ParseError naming the data rows.
RawDataset load_csv(const std::filesystem::path& path, const Schema& schema);

struct ContinuousStats {
    double mean = 0.0;
    double stddev = 1.0; // divisor floored at 1e-12 when applied
};

class PreparedDataset {
public:
    PreparedDataset() = default;
    PreparedDataset(const PreparedDataset& o) { *this = o; }
    PreparedDataset& operator=(const PreparedDataset& o) {
        if (this != &o) {
            features = o.features;
            targets = o.targets;
            feature_names = o.feature_names;
            feature_name_map = o.feature_name_map;
            train_indices = o.train_indices;
            validation_indices = o.validation_indices;
            test_indices = o.test_indices;
            continuous_stats = o.continuous_stats;
            category_vocab = o.category_vocab;
            test_accessed_.store(o.test_accessed_.load());
        }
        return *this;
    }
    PreparedDataset(PreparedDataset&& o) noexcept { *this = o; }
    PreparedDataset& operator=(PreparedDataset&& o) noexcept {
        *this = static_cast<const PreparedDataset&>(o);
        return *this;
    }

    Matrix features; // n_rows x feature_dim, row per sample
    std::vector<double> targets;
    std::vector<std::string> feature_names;
    std::map<std::string, std::vector<int>> feature_name_map; // original column -> encoded indices
    std::vector<int> train_indices, validation_indices, test_indices;
    std::map<std::string, ContinuousStats> continuous_stats;          // fitted on train only
    std::map<std::string, std::vector<std::string>> category_vocab;   // fitted on train only

    int feature_dim() const { return features.cols(); }

    // Column-batch views: X is feature_dim x n, y is 1 x n. Touching the test
    // partition flips the audit flag; commands check it before predicting.
    std::pair<Matrix, Matrix> train_batch() const;
    std::pair<Matrix, Matrix> validation_batch() const;
    std::pair<Matrix, Matrix> test_batch() const;
    bool test_accessed() const { return test_accessed_.load(); }

private:
    std::pair<Matrix, Matrix> batch_for(const std::vector<int>& indices) const;
    mutable std::atomic<bool> test_accessed_{false};
};

// Seeded, target-stratified 70:30 train/test split with an 80:20
// train/validation sub-split; preprocessing parameters fitted on the train
// partition only. Throws TooFewRows below 10 rows.
PreparedDataset prepare(const RawDataset& raw, std::uint64_t seed);

// Synthetic datasets used by the harness and tests.
// Two Gaussians per class on opposite diagonal corners (XOR layout), plus
// optional pure-noise columns.
RawDataset make_xor_gaussians(int n_rows, std::uint64_t seed, int noise_features = 6);
// Credit-approval style table: mixed continuous/categorical/ordinal columns
// with a mostly monotone signal, suited to small-budget end-to-end runs.
RawDataset make_credit_like(int n_rows, std::uint64_t seed);

void write_csv(const RawDataset& raw, const std::filesystem::path& csv_path);
Schema schema_of(const RawDataset& raw);

} // namespace propneat
