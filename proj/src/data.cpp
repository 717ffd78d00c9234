#include "propneat/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "propneat/errors.hpp"
#include "propneat/rng.hpp"

namespace propneat {

const char* to_string(ColumnKind kind) {
    switch (kind) {
    case ColumnKind::continuous: return "continuous";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::target: return "target";
    }
    return "continuous";
}

ColumnKind column_kind_from_string(const std::string& s) {
    if (s == "continuous") return ColumnKind::continuous;
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "ordinal") return ColumnKind::ordinal;
    if (s == "target") return ColumnKind::target;
    throw SchemaMismatch("unknown column kind: " + s);
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(trim(cell));
            cell.clear();
        } else {
            cell += ch;
        }
    }
    cells.push_back(trim(cell));
    return cells;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

} // namespace

Schema Schema::from_text(const std::string& text) {
    Schema schema;
    std::istringstream in(text);
    std::string line;
    int targets = 0;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos)
            throw SchemaMismatch("schema line missing ':': " + line);
        const std::string name = trim(line.substr(0, colon));
        const ColumnKind kind = column_kind_from_string(trim(line.substr(colon + 1)));
        if (kind == ColumnKind::target) ++targets;
        schema.columns.emplace_back(name, kind);
    }
    if (targets != 1)
        throw SchemaMismatch("schema must declare exactly one target column, found " +
                             std::to_string(targets));
    return schema;
}

Schema Schema::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read schema file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_text(ss.str());
}

std::string Schema::to_text() const {
    std::string out;
    for (const auto& [name, kind] : columns) out += name + ": " + to_string(kind) + "\n";
    return out;
}

RawDataset load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot read dataset file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset file: " + path.string());
    const std::vector<std::string> header = split_csv_line(line);

    RawDataset raw;
    std::vector<int> csv_column; // csv column index per schema column
    for (const auto& [name, kind] : schema.columns) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end())
            throw SchemaMismatch("schema column '" + name + "' missing from CSV header");
        csv_column.push_back(static_cast<int>(it - header.begin()));
        RawColumn col;
        col.name = name;
        col.kind = kind;
        raw.columns.push_back(col);
        if (kind == ColumnKind::target) raw.target_index = static_cast<int>(raw.columns.size()) - 1;
    }

    std::vector<int> bad_rows;
    int row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ++row;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            bad_rows.push_back(row);
            continue;
        }
        bool row_ok = true;
        std::vector<double> numeric(raw.columns.size(), 0.0);
        for (std::size_t i = 0; i < raw.columns.size() && row_ok; ++i) {
            const std::string& cell = cells[static_cast<std::size_t>(csv_column[i])];
            switch (raw.columns[i].kind) {
            case ColumnKind::continuous:
                row_ok = parse_double(cell, numeric[i]);
                break;
            case ColumnKind::target: {
                double v = 0.0;
                if (!parse_double(cell, v)) {
                    row_ok = false;
                } else if (v != 0.0 && v != 1.0) {
                    throw SchemaMismatch("target value is not binary at data row " +
                                         std::to_string(row) + ": " + cell);
                }
                numeric[i] = v;
                break;
            }
            case ColumnKind::categorical:
            case ColumnKind::ordinal:
                row_ok = !cell.empty();
                break;
            }
        }
        if (!row_ok) {
            bad_rows.push_back(row);
            continue;
        }
        for (std::size_t i = 0; i < raw.columns.size(); ++i) {
            RawColumn& col = raw.columns[i];
            if (col.kind == ColumnKind::continuous || col.kind == ColumnKind::target)
                col.numeric.push_back(numeric[i]);
            else
                col.labels.push_back(cells[static_cast<std::size_t>(csv_column[i])]);
        }
        ++raw.n_rows;
    }
    if (!bad_rows.empty()) {
        std::string msg = "unparseable data rows:";
        for (int r : bad_rows) msg += " " + std::to_string(r);
        throw ParseError(msg);
    }
    return raw;
}

std::pair<Matrix, Matrix> PreparedDataset::batch_for(const std::vector<int>& indices) const {
    Matrix x(features.cols(), static_cast<int>(indices.size()));
    Matrix y(1, static_cast<int>(indices.size()));
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const int row = indices[j];
        for (int f = 0; f < features.cols(); ++f) x(f, static_cast<int>(j)) = features(row, f);
        y(0, static_cast<int>(j)) = targets[static_cast<std::size_t>(row)];
    }
    return {std::move(x), std::move(y)};
}

std::pair<Matrix, Matrix> PreparedDataset::train_batch() const { return batch_for(train_indices); }
std::pair<Matrix, Matrix> PreparedDataset::validation_batch() const { return batch_for(validation_indices); }
std::pair<Matrix, Matrix> PreparedDataset::test_batch() const {
    test_accessed_.store(true);
    return batch_for(test_indices);
}

PreparedDataset prepare(const RawDataset& raw, std::uint64_t seed) {
    if (raw.n_rows < 10) throw TooFewRows("need at least 10 rows, got " + std::to_string(raw.n_rows));
    if (raw.target_index < 0) throw SchemaMismatch("dataset has no target column");

    // Stratified split: shuffle each class separately, then peel off 30% for
    // test and 20% of the remainder for validation. Splits depend only on the
    // seed and the target column.
    Rng rng(seed);
    std::vector<int> by_class[2];
    for (int r = 0; r < raw.n_rows; ++r)
        by_class[raw.target().numeric[static_cast<std::size_t>(r)] > 0.5 ? 1 : 0].push_back(r);

    PreparedDataset prepared;
    for (auto& rows : by_class) {
        rng.shuffle(rows);
        const int n_test = static_cast<int>(std::llround(0.3 * static_cast<double>(rows.size())));
        const int n_side = static_cast<int>(rows.size()) - n_test;
        const int n_val = static_cast<int>(std::llround(0.2 * static_cast<double>(n_side)));
        for (int i = 0; i < n_test; ++i) prepared.test_indices.push_back(rows[static_cast<std::size_t>(i)]);
        for (int i = n_test; i < n_test + n_val; ++i)
            prepared.validation_indices.push_back(rows[static_cast<std::size_t>(i)]);
        for (int i = n_test + n_val; i < static_cast<int>(rows.size()); ++i)
            prepared.train_indices.push_back(rows[static_cast<std::size_t>(i)]);
    }
    std::sort(prepared.train_indices.begin(), prepared.train_indices.end());
    std::sort(prepared.validation_indices.begin(), prepared.validation_indices.end());
    std::sort(prepared.test_indices.begin(), prepared.test_indices.end());

    // Fit preprocessing on the train partition only.
    for (const auto& col : raw.columns) {
        if (col.kind == ColumnKind::continuous) {
            double mean = 0.0;
            for (int r : prepared.train_indices) mean += col.numeric[static_cast<std::size_t>(r)];
            mean /= static_cast<double>(prepared.train_indices.size());
            double var = 0.0;
            for (int r : prepared.train_indices) {
                const double d = col.numeric[static_cast<std::size_t>(r)] - mean;
                var += d * d;
            }
            var /= static_cast<double>(prepared.train_indices.size());
            prepared.continuous_stats[col.name] = {mean, std::sqrt(var)};
        } else if (col.kind == ColumnKind::categorical || col.kind == ColumnKind::ordinal) {
            std::set<std::string> seen;
            for (int r : prepared.train_indices) seen.insert(col.labels[static_cast<std::size_t>(r)]);
            prepared.category_vocab[col.name] = std::vector<std::string>(seen.begin(), seen.end());
        }
    }

    // Encode: continuous -> one z-normalised column, categorical/ordinal ->
    // one-hot over the train vocabulary (unseen categories encode all-zero).
    int dim = 0;
    for (const auto& col : raw.columns) {
        if (col.kind == ColumnKind::target) continue;
        std::vector<int> indices;
        if (col.kind == ColumnKind::continuous) {
            prepared.feature_names.push_back(col.name);
            indices.push_back(dim++);
        } else {
            for (const auto& category : prepared.category_vocab.at(col.name)) {
                prepared.feature_names.push_back(col.name + "=" + category);
                indices.push_back(dim++);
            }
        }
        prepared.feature_name_map[col.name] = indices;
    }

    prepared.features = Matrix(raw.n_rows, dim);
    prepared.targets.assign(static_cast<std::size_t>(raw.n_rows), 0.0);
    for (int r = 0; r < raw.n_rows; ++r)
        prepared.targets[static_cast<std::size_t>(r)] = raw.target().numeric[static_cast<std::size_t>(r)];

    for (const auto& col : raw.columns) {
        if (col.kind == ColumnKind::target) continue;
        const std::vector<int>& indices = prepared.feature_name_map.at(col.name);
        if (col.kind == ColumnKind::continuous) {
            const ContinuousStats& stats = prepared.continuous_stats.at(col.name);
            const double divisor = std::max(stats.stddev, 1e-12);
            for (int r = 0; r < raw.n_rows; ++r)
                prepared.features(r, indices[0]) =
                    (col.numeric[static_cast<std::size_t>(r)] - stats.mean) / divisor;
        } else {
            const auto& vocab = prepared.category_vocab.at(col.name);
            for (int r = 0; r < raw.n_rows; ++r) {
                const std::string& label = col.labels[static_cast<std::size_t>(r)];
                auto it = std::find(vocab.begin(), vocab.end(), label);
                if (it != vocab.end())
                    prepared.features(r, indices[static_cast<std::size_t>(it - vocab.begin())]) = 1.0;
            }
        }
    }
    return prepared;
}

RawDataset make_xor_gaussians(int n_rows, std::uint64_t seed, int noise_features) {
    Rng rng(seed);
    RawDataset raw;
    raw.columns.resize(static_cast<std::size_t>(3 + noise_features));
    raw.columns[0] = {"x1", ColumnKind::continuous, {}, {}};
    raw.columns[1] = {"x2", ColumnKind::continuous, {}, {}};
    for (int f = 0; f < noise_features; ++f)
        raw.columns[static_cast<std::size_t>(2 + f)] = {"noise" + std::to_string(f + 1),
                                                        ColumnKind::continuous, {}, {}};
    raw.columns.back() = {"label", ColumnKind::target, {}, {}};
    raw.target_index = 2 + noise_features;
    const double kSigma = 0.55;
    for (int i = 0; i < n_rows; ++i) {
        const int label = i % 2;
        // Class 0 sits on the main diagonal, class 1 on the anti-diagonal;
        // the noise columns carry no signal.
        const int corner = rng.uniform() < 0.5 ? 1 : -1;
        const double cx = corner;
        const double cy = label == 0 ? corner : -corner;
        raw.columns[0].numeric.push_back(rng.normal(cx, kSigma));
        raw.columns[1].numeric.push_back(rng.normal(cy, kSigma));
        for (int f = 0; f < noise_features; ++f)
            raw.columns[static_cast<std::size_t>(2 + f)].numeric.push_back(rng.normal(0.0, 1.0));
        raw.columns.back().numeric.push_back(label);
        ++raw.n_rows;
    }
    return raw;
}

RawDataset make_credit_like(int n_rows, std::uint64_t seed) {
    Rng rng(seed);
    RawDataset raw;
    raw.columns.resize(8);
    raw.columns[0] = {"age", ColumnKind::continuous, {}, {}};
    raw.columns[1] = {"income", ColumnKind::continuous, {}, {}};
    raw.columns[2] = {"debt_ratio", ColumnKind::continuous, {}, {}};
    raw.columns[3] = {"years_employed", ColumnKind::continuous, {}, {}};
    raw.columns[4] = {"employment", ColumnKind::categorical, {}, {}};
    raw.columns[5] = {"housing", ColumnKind::categorical, {}, {}};
    raw.columns[6] = {"education", ColumnKind::ordinal, {}, {}};
    raw.columns[7] = {"approved", ColumnKind::target, {}, {}};
    raw.target_index = 7;

    const std::vector<std::string> employment = {"salaried", "self_employed", "unemployed"};
    const std::vector<std::string> housing = {"own", "rent", "other"};
    const std::vector<std::string> education = {"primary", "secondary", "tertiary"};

    for (int i = 0; i < n_rows; ++i) {
        const double age = rng.uniform(21.0, 70.0);
        const double income = std::exp(rng.normal(10.5, 0.5));
        const double debt = rng.uniform(0.0, 1.2);
        const double years = std::max(0.0, rng.normal((age - 21.0) * 0.4, 4.0));
        const int emp = rng.uniform() < 0.55 ? 0 : (rng.uniform() < 0.7 ? 1 : 2);
        const int house = rng.uniform_int(0, 2);
        const int edu = rng.uniform_int(0, 2);

        const double income_z = (std::log(income) - 10.5) / 0.5;
        double score = 1.6 * income_z - 2.2 * (debt - 0.6) + 0.05 * (years - 8.0) +
                       (emp == 2 ? -1.4 : (emp == 0 ? 0.4 : 0.0)) +
                       (house == 0 ? 0.4 : 0.0) + 0.45 * edu - 0.6;
        score += rng.normal(0.0, 0.9);
        const double label = score > 0.0 ? 1.0 : 0.0;

        raw.columns[0].numeric.push_back(std::round(age * 10.0) / 10.0);
        raw.columns[1].numeric.push_back(std::round(income * 100.0) / 100.0);
        raw.columns[2].numeric.push_back(std::round(debt * 1000.0) / 1000.0);
        raw.columns[3].numeric.push_back(std::round(years * 10.0) / 10.0);
        raw.columns[4].labels.push_back(employment[static_cast<std::size_t>(emp)]);
        raw.columns[5].labels.push_back(housing[static_cast<std::size_t>(house)]);
        raw.columns[6].labels.push_back(education[static_cast<std::size_t>(edu)]);
        raw.columns[7].numeric.push_back(label);
        ++raw.n_rows;
    }
    return raw;
}

void write_csv(const RawDataset& raw, const std::filesystem::path& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot write dataset file: " + csv_path.string());
    for (std::size_t i = 0; i < raw.columns.size(); ++i)
        out << (i ? "," : "") << raw.columns[i].name;
    out << "\n";
    char buf[64];
    for (int r = 0; r < raw.n_rows; ++r) {
        for (std::size_t i = 0; i < raw.columns.size(); ++i) {
            if (i) out << ",";
            const RawColumn& col = raw.columns[i];
            if (col.kind == ColumnKind::categorical || col.kind == ColumnKind::ordinal) {
                out << col.labels[static_cast<std::size_t>(r)];
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", col.numeric[static_cast<std::size_t>(r)]);
                out << buf;
            }
        }
        out << "\n";
    }
}

Schema schema_of(const RawDataset& raw) {
    Schema schema;
    for (const auto& col : raw.columns) schema.columns.emplace_back(col.name, col.kind);
    return schema;
}

} // namespace propneat
