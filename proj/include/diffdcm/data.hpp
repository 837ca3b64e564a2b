#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "diffdcm/error.hpp"
#include "diffdcm/kernels.hpp"
#include "diffdcm/matrix.hpp"
#include "diffdcm/normalization.hpp"
#include "diffdcm/rng.hpp"

namespace diffdcm {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct Dataset {
    Matrix features;                        // N x n
    std::vector<int> labels;                // 1-based choice per row
    std::vector<std::string> feature_names; // n
    std::vector<std::string> alt_names;     // l
    std::vector<FeatureScale> normalization; // empty = raw data

    std::size_t num_samples() const { return features.rows(); }
    std::size_t num_features() const { return features.cols(); }
    std::size_t num_alternatives() const { return alt_names.size(); }
    bool is_normalized() const { return !normalization.empty(); }

    void validate() const {
        if (num_samples() == 0) throw invalid_input_error("Dataset: empty (N = 0)");
        if (labels.size() != num_samples())
            throw invalid_input_error("Dataset: label count does not match sample count");
        if (feature_names.size() != num_features())
            throw invalid_input_error("Dataset: feature name count does not match columns");
        const int l = static_cast<int>(num_alternatives());
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] < 1 || labels[i] > l)
                throw invalid_input_error("Dataset: label " + std::to_string(labels[i]) +
                                          " at row " + std::to_string(i) +
                                          " outside 1.." + std::to_string(l));
    }
};

inline std::vector<std::string> default_alt_names(int l) {
    std::vector<std::string> names;
    for (int k = 1; k <= l; ++k) names.push_back(std::to_string(k));
    return names;
}

// ---------------------------------------------------------------------------
// Normalisation
// ---------------------------------------------------------------------------

// Per-feature min-max onto [0,10] with the epsilon lift. Constant columns map
// to 5.0; a warning line is appended per such column when `warnings` is given.
inline Dataset normalize(const Dataset& ds, std::vector<std::string>* warnings = nullptr,
                         double epsilon = kDefaultEpsilon) {
    ds.validate();
    Dataset out = ds;
    out.normalization.resize(ds.num_features());
    for (std::size_t j = 0; j < ds.num_features(); ++j) {
        double lo = ds.features(0, j), hi = ds.features(0, j);
        for (std::size_t i = 1; i < ds.num_samples(); ++i) {
            lo = std::min(lo, ds.features(i, j));
            hi = std::max(hi, ds.features(i, j));
        }
        FeatureScale sc{lo, hi, epsilon};
        if (hi <= lo && warnings)
            warnings->push_back("feature '" + ds.feature_names[j] +
                                "' is constant; normalising to midpoint 5.0");
        out.normalization[j] = sc;
        for (std::size_t i = 0; i < ds.num_samples(); ++i)
            out.features(i, j) = sc.apply(ds.features(i, j));
    }
    return out;
}

// Apply an existing record (e.g. the training-set record to a test set).
// Values mapping below epsilon are lifted; values above 10 are kept as-is.
inline Dataset apply_normalization(const Dataset& ds, const std::vector<FeatureScale>& scales) {
    ds.validate();
    if (scales.size() != ds.num_features())
        throw invalid_input_error("apply_normalization: record has " +
                                  std::to_string(scales.size()) + " features, dataset has " +
                                  std::to_string(ds.num_features()));
    Dataset out = ds;
    out.normalization = scales;
    for (std::size_t j = 0; j < ds.num_features(); ++j)
        for (std::size_t i = 0; i < ds.num_samples(); ++i)
            out.features(i, j) = scales[j].apply(ds.features(i, j));
    return out;
}

inline std::vector<double> denormalize_row(const std::vector<double>& scaled,
                                           const std::vector<FeatureScale>& scales) {
    if (scaled.size() != scales.size())
        throw invalid_input_error("denormalize_row: length mismatch");
    std::vector<double> raw(scaled.size());
    for (std::size_t j = 0; j < scaled.size(); ++j) raw[j] = scales[j].invert(scaled[j]);
    return raw;
}

// ---------------------------------------------------------------------------
// Train/test split
// ---------------------------------------------------------------------------

inline Dataset select_rows(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.alt_names = ds.alt_names;
    out.normalization = ds.normalization;
    out.features = Matrix(rows.size(), ds.num_features());
    out.labels.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < ds.num_features(); ++j)
            out.features(i, j) = ds.features(rows[i], j);
        out.labels[i] = ds.labels[rows[i]];
    }
    return out;
}

// Seeded shuffle, then the first `n_train` rows become the training set and
// the next `n_test` the test set.
inline std::pair<Dataset, Dataset> train_test_split_counts(const Dataset& ds,
                                                           std::size_t n_train,
                                                           std::size_t n_test,
                                                           std::uint64_t seed) {
    ds.validate();
    if (n_train == 0 || n_test == 0 || n_train + n_test > ds.num_samples())
        throw invalid_input_error("train_test_split: requested " + std::to_string(n_train) +
                                  "+" + std::to_string(n_test) + " from N=" +
                                  std::to_string(ds.num_samples()));
    Rng rng(seed);
    std::vector<std::size_t> perm = rng.permutation(ds.num_samples());
    std::vector<std::size_t> tr(perm.begin(), perm.begin() + n_train);
    std::vector<std::size_t> te(perm.begin() + n_train, perm.begin() + n_train + n_test);
    return {select_rows(ds, tr), select_rows(ds, te)};
}

inline std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double train_fraction,
                                                    std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw invalid_input_error("train_test_split: fraction must be in (0,1)");
    const std::size_t n_train =
        static_cast<std::size_t>(std::floor(ds.num_samples() * train_fraction));
    if (n_train == 0 || n_train >= ds.num_samples())
        throw invalid_input_error("train_test_split: degenerate split sizes");
    return train_test_split_counts(ds, n_train, ds.num_samples() - n_train, seed);
}

// ---------------------------------------------------------------------------
// Synthetic generators
// ---------------------------------------------------------------------------

enum class SynthKind { linear, dummy, nonlinear, logical };

inline const char* to_string(SynthKind k) {
    switch (k) {
        case SynthKind::linear: return "linear";
        case SynthKind::dummy: return "dummy";
        case SynthKind::nonlinear: return "nonlinear";
        case SynthKind::logical: return "logical";
    }
    return "?";
}

inline std::optional<SynthKind> synth_kind_from_string(const std::string& s) {
    if (s == "linear") return SynthKind::linear;
    if (s == "dummy") return SynthKind::dummy;
    if (s == "nonlinear") return SynthKind::nonlinear;
    if (s == "logical") return SynthKind::logical;
    return std::nullopt;
}

struct SyntheticSpec {
    SynthKind kind = SynthKind::linear;
    std::size_t n_train = 10000;
    std::size_t n_test = 1000;
    std::uint64_t seed = 0;
};

// Ground-truth utilities of the generating processes. These double as the
// oracle models the estimated utilities are compared against.
inline std::vector<double> linear_utilities(double x1, double x2) {
    return {2.0 * x1 - 1.0 * x2, -1.0 * x1 + 2.0 * x2, 1.0 * x1 + 1.0 * x2 - 2.0};
}

inline std::vector<double> dummy_utilities(double x1, double x2, double x3) {
    return {3.0 * x1 - 1.0 * x2, -1.0 * x1 + 3.0 * x2, 1.5 * x1 + 1.5 * x2 + 3.0 * x3};
}

inline std::vector<double> nonlinear_utilities(double x1, double x2) {
    return {2.0 * x1 * x1 - 1.0 * x1 * x2 - 1.0 * x2 * x2,
            -1.0 * x1 * x1 - 1.0 * x1 * x2 + 2.0 * x2 * x2,
            -0.5 * x1 * x1 + 2.5 * x1 * x2 - 0.5 * x2 * x2 - 1.0};
}

// Quadrant rules; both conditions use >= on the 5.0 boundary.
inline int logical_choice(double x1, double x2) {
    if (x1 >= 5.0 && x2 >= 5.0) return 1;
    if (x1 < 5.0 && x2 >= 5.0) return 2;
    if (x1 < 5.0 && x2 < 5.0) return 3;
    return 4;
}

// Ground-truth utilities for a given kind (logical has none).
inline std::vector<double> ground_truth_utilities(SynthKind kind, const std::vector<double>& x) {
    switch (kind) {
        case SynthKind::linear: return linear_utilities(x[0], x[1]);
        case SynthKind::dummy: return dummy_utilities(x[0], x[1], x[2]);
        case SynthKind::nonlinear: return nonlinear_utilities(x[0], x[1]);
        case SynthKind::logical:
            throw invalid_input_error("logical data has no ground-truth utilities");
    }
    return {};
}

// Oracle prediction: argmax of the ground-truth utilities (for logical, the
// rule itself). Returns a 1-based choice.
inline int ground_truth_choice(SynthKind kind, const std::vector<double>& x) {
    if (kind == SynthKind::logical) return logical_choice(x[0], x[1]);
    std::vector<double> v = ground_truth_utilities(kind, x);
    return static_cast<int>(argmax_lowest(v)) + 1;
}

namespace detail {

inline Dataset synth_block(SynthKind kind, std::size_t count, Rng& rng) {
    const bool has_dummy = (kind == SynthKind::dummy);
    const std::size_t n = has_dummy ? 3 : 2;
    Dataset ds;
    ds.feature_names = has_dummy ? std::vector<std::string>{"x1", "x2", "x3"}
                                 : std::vector<std::string>{"x1", "x2"};
    ds.alt_names = default_alt_names(kind == SynthKind::logical ? 4 : 3);
    ds.features = Matrix(count, n);
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        const double x1 = rng.uniform(0.0, 10.0);
        const double x2 = rng.uniform(0.0, 10.0);
        ds.features(i, 0) = x1;
        ds.features(i, 1) = x2;
        if (kind == SynthKind::logical) {
            ds.labels[i] = logical_choice(x1, x2);
            continue;
        }
        std::vector<double> x{x1, x2};
        if (has_dummy) {
            const double x3 = rng.bernoulli(0.7) ? 10.0 : 0.0;
            ds.features(i, 2) = x3;
            x.push_back(x3);
        }
        std::vector<double> p = stable_softmax(ground_truth_utilities(kind, x));
        ds.labels[i] = static_cast<int>(rng.categorical(p)) + 1;
    }
    return ds;
}

} // namespace detail

// Draws the training block first, then the test block, from one seeded
// stream; identical spec implies bit-identical datasets.
inline std::pair<Dataset, Dataset> synthesize(const SyntheticSpec& spec) {
    if (spec.n_train < 1 || spec.n_test < 1)
        throw invalid_input_error("synthesize: sample counts must be >= 1");
    Rng rng(spec.seed);
    Dataset train = detail::synth_block(spec.kind, spec.n_train, rng);
    Dataset test = detail::synth_block(spec.kind, spec.n_test, rng);
    return {train, test};
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, delim)) out.push_back(cell);
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

inline double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    if (cell.empty())
        throw parse_error("missing cell at data row " + std::to_string(row) + ", column '" +
                          col + "'");
    const char* begin = cell.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    if (end == begin || (end && *end != '\0') || std::isnan(v))
        throw parse_error("unparseable value '" + cell + "' at data row " +
                          std::to_string(row) + ", column '" + col + "'");
    return v;
}

} // namespace detail

// Generic numeric table (used for the Swissmetro raw file).
struct Table {
    std::vector<std::string> columns;
    Matrix values; // rows x columns

    std::size_t column_index(const std::string& name) const {
        for (std::size_t j = 0; j < columns.size(); ++j)
            if (columns[j] == name) return j;
        throw config_error("unknown column '" + name + "'");
    }
    bool has_column(const std::string& name) const {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }
};

// Reads a delimited numeric file with a header row. Delimiter is a tab when
// the header contains one, otherwise a comma.
inline Table load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw parse_error("'" + path + "': empty file");
    header = detail::strip_cr(header);
    const char delim = header.find('\t') != std::string::npos ? '\t' : ',';
    Table t;
    t.columns = detail::split_line(header, delim);
    if (t.columns.empty()) throw parse_error("'" + path + "': no header columns");

    std::vector<double> data;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        line = detail::strip_cr(line);
        if (line.empty()) continue;
        auto cells = detail::split_line(line, delim);
        if (cells.size() != t.columns.size())
            throw parse_error("'" + path + "': data row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(t.columns.size()));
        for (std::size_t j = 0; j < cells.size(); ++j)
            data.push_back(detail::parse_cell(cells[j], row, t.columns[j]));
        ++row;
    }
    t.values = Matrix::from_rows(row, t.columns.size(), std::move(data));
    return t;
}

// Loads a (feature..., choice) CSV. All non-label columns become features in
// header order; the label column must hold integers >= 1.
inline Dataset load_csv(const std::string& path, const std::string& label_column = "choice") {
    Table t = load_table(path);
    if (!t.has_column(label_column))
        throw parse_error("'" + path + "': expected label column '" + label_column + "'");
    const std::size_t label_idx = t.column_index(label_column);

    Dataset ds;
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        if (j != label_idx) ds.feature_names.push_back(t.columns[j]);
    const std::size_t n = ds.feature_names.size();
    if (n == 0) throw parse_error("'" + path + "': no feature columns");
    ds.features = Matrix(t.values.rows(), n);
    ds.labels.resize(t.values.rows());
    int max_label = 0;
    for (std::size_t i = 0; i < t.values.rows(); ++i) {
        std::size_t jj = 0;
        for (std::size_t j = 0; j < t.columns.size(); ++j) {
            if (j == label_idx) continue;
            ds.features(i, jj++) = t.values(i, j);
        }
        const double raw = t.values(i, label_idx);
        if (raw != std::floor(raw) || raw < 1.0)
            throw parse_error("'" + path + "': label at data row " + std::to_string(i) +
                              " is not an integer >= 1");
        ds.labels[i] = static_cast<int>(raw);
        max_label = std::max(max_label, ds.labels[i]);
    }
    ds.alt_names = default_alt_names(max_label);
    ds.validate();
    return ds;
}

// Writes features plus the label column. %.17g so a reload is bit-exact.
inline void save_csv(const Dataset& ds, const std::string& path,
                     const std::string& label_column = "choice") {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write '" + path + "'");
    for (const auto& name : ds.feature_names) out << name << ',';
    out << label_column << '\n';
    char buf[32];
    for (std::size_t i = 0; i < ds.num_samples(); ++i) {
        for (std::size_t j = 0; j < ds.num_features(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.features(i, j));
            out << buf << ',';
        }
        out << ds.labels[i] << '\n';
    }
    if (!out) throw io_error("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Swissmetro-style screening
// ---------------------------------------------------------------------------

struct FilterPredicate {
    std::string column;
    std::string op; // ==, !=, >, >=, <, <=
    double value = 0.0;

    bool eval(double v) const {
        if (op == "==") return v == value;
        if (op == "!=") return v != value;
        if (op == ">") return v > value;
        if (op == ">=") return v >= value;
        if (op == "<") return v < value;
        if (op == "<=") return v <= value;
        throw config_error("unknown predicate op '" + op + "'");
    }
};

struct ScreenConfig {
    std::vector<FilterPredicate> predicates;
    // Drop rows whose chosen mode has a non-positive travel time or cost.
    // On by default; turned off when an explicit predicate list is supplied.
    bool require_positive_chosen_time_cost = true;
};

// Default screening: drop CHOICE=0, drop the unknown AGE class (code 6), drop
// rows whose chosen mode has non-positive time or cost. The retained count is
// reported by callers as a diagnostic, never asserted.
inline ScreenConfig default_swissmetro_screen() {
    ScreenConfig cfg;
    cfg.predicates = {{"CHOICE", "!=", 0.0}, {"AGE", "!=", 6.0}};
    cfg.require_positive_chosen_time_cost = true;
    return cfg;
}

// Raw column -> model feature name, in model feature order.
inline std::vector<std::pair<std::string, std::string>> swissmetro_feature_map() {
    return {{"TRAIN_TT", "T_train"}, {"TRAIN_CO", "C_train"}, {"TRAIN_HE", "Freq_train"},
            {"SM_TT", "T_SM"},       {"SM_CO", "C_SM"},       {"SM_HE", "Freq_SM"},
            {"SM_SEATS", "Seats_SM"}, {"CAR_TT", "T_car"},    {"CAR_CO", "C_car"},
            {"AGE", "Age"},          {"GA", "GA"},            {"LUGGAGE", "Luggage"}};
}

struct ScreenResult {
    Dataset dataset; // raw (unnormalised) features
    std::size_t rows_in = 0;
    std::size_t rows_retained = 0;
};

inline ScreenResult swissmetro_screen(const Table& table, const ScreenConfig& cfg) {
    std::vector<std::size_t> pred_idx;
    for (const auto& p : cfg.predicates) pred_idx.push_back(table.column_index(p.column));

    const std::size_t choice_idx = table.column_index("CHOICE");
    std::size_t tt_idx[3] = {0, 0, 0}, co_idx[3] = {0, 0, 0};
    if (cfg.require_positive_chosen_time_cost) {
        tt_idx[0] = table.column_index("TRAIN_TT");
        co_idx[0] = table.column_index("TRAIN_CO");
        tt_idx[1] = table.column_index("SM_TT");
        co_idx[1] = table.column_index("SM_CO");
        tt_idx[2] = table.column_index("CAR_TT");
        co_idx[2] = table.column_index("CAR_CO");
    }

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < table.values.rows(); ++i) {
        bool ok = true;
        for (std::size_t q = 0; q < cfg.predicates.size(); ++q) {
            if (!cfg.predicates[q].eval(table.values(i, pred_idx[q]))) {
                ok = false;
                break;
            }
        }
        if (ok && cfg.require_positive_chosen_time_cost) {
            const int choice = static_cast<int>(table.values(i, choice_idx));
            if (choice >= 1 && choice <= 3) {
                const double tt = table.values(i, tt_idx[choice - 1]);
                const double co = table.values(i, co_idx[choice - 1]);
                if (!(tt > 0.0 && co > 0.0)) ok = false;
            }
        }
        if (ok) keep.push_back(i);
    }

    const auto fmap = swissmetro_feature_map();
    std::vector<std::size_t> feat_idx;
    ScreenResult res;
    res.rows_in = table.values.rows();
    res.rows_retained = keep.size();
    Dataset& ds = res.dataset;
    for (const auto& [col, feat] : fmap) {
        feat_idx.push_back(table.column_index(col));
        ds.feature_names.push_back(feat);
    }
    ds.alt_names = {"train", "SM", "car"};
    ds.features = Matrix(keep.size(), fmap.size());
    ds.labels.resize(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        for (std::size_t j = 0; j < fmap.size(); ++j)
            ds.features(r, j) = table.values(keep[r], feat_idx[j]);
        ds.labels[r] = static_cast<int>(table.values(keep[r], choice_idx));
    }
    return res;
}

} // namespace diffdcm
