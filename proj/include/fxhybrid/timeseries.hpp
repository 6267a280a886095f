#pragma once

// Monthly rate series ingestion, one-step-ahead supervised datasets,
// seeded train/test splitting, min-max scaling and the RMSE metric.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace fxh {

struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    static YearMonth parse(std::string_view text) {
        const std::string s = trim(text);
        if (s.size() != 7 || s[4] != '-') fail("date '" + s + "' is not in YYYY-MM form");
        for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u})
            if (s[i] < '0' || s[i] > '9') fail("date '" + s + "' is not in YYYY-MM form");
        YearMonth ym{std::stoi(s.substr(0, 4)), std::stoi(s.substr(5, 2))};
        if (ym.month < 1 || ym.month > 12) fail("date '" + s + "' has month outside 1..12");
        return ym;
    }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
        return buf;
    }

    YearMonth plus(int months) const {
        int idx = ordinal() + months;
        return {idx / 12, idx % 12 + 1};
    }

    int ordinal() const { return year * 12 + (month - 1); }

    friend bool operator==(const YearMonth&, const YearMonth&) = default;
};

/// A named monthly rate sequence; contiguous, non-empty, strictly positive.
struct RateSeries {
    std::string currency_code;
    YearMonth start_month;
    std::vector<double> values;

    void validate() const {
        require(!values.empty(), "series '" + currency_code + "' is empty");
        for (size_t i = 0; i < values.size(); ++i)
            require(std::isfinite(values[i]) && values[i] > 0.0,
                    "series '" + currency_code + "' has a non-positive rate at " + start_month.plus(int(i)).str());
    }

    YearMonth month_at(size_t i) const { return start_month.plus(static_cast<int>(i)); }
};

/// Supervised regression table. provenance, when non-empty, holds the
/// series index of the month each row's features were drawn from.
struct Dataset {
    std::vector<std::string> feature_names;
    std::string target_name = "target";
    Eigen::MatrixXd features;  // rows x feature_names.size()
    Eigen::VectorXd target;
    std::vector<int> provenance;

    Eigen::Index rows() const { return features.rows(); }
    Eigen::Index cols() const { return features.cols(); }
    bool empty() const { return features.rows() == 0; }

    void validate() const {
        require(features.cols() == static_cast<Eigen::Index>(feature_names.size()),
                "dataset feature matrix width does not match feature names");
        require(features.rows() == target.size(), "dataset feature rows do not match target length");
        require(provenance.empty() || provenance.size() == static_cast<size_t>(target.size()),
                "dataset provenance must have one entry per row");
    }

    Dataset subset(std::span<const int> idx) const {
        Dataset out;
        out.feature_names = feature_names;
        out.target_name = target_name;
        out.features.resize(static_cast<Eigen::Index>(idx.size()), cols());
        out.target.resize(static_cast<Eigen::Index>(idx.size()));
        for (size_t i = 0; i < idx.size(); ++i) {
            out.features.row(Eigen::Index(i)) = features.row(idx[i]);
            out.target(Eigen::Index(i)) = target(idx[i]);
            if (!provenance.empty()) out.provenance.push_back(provenance[size_t(idx[i])]);
        }
        return out;
    }

    static Dataset from_rows(std::vector<std::string> names, const std::vector<std::vector<double>>& xs,
                             const std::vector<double>& ys) {
        require(xs.size() == ys.size(), "row count mismatch between features and targets");
        Dataset d;
        d.feature_names = std::move(names);
        d.features.resize(Eigen::Index(xs.size()), Eigen::Index(d.feature_names.size()));
        d.target.resize(Eigen::Index(ys.size()));
        for (size_t i = 0; i < xs.size(); ++i) {
            require(xs[i].size() == d.feature_names.size(), "row " + std::to_string(i) + " has wrong width");
            for (size_t j = 0; j < xs[i].size(); ++j) d.features(Eigen::Index(i), Eigen::Index(j)) = xs[i][j];
            d.target(Eigen::Index(i)) = ys[i];
        }
        return d;
    }
};

// ---------------------------------------------------------------------------
// CSV ingestion

inline std::vector<RateSeries> read_csv(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    if (trim(line).empty()) fail(origin + ": empty file");
    header = split_on(trim(line), ',');
    for (auto& h : header) h = trim(h);
    if (header.size() < 2 || header[0] != "date")
        fail(origin + ": header must be 'date,<code1>,...'");

    std::vector<RateSeries> out(header.size() - 1);
    for (size_t c = 1; c < header.size(); ++c) {
        require(!header[c].empty(), origin + ": empty currency code in header");
        out[c - 1].currency_code = header[c];
    }

    std::optional<YearMonth> prev;
    size_t data_row = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        ++data_row;
        const std::string where = origin + ": row " + std::to_string(line_no);
        auto fields = split_on(trim(line), ',');
        if (fields.size() != header.size())
            fail(where + ": malformed row (expected " + std::to_string(header.size()) + " fields, got " +
                 std::to_string(fields.size()) + ")");
        YearMonth ym;
        try {
            ym = YearMonth::parse(fields[0]);
        } catch (const Error& e) {
            fail(where + ": " + e.what());
        }
        if (prev && ym.ordinal() != prev->ordinal() + 1)
            fail(where + ": non-consecutive months (" + prev->str() + " then " + ym.str() + ")");
        if (!prev)
            for (auto& s : out) s.start_month = ym;
        prev = ym;
        for (size_t c = 1; c < fields.size(); ++c) {
            double v = parse_double(fields[c], where);
            if (!std::isfinite(v) || v <= 0.0) fail(where + ": rate must be positive, got '" + trim(fields[c]) + "'");
            out[c - 1].values.push_back(v);
        }
    }
    if (data_row == 0) fail(origin + ": empty file (no data rows)");
    return out;
}

inline std::vector<RateSeries> load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open data file '" + path + "'");
    return read_csv(in, path);
}

inline void write_csv(std::ostream& out, const std::vector<RateSeries>& set) {
    require(!set.empty(), "no series to write");
    const size_t n = set.front().values.size();
    for (const auto& s : set) {
        s.validate();
        require(s.values.size() == n && s.start_month == set.front().start_month,
                "series must share start month and length");
    }
    out << "date";
    for (const auto& s : set) out << ',' << s.currency_code;
    out << '\n';
    for (size_t i = 0; i < n; ++i) {
        out << set.front().month_at(i).str();
        for (const auto& s : set) out << ',' << fmt_exact(s.values[i]);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Supervised construction

/// "mp1" = (month, previous target rate); "mp5" = (month, previous rate of every series).
enum class FeatureRecipe { mp1, mp5 };

inline FeatureRecipe parse_recipe(std::string_view s) {
    if (s == "mp1") return FeatureRecipe::mp1;
    if (s == "mp5") return FeatureRecipe::mp5;
    fail("unknown feature recipe '" + std::string(s) + "' (expected mp1 or mp5)");
}

inline const char* recipe_name(FeatureRecipe r) { return r == FeatureRecipe::mp1 ? "mp1" : "mp5"; }

struct FeatureSpec {
    std::string target_currency;
    FeatureRecipe recipe = FeatureRecipe::mp1;
};

inline const RateSeries& find_series(const std::vector<RateSeries>& set, const std::string& code) {
    for (const auto& s : set)
        if (s.currency_code == code) return s;
    fail("unknown currency '" + code + "'");
}

/// Row t (0-based) uses month index t+1 and the rate(s) at month t; its target
/// is the target currency's rate at month t+1.
inline Dataset build_supervised(const std::vector<RateSeries>& set, const FeatureSpec& spec) {
    const RateSeries& tgt = find_series(set, spec.target_currency);
    const size_t len = tgt.values.size();
    require(len >= 2, "series '" + tgt.currency_code + "' needs at least 2 months");
    std::vector<const RateSeries*> inputs;
    if (spec.recipe == FeatureRecipe::mp1) {
        inputs.push_back(&tgt);
    } else {
        for (const auto& s : set) {
            require(s.values.size() == len, "all series must have the same length");
            inputs.push_back(&s);
        }
    }

    Dataset d;
    d.feature_names.push_back("month");
    for (auto* s : inputs) d.feature_names.push_back(s->currency_code + "_prev");
    d.target_name = tgt.currency_code;
    const auto rows = static_cast<Eigen::Index>(len - 1);
    d.features.resize(rows, static_cast<Eigen::Index>(d.feature_names.size()));
    d.target.resize(rows);
    for (Eigen::Index t = 0; t < rows; ++t) {
        d.features(t, 0) = static_cast<double>(t + 1);
        for (size_t j = 0; j < inputs.size(); ++j)
            d.features(t, Eigen::Index(j + 1)) = inputs[j]->values[size_t(t)];
        d.target(t) = tgt.values[size_t(t) + 1];
        d.provenance.push_back(static_cast<int>(t));
    }
    return d;
}

// ---------------------------------------------------------------------------
// Split

struct Split {
    Dataset train;
    Dataset test;
    std::vector<int> train_rows;  // indices into the source dataset, ascending
    std::vector<int> test_rows;
};

inline size_t train_count(size_t n, double fraction) {
    return static_cast<size_t>(std::llround(fraction * static_cast<double>(n)));
}

/// Seeded uniform permutation, prefix taken as training rows. Each side keeps
/// the source row order.
inline Split split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    require(train_fraction > 0.0 && train_fraction < 1.0, "train fraction must lie in (0,1)");
    require(!ds.empty(), "cannot split an empty dataset");
    const size_t n = static_cast<size_t>(ds.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    const size_t k = train_count(n, train_fraction);
    Split s;
    s.train_rows.assign(perm.begin(), perm.begin() + std::ptrdiff_t(k));
    s.test_rows.assign(perm.begin() + std::ptrdiff_t(k), perm.end());
    std::sort(s.train_rows.begin(), s.train_rows.end());
    std::sort(s.test_rows.begin(), s.test_rows.end());
    s.train = ds.subset(s.train_rows);
    s.test = ds.subset(s.test_rows);
    return s;
}

// ---------------------------------------------------------------------------
// Min-max scaling, fitted on training data only

struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;
    bool scale_target = true;
    double target_min = 0.0;
    double target_max = 1.0;

    static bool degenerate(double lo, double hi) { return !(hi > lo); }

    double scale_feature(size_t j, double v) const {
        return degenerate(min[j], max[j]) ? v : (v - min[j]) / (max[j] - min[j]);
    }
    double unscale_feature(size_t j, double v) const {
        return degenerate(min[j], max[j]) ? v : v * (max[j] - min[j]) + min[j];
    }
    double scale_y(double v) const {
        return !scale_target || degenerate(target_min, target_max) ? v : (v - target_min) / (target_max - target_min);
    }
    double unscale_y(double v) const {
        return !scale_target || degenerate(target_min, target_max) ? v : v * (target_max - target_min) + target_min;
    }

    void write(std::ostream& out) const {
        out << "scaler " << min.size() << ' ' << (scale_target ? 1 : 0) << ' ' << fmt_exact(target_min) << ' '
            << fmt_exact(target_max) << '\n';
        for (size_t j = 0; j < min.size(); ++j) out << fmt_exact(min[j]) << ' ' << fmt_exact(max[j]) << '\n';
    }

    static ScalerParams read(TokenReader& in) {
        ScalerParams p;
        in.expect("scaler");
        const size_t n = in.count("scaler width");
        p.scale_target = in.integer("scale flag") != 0;
        p.target_min = in.real("target min");
        p.target_max = in.real("target max");
        for (size_t j = 0; j < n; ++j) {
            p.min.push_back(in.real("column min"));
            p.max.push_back(in.real("column max"));
        }
        return p;
    }
};

inline ScalerParams fit_scaler(const Dataset& train, bool scale_target = true) {
    require(!train.empty(), "cannot fit a scaler on an empty dataset");
    ScalerParams p;
    for (Eigen::Index j = 0; j < train.cols(); ++j) {
        p.min.push_back(train.features.col(j).minCoeff());
        p.max.push_back(train.features.col(j).maxCoeff());
    }
    p.scale_target = scale_target;
    p.target_min = train.target.minCoeff();
    p.target_max = train.target.maxCoeff();
    return p;
}

inline Dataset apply_scaler(const Dataset& ds, const ScalerParams& p) {
    require(p.min.size() == static_cast<size_t>(ds.cols()), "scaler width does not match dataset");
    Dataset out = ds;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.cols(); ++j) out.features(i, j) = p.scale_feature(size_t(j), ds.features(i, j));
        out.target(i) = p.scale_y(ds.target(i));
    }
    return out;
}

inline Dataset invert_scaler(const Dataset& ds, const ScalerParams& p) {
    require(p.min.size() == static_cast<size_t>(ds.cols()), "scaler width does not match dataset");
    Dataset out = ds;
    for (Eigen::Index i = 0; i < ds.rows(); ++i) {
        for (Eigen::Index j = 0; j < ds.cols(); ++j)
            out.features(i, j) = p.unscale_feature(size_t(j), ds.features(i, j));
        out.target(i) = p.unscale_y(ds.target(i));
    }
    return out;
}

inline Eigen::VectorXd scale_row(const Eigen::VectorXd& x, const ScalerParams& p) {
    require(p.min.size() == static_cast<size_t>(x.size()), "scaler width does not match input");
    Eigen::VectorXd out(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) out(j) = p.scale_feature(size_t(j), x(j));
    return out;
}

// ---------------------------------------------------------------------------

inline double rmse(std::span<const double> predicted, std::span<const double> actual) {
    require(predicted.size() == actual.size(), "rmse: length mismatch");
    require(!predicted.empty(), "rmse: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted[i] - actual[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(predicted.size()));
}

inline double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& actual) {
    return rmse(std::span<const double>(predicted.data(), size_t(predicted.size())),
                std::span<const double>(actual.data(), size_t(actual.size())));
}

}  // namespace fxh
