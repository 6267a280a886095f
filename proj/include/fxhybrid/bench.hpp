#pragma once

// Experiment harness: configuration, the per-currency training grid, and the
// report writers (text table, CSV, SVG charts, tree and rule dumps).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anfis.hpp"
#include "cart.hpp"
#include "common.hpp"
#include "hybrid.hpp"
#include "mars.hpp"
#include "mlp.hpp"
#include "timeseries.hpp"

namespace fxh::bench {

enum class ModelKind { mars, cart, hybrid, mlp, anfis };

inline const std::vector<ModelKind>& all_models() {
    static const std::vector<ModelKind> v{ModelKind::mars, ModelKind::cart, ModelKind::hybrid, ModelKind::mlp,
                                          ModelKind::anfis};
    return v;
}

inline const char* model_key(ModelKind k) {
    switch (k) {
        case ModelKind::mars: return "mars";
        case ModelKind::cart: return "cart";
        case ModelKind::hybrid: return "hybrid";
        case ModelKind::mlp: return "mlp";
        case ModelKind::anfis: return "anfis";
    }
    return "?";
}

inline const char* model_label(ModelKind k) {
    switch (k) {
        case ModelKind::mars: return "MARS";
        case ModelKind::cart: return "CART";
        case ModelKind::hybrid: return "CART-MARS";
        case ModelKind::mlp: return "ANN-SCG";
        case ModelKind::anfis: return "Neuro-fuzzy";
    }
    return "?";
}

inline ModelKind parse_model(std::string_view s) {
    for (ModelKind k : all_models())
        if (s == model_key(k)) return k;
    fail("unknown model '" + std::string(s) + "' (expected mars, cart, hybrid, mlp or anfis)");
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
    std::string data_path;
    std::vector<std::string> currencies;  // empty: every series in the file
    double split_fraction = 0.7;
    std::uint64_t split_seed = 1;
    std::vector<ModelKind> models = all_models();
    std::map<ModelKind, FeatureRecipe> features{{ModelKind::mars, FeatureRecipe::mp1},
                                                {ModelKind::cart, FeatureRecipe::mp1},
                                                {ModelKind::hybrid, FeatureRecipe::mp1},
                                                {ModelKind::mlp, FeatureRecipe::mp5},
                                                {ModelKind::anfis, FeatureRecipe::mp1}};
    bool scale_target = true;

    mars::MarsConfig mars;
    cart::CartConfig cart;
    hybrid::NodeEncoding encoding = hybrid::NodeEncoding::one_hot_leaf;
    std::vector<int> mlp_hidden{14, 14};
    long mlp_epochs = 2000;
    scg::ScgConfig scg;
    anfis::AnfisConfig anfis;

    std::string output_dir = "bench_out";
    bool record_timing = true;

    void validate() const {
        require(split_fraction > 0.0 && split_fraction < 1.0, "config: split.fraction must be in (0,1)");
        require(!models.empty(), "config: at least one model must be enabled");
        require(mlp_epochs >= 1, "config: mlp.epochs must be >= 1");
        for (int h : mlp_hidden) require(h >= 1, "config: mlp.hidden sizes must be >= 1");
        mars.validate();
        cart.validate();
        scg.validate();
        anfis.validate();
    }

    bool enabled(ModelKind k) const { return std::find(models.begin(), models.end(), k) != models.end(); }
    FeatureRecipe recipe(ModelKind k) const { return features.at(k); }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    fail("config: " + key + " expects true or false, got '" + v + "'");
}

inline std::string unquote(std::string v) {
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
    return v;
}

inline std::vector<std::string> list_of(const std::string& v) {
    std::vector<std::string> out;
    for (auto& part : split_on(v, ',')) {
        std::string t = trim(part);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

}  // namespace detail

/// Flat `section.key = value` lines. `[section]` headers prefix the keys
/// that follow them; `#` starts a comment. Relative paths are resolved
/// against `base_dir`.
inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>",
                                     const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    std::string line, section;
    int lineno = 0;
    auto where = [&] { return origin + ":" + std::to_string(lineno) + ": "; };
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(where() + "unterminated section header");
            section = trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) fail(where() + "expected 'key = value'");
        std::string key = trim(std::string_view(t).substr(0, eq));
        const std::string v = detail::unquote(trim(std::string_view(t).substr(eq + 1)));
        if (!section.empty()) key = section + "." + key;
        const std::string ctx = where() + key;
        try {
            if (key == "data.path") {
                cfg.data_path = v;
            } else if (key == "data.currencies") {
                cfg.currencies = detail::list_of(v);
            } else if (key == "data.scale_target") {
                cfg.scale_target = detail::parse_bool(v, key);
            } else if (key == "split.fraction") {
                cfg.split_fraction = parse_double(v, ctx);
            } else if (key == "split.seed") {
                const long long s = parse_int(v, ctx);
                require(s >= 0, "split.seed must be >= 0");
                cfg.split_seed = std::uint64_t(s);
            } else if (key == "models.enabled") {
                cfg.models.clear();
                for (const auto& m : detail::list_of(v)) cfg.models.push_back(parse_model(m));
            } else if (key.rfind("features.", 0) == 0) {
                cfg.features[parse_model(key.substr(9))] = parse_recipe(v);
            } else if (key == "mars.max_basis") {
                cfg.mars.max_basis_functions = int(parse_int(v, ctx));
            } else if (key == "mars.max_interaction") {
                cfg.mars.max_interaction = int(parse_int(v, ctx));
            } else if (key == "mars.penalty") {
                cfg.mars.gcv_penalty = parse_double(v, ctx);
            } else if (key == "mars.pruning") {
                if (v == "gcv")
                    cfg.mars.pruning = mars::PruneCriterion::gcv;
                else if (v == "holdout")
                    cfg.mars.pruning = mars::PruneCriterion::holdout;
                else
                    fail("mars.pruning expects gcv or holdout, got '" + v + "'");
            } else if (key == "cart.min_node_size") {
                cfg.cart.min_node_size = int(parse_int(v, ctx));
            } else if (key == "cart.min_split_gain") {
                cfg.cart.min_split_gain = parse_double(v, ctx);
            } else if (key == "cart.max_depth") {
                if (v == "none" || v.empty())
                    cfg.cart.max_depth.reset();
                else
                    cfg.cart.max_depth = int(parse_int(v, ctx));
            } else if (key == "hybrid.encoding") {
                cfg.encoding = hybrid::parse_encoding(v);
            } else if (key == "mlp.hidden") {
                cfg.mlp_hidden.clear();
                for (const auto& h : detail::list_of(v)) cfg.mlp_hidden.push_back(int(parse_int(h, ctx)));
            } else if (key == "mlp.epochs") {
                cfg.mlp_epochs = long(parse_int(v, ctx));
            } else if (key == "mlp.sigma") {
                cfg.scg.sigma = parse_double(v, ctx);
            } else if (key == "mlp.lambda") {
                cfg.scg.lambda = parse_double(v, ctx);
            } else if (key == "anfis.mfs") {
                cfg.anfis.mfs_per_input = int(parse_int(v, ctx));
            } else if (key == "anfis.epochs") {
                cfg.anfis.epochs = int(parse_int(v, ctx));
            } else if (key == "anfis.rate") {
                cfg.anfis.learning_rate = parse_double(v, ctx);
            } else if (key == "anfis.order") {
                if (v == "first")
                    cfg.anfis.order = anfis::ConsequentOrder::first;
                else if (v == "zero")
                    cfg.anfis.order = anfis::ConsequentOrder::zero;
                else
                    fail("anfis.order expects first or zero, got '" + v + "'");
            } else if (key == "output.dir") {
                cfg.output_dir = v;
            } else if (key == "output.record_timing") {
                cfg.record_timing = detail::parse_bool(v, key);
            } else {
                fail("unknown key");
            }
        } catch (const Error& e) {
            const std::string msg = e.what();
            if (msg.rfind(origin, 0) == 0) throw;
            fail(where() + key + ": " + msg);
        }
    }
    require(!cfg.data_path.empty(), origin + ": data.path is required");
    if (!base_dir.empty()) {
        if (std::filesystem::path(cfg.data_path).is_relative()) cfg.data_path = (base_dir / cfg.data_path).string();
        if (std::filesystem::path(cfg.output_dir).is_relative()) cfg.output_dir = (base_dir / cfg.output_dir).string();
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        fail(origin + ": " + e.what());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open config file '" + path + "'");
    return parse_config(in, path, std::filesystem::path(path).parent_path());
}

// ---------------------------------------------------------------------------
// Fitted models with their preprocessing

struct StoredModel {
    ModelKind kind = ModelKind::mars;
    std::string currency;
    FeatureRecipe recipe = FeatureRecipe::mp1;
    std::vector<std::string> feature_names;
    ScalerParams scaler;
    mars::MarsModel mars;
    cart::CartTree cart;
    hybrid::HybridModel hybrid;
    mlp::MlpNetwork mlp;
    anfis::AnfisModel anfis;

    /// Prediction in scaled target units from scaled features.
    double predict_scaled(const Eigen::VectorXd& x) const {
        switch (kind) {
            case ModelKind::mars: return mars.predict(x);
            case ModelKind::cart: return cart.predict(x);
            case ModelKind::hybrid: return hybrid.predict(x);
            case ModelKind::mlp: return mlp.predict(x);
            case ModelKind::anfis: return anfis.predict(x);
        }
        return 0.0;
    }

    Eigen::VectorXd predict_scaled(const Dataset& scaled) const {
        Eigen::VectorXd out(scaled.rows());
        for (Eigen::Index i = 0; i < scaled.rows(); ++i)
            out(i) = predict_scaled(Eigen::VectorXd(scaled.features.row(i).transpose()));
        return out;
    }

    /// Prediction in original rate units from raw features.
    double predict_raw(const Eigen::VectorXd& x) const { return scaler.unscale_y(predict_scaled(scale_row(x, scaler))); }

    void write(std::ostream& out) const {
        out << "fxmodel " << model_key(kind) << ' ' << currency << ' ' << recipe_name(recipe) << '\n';
        scaler.write(out);
        switch (kind) {
            case ModelKind::mars: mars.write(out); break;
            case ModelKind::cart: cart.write(out, feature_names); break;
            case ModelKind::hybrid: hybrid.write(out); break;
            case ModelKind::mlp: mlp.write(out); break;
            case ModelKind::anfis: anfis.write(out); break;
        }
    }

    static StoredModel read(std::istream& in) {
        StoredModel m;
        TokenReader tr(in);
        tr.expect("fxmodel");
        m.kind = parse_model(tr.word("model kind"));
        m.currency = tr.word("currency");
        m.recipe = parse_recipe(tr.word("feature recipe"));
        m.scaler = ScalerParams::read(tr);
        switch (m.kind) {
            case ModelKind::mars: m.mars = mars::MarsModel::read(tr); break;
            case ModelKind::cart: m.cart = cart::CartTree::read(in); break;
            case ModelKind::hybrid: m.hybrid = hybrid::HybridModel::read(in); break;
            case ModelKind::mlp: m.mlp = mlp::MlpNetwork::read(tr); break;
            case ModelKind::anfis: m.anfis = anfis::AnfisModel::read(tr); break;
        }
        return m;
    }
};

inline StoredModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open model file '" + path + "'");
    try {
        return StoredModel::read(in);
    } catch (const Error& e) {
        fail(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Running the grid

struct Entry {
    std::string currency;
    ModelKind model = ModelKind::mars;
    double test_rmse = 0.0;
    double train_rmse = 0.0;
    double train_seconds = 0.0;
    std::vector<int> test_months;  // supervised row provenance, ascending
    std::vector<int> train_months;
    std::vector<double> predicted;  // scaled units, aligned with test_months
    std::vector<double> actual;
};

struct CurrencyArtifacts {
    std::string currency;
    std::vector<cart::RelativeErrorPoint> relative_error;  // empty unless CART is enabled
    std::string tree_dump;
    std::string rule_dump;
};

struct BenchReport {
    std::vector<std::string> currencies;
    std::vector<ModelKind> models;
    std::vector<Entry> entries;  // currency-major, models in configured order
    std::vector<CurrencyArtifacts> artifacts;
    std::vector<StoredModel> fitted;  // parallel to entries

    const Entry& at(const std::string& currency, ModelKind m) const {
        for (const auto& e : entries)
            if (e.currency == currency && e.model == m) return e;
        fail("report has no entry for " + currency + "/" + model_key(m));
    }
};

struct PreparedData {
    Split raw;
    ScalerParams scaler;
    Dataset train;
    Dataset test;
};

inline PreparedData prepare(const std::vector<RateSeries>& series, const std::string& currency, FeatureRecipe recipe,
                            const ExperimentConfig& cfg) {
    PreparedData p;
    const Dataset all = build_supervised(series, {currency, recipe});
    p.raw = split(all, cfg.split_fraction, cfg.split_seed);
    p.scaler = fit_scaler(p.raw.train, cfg.scale_target);
    p.train = apply_scaler(p.raw.train, p.scaler);
    p.test = apply_scaler(p.raw.test, p.scaler);
    return p;
}

/// Trains one model on prepared (scaled) data.
inline StoredModel train_model(ModelKind kind, const std::string& currency, const PreparedData& data,
                               const ExperimentConfig& cfg, CurrencyArtifacts* artifacts = nullptr) {
    StoredModel m;
    m.kind = kind;
    m.currency = currency;
    m.recipe = cfg.recipe(kind);
    m.scaler = data.scaler;
    m.feature_names = data.train.feature_names;
    switch (kind) {
        case ModelKind::mars:
            m.mars = mars::fit(data.train, cfg.mars, &data.test);
            break;
        case ModelKind::cart: {
            cart::PruneSequence seq = cart::prune_sequence(cart::grow(data.train, cfg.cart), data.train);
            const size_t k = cart::select_min_cost_index(seq, data.test);
            m.cart = seq[k].tree;
            if (artifacts) {
                artifacts->relative_error = cart::relative_error_curve(seq, data.test);
                std::ostringstream dump;
                m.cart.write(dump, m.feature_names);
                artifacts->tree_dump = dump.str();
            }
            break;
        }
        case ModelKind::hybrid:
            m.hybrid = hybrid::fit_hybrid(data.train, data.test, cfg.cart, cfg.mars, cfg.encoding);
            break;
        case ModelKind::mlp: {
            std::vector<int> sizes{int(data.train.cols())};
            sizes.insert(sizes.end(), cfg.mlp_hidden.begin(), cfg.mlp_hidden.end());
            sizes.push_back(1);
            const std::uint64_t seed = derive_seed(cfg.split_seed, currency + "/" + model_key(kind));
            m.mlp = mlp::scg_train(sizes, data.train, cfg.mlp_epochs, seed, cfg.scg).network;
            break;
        }
        case ModelKind::anfis:
            m.anfis = anfis::hybrid_train(data.train, cfg.anfis).model;
            if (artifacts) artifacts->rule_dump = m.anfis.dump_rules(m.feature_names);
            break;
    }
    return m;
}

inline std::vector<std::string> resolve_currencies(const std::vector<RateSeries>& series, const ExperimentConfig& cfg) {
    std::vector<std::string> out = cfg.currencies;
    if (out.empty())
        for (const auto& s : series) out.push_back(s.currency_code);
    for (const auto& c : out) find_series(series, c);
    return out;
}

inline BenchReport run_experiment(const std::vector<RateSeries>& series, const ExperimentConfig& cfg) {
    cfg.validate();
    BenchReport rep;
    rep.currencies = resolve_currencies(series, cfg);
    rep.models = cfg.models;
    for (const auto& cur : rep.currencies) {
        CurrencyArtifacts art;
        art.currency = cur;
        for (ModelKind kind : cfg.models) {
            try {
                const PreparedData data = prepare(series, cur, cfg.recipe(kind), cfg);
                const auto t0 = std::chrono::steady_clock::now();
                StoredModel m = train_model(kind, cur, data, cfg, &art);
                const auto t1 = std::chrono::steady_clock::now();
                Entry e;
                e.currency = cur;
                e.model = kind;
                e.train_seconds = cfg.record_timing ? std::chrono::duration<double>(t1 - t0).count() : 0.0;
                e.test_months = data.test.provenance;
                e.train_months = data.train.provenance;
                const Eigen::VectorXd pred = m.predict_scaled(data.test);
                const Eigen::VectorXd fit = m.predict_scaled(data.train);
                require(pred.allFinite() && fit.allFinite(), "non-finite predictions");
                e.predicted.assign(pred.data(), pred.data() + pred.size());
                e.actual.assign(data.test.target.data(), data.test.target.data() + data.test.rows());
                e.test_rmse = rmse(e.predicted, e.actual);
                e.train_rmse = rmse(fit, data.train.target);
                rep.entries.push_back(std::move(e));
                rep.fitted.push_back(std::move(m));
            } catch (const Error& err) {
                fail("currency " + cur + ", model " + model_key(kind) + ": " + err.what());
            }
        }
        rep.artifacts.push_back(std::move(art));
    }
    return rep;
}

inline BenchReport run_experiment(const ExperimentConfig& cfg) { return run_experiment(load_csv(cfg.data_path), cfg); }

// ---------------------------------------------------------------------------
// Writers

struct ReferenceRow {
    const char* model;
    double jpy, usd, gbp, sgd, nzd;
};

/// Published test-set RMSE values for the original five-currency study.
inline const std::vector<ReferenceRow>& published_reference() {
    static const std::vector<ReferenceRow> rows{
        {"MARS", 0.023, 0.039, 0.0478, 0.028, 0.049},
        {"CART", 0.037, 0.037, 0.063, 0.033, 0.041},
        {"CART-MARS", 0.016, 0.027, 0.035, 0.026, 0.035},
        {"ANN-SCG", 0.028, 0.0340, 0.023, 0.030, 0.021},
        {"Neuro-fuzzy", 0.026, 0.0340, 0.037, 0.029, 0.020},
    };
    return rows;
}

inline std::string pad(std::string s, size_t width, bool right = false) {
    if (s.size() >= width) return s;
    return right ? std::string(width - s.size(), ' ') + s : s + std::string(width - s.size(), ' ');
}

inline std::string emit_table(const BenchReport& rep) {
    require(!rep.entries.empty(), "emit_table: empty report");
    std::ostringstream out;
    out << "Test set RMSE (min-max scaled target)\n\n";
    out << pad("model", 13);
    for (const auto& c : rep.currencies) out << pad(c, 10, true);
    out << '\n';
    for (ModelKind m : rep.models) {
        out << pad(model_label(m), 13);
        for (const auto& c : rep.currencies) out << pad(fmt_fixed(rep.at(c, m).test_rmse, 4), 10, true);
        out << '\n';
    }
    out << "\npublished reference (AUD base, original data)\n\n";
    out << pad("model", 13);
    for (const char* c : {"JPY", "USD", "GBP", "SGD", "NZD"}) out << pad(c, 10, true);
    out << '\n';
    for (const auto& r : published_reference()) {
        out << pad(r.model, 13);
        for (double v : {r.jpy, r.usd, r.gbp, r.sgd, r.nzd}) out << pad(fmt_fixed(v, 4), 10, true);
        out << '\n';
    }
    return out.str();
}

inline std::string emit_csv(const BenchReport& rep) {
    require(!rep.entries.empty(), "emit_csv: empty report");
    std::ostringstream out;
    out << "currency,model,test_rmse,train_rmse,train_seconds\n";
    for (const auto& e : rep.entries)
        out << e.currency << ',' << model_key(e.model) << ',' << fmt_exact(e.test_rmse) << ','
            << fmt_exact(e.train_rmse) << ',' << fmt_fixed(e.train_seconds, 6) << '\n';
    return out.str();
}

namespace svg {

inline const char* color(size_t k) {
    static const char* palette[] = {"#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    return palette[k % 7];
}

struct Series {
    std::string name;
    std::vector<double> x, y;
};

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

/// Self-contained line chart; coordinates printed with fixed precision so
/// identical data gives identical bytes.
inline std::string line_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                              const std::vector<Series>& series, size_t color_offset = 0) {
    const double w = 760, h = 420, left = 70, right = 170, top = 40, bottom = 50;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    if (!(x1 > x0)) x1 = x0 + 1.0;
    if (!(y1 > y0)) y1 = y0 + 1.0;
    const double pad_y = 0.05 * (y1 - y0);
    y0 -= pad_y;
    y1 += pad_y;
    const double pw = w - left - right, ph = h - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };
    auto num = [](double v) { return fmt_fixed(v, 2); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
        << ' ' << h << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(left) << "\" y=\"22\" font-size=\"14\">" << escape(title) << "</text>\n";
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
        << "\" fill=\"none\" stroke=\"#888\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double yv = y0 + (y1 - y0) * k / 4.0, xv = x0 + (x1 - x0) * k / 4.0;
        out << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
            << fmt_general(yv, 3) << "</text>\n";
        out << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
            << fmt_general(xv, 4) << "</text>\n";
    }
    out << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(h - 12) << "\" text-anchor=\"middle\">"
        << escape(xlabel) << "</text>\n";
    out << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" transform=\"rotate(-90 16 " << num(top + ph / 2)
        << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";
    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        out << "<polyline fill=\"none\" stroke=\"" << color(k + color_offset) << "\" stroke-width=\"" << (k + color_offset == 0 ? "2" : "1.2")
            << "\" points=\"";
        for (size_t i = 0; i < s.x.size(); ++i) out << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        out << "\"/>\n";
        const double ly = top + 14 + 16 * double(k);
        out << "<line x1=\"" << num(w - right + 12) << "\" y1=\"" << num(ly - 4) << "\" x2=\"" << num(w - right + 32)
            << "\" y2=\"" << num(ly - 4) << "\" stroke=\"" << color(k + color_offset) << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << num(w - right + 38) << "\" y=\"" << num(ly) << "\">" << escape(s.name) << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace svg

/// Predicted-vs-actual chart for one currency over its test months.
inline std::string prediction_chart(const BenchReport& rep, const std::string& currency) {
    std::vector<svg::Series> series;
    bool have_actual = false;
    for (const auto& e : rep.entries) {
        if (e.currency != currency) continue;
        std::vector<double> x;
        for (int t : e.test_months) x.push_back(double(t + 1));
        if (!have_actual) {
            series.push_back({"actual", x, e.actual});
            have_actual = true;
        }
        series.push_back({model_label(e.model), x, e.predicted});
    }
    require(have_actual, "no entries for currency " + currency);
    return svg::line_chart(currency + ": one-month-ahead test predictions", "month index", "scaled rate", series);
}

inline std::string relative_error_chart(const BenchReport& rep) {
    std::vector<svg::Series> series;
    for (const auto& a : rep.artifacts) {
        if (a.relative_error.empty()) continue;
        svg::Series s{a.currency, {}, {}};
        for (auto it = a.relative_error.rbegin(); it != a.relative_error.rend(); ++it) {
            s.x.push_back(double(it->leaves));
            s.y.push_back(it->relative_error);
        }
        series.push_back(std::move(s));
    }
    require(!series.empty(), "relative error chart needs CART results");
    return svg::line_chart("CART test relative error vs tree size", "terminal nodes", "relative error", series, 1);
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) fail("cannot write '" + p.string() + "'");
    out << text;
    if (!out) fail("error writing '" + p.string() + "'");
}

/// Writes charts, dumps, table, CSV and model files; returns the paths written.
inline std::vector<std::filesystem::path> emit_all(const BenchReport& rep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) fail("cannot create output directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> written;
    auto put = [&](const std::string& name, const std::string& text) {
        write_text(dir / name, text);
        written.push_back(dir / name);
    };
    put("table.txt", emit_table(rep));
    put("report.csv", emit_csv(rep));
    for (const auto& c : rep.currencies) put("chart_" + c + ".svg", prediction_chart(rep, c));
    bool have_curve = false;
    for (const auto& a : rep.artifacts) {
        have_curve = have_curve || !a.relative_error.empty();
        if (!a.tree_dump.empty()) put("tree_" + a.currency + ".txt", a.tree_dump);
        if (!a.rule_dump.empty()) put("rules_" + a.currency + ".txt", a.rule_dump);
    }
    if (have_curve) put("relative_error.svg", relative_error_chart(rep));
    for (size_t k = 0; k < rep.fitted.size(); ++k) {
        std::ostringstream m;
        rep.fitted[k].write(m);
        put(rep.entries[k].currency + "_" + model_key(rep.entries[k].model) + ".model", m.str());
    }
    return written;
}

}  // namespace fxh::bench
