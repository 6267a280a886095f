#pragma once

// Takagi-Sugeno ANFIS with Gaussian memberships on a full rule grid.
//
// Training alternates two halves per epoch: a batch least-squares solve for
// the consequent coefficients with premises fixed, then one gradient-descent
// step on the premise centres and widths with consequents fixed.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "linalg.hpp"
#include "timeseries.hpp"

namespace fxh::anfis {

inline constexpr double kMinWidth = 1e-6;

/// exp(-(x-c)^2 / (2 s^2))
inline double gaussian_mf(double x, double c, double s) {
    require(s > 0.0, "anfis: membership width must be > 0");
    const double d = (x - c) / s;
    return std::exp(-0.5 * d * d);
}

struct MembershipFunction {
    double center = 0.0;
    double width = 1.0;
};

enum class ConsequentOrder { first, zero };

struct AnfisConfig {
    int mfs_per_input = 4;
    int epochs = 30;
    double learning_rate = 0.01;
    int outputs = 1;
    ConsequentOrder order = ConsequentOrder::first;

    void validate() const {
        require(mfs_per_input >= 2, "anfis: mfs_per_input must be >= 2");
        require(epochs >= 1, "anfis: epochs must be >= 1");
        require(learning_rate >= 0.0, "anfis: learning rate must be >= 0");
        require(outputs >= 1, "anfis: outputs must be >= 1");
    }
};

struct Strengths {
    Eigen::VectorXd raw;
    Eigen::VectorXd normalized;
    Eigen::VectorXd log_raw;
};

class AnfisModel {
public:
    AnfisModel() = default;

    AnfisModel(std::vector<std::vector<MembershipFunction>> mfs, int outputs, ConsequentOrder order)
        : mfs_(std::move(mfs)), outputs_(outputs), order_(order) {
        require(!mfs_.empty(), "anfis: need at least one input");
        require(outputs_ >= 1, "anfis: outputs must be >= 1");
        rules_ = 1;
        for (const auto& v : mfs_) {
            require(!v.empty(), "anfis: every input needs at least one membership function");
            for (const auto& mf : v) require(mf.width > 0.0, "anfis: membership width must be > 0");
            rules_ *= v.size();
        }
        consequents_ = Eigen::MatrixXd::Zero(Eigen::Index(rules_ * terms_per_rule()), outputs_);
    }

    /// Grid initialization: centres equally spaced over each input's range,
    /// widths chosen so neighbouring memberships cross at 0.5.
    static AnfisModel grid(const Eigen::MatrixXd& inputs, int mfs_per_input, int outputs, ConsequentOrder order) {
        require(inputs.rows() > 0, "anfis: empty training set");
        require(mfs_per_input >= 1, "anfis: mfs_per_input must be >= 1");
        std::vector<std::vector<MembershipFunction>> mfs(size_t(inputs.cols()));
        for (Eigen::Index j = 0; j < inputs.cols(); ++j) {
            const double lo = inputs.col(j).minCoeff();
            const double hi = inputs.col(j).maxCoeff();
            const double spacing = mfs_per_input > 1 && hi > lo ? (hi - lo) / (mfs_per_input - 1) : 1.0;
            const double width = spacing / (2.0 * std::sqrt(2.0 * std::log(2.0)));
            for (int k = 0; k < mfs_per_input; ++k) mfs[size_t(j)].push_back({lo + k * (hi > lo ? spacing : 0.0), width});
        }
        return AnfisModel(std::move(mfs), outputs, order);
    }

    size_t inputs() const { return mfs_.size(); }
    int outputs() const { return outputs_; }
    size_t rule_count() const { return rules_; }
    ConsequentOrder order() const { return order_; }
    Eigen::Index terms_per_rule() const {
        return order_ == ConsequentOrder::first ? Eigen::Index(mfs_.size()) + 1 : 1;
    }

    const std::vector<std::vector<MembershipFunction>>& memberships() const { return mfs_; }
    std::vector<std::vector<MembershipFunction>>& memberships() { return mfs_; }

    /// Rows: rule r's block of terms_per_rule() coefficients (inputs..., constant). Columns: outputs.
    const Eigen::MatrixXd& consequents() const { return consequents_; }
    void set_consequents(Eigen::MatrixXd c) {
        require(c.rows() == consequents_.rows() && c.cols() == consequents_.cols(), "anfis: consequent shape mismatch");
        consequents_ = std::move(c);
    }

    /// MF index used by rule r on input j; the last input varies fastest.
    size_t mf_of(size_t rule, size_t input) const {
        size_t stride = 1;
        for (size_t k = mfs_.size(); k-- > input + 1;) stride *= mfs_[k].size();
        return (rule / stride) % mfs_[input].size();
    }

    void check_width(Eigen::Index n) const {
        require(size_t(n) == inputs(),
                "anfis: expected " + std::to_string(inputs()) + " inputs, got " + std::to_string(n));
    }

    /// Raw strengths are products of memberships; normalization is done in
    /// log space so it survives underflow of every raw strength.
    template <class Row>
    Strengths firing_strengths(const Row& x) const {
        check_width(x.size());
        Strengths s;
        s.log_raw.resize(Eigen::Index(rules_));
        for (size_t r = 0; r < rules_; ++r) {
            double lw = 0.0;
            for (size_t j = 0; j < mfs_.size(); ++j) {
                const auto& mf = mfs_[j][mf_of(r, j)];
                const double d = (x(Eigen::Index(j)) - mf.center) / mf.width;
                lw -= 0.5 * d * d;
            }
            s.log_raw(Eigen::Index(r)) = lw;
        }
        const double top = s.log_raw.maxCoeff();
        if (!std::isfinite(top)) fail("anfis: no rule fires for this input");
        s.raw = s.log_raw.array().exp();
        s.normalized = (s.log_raw.array() - top).exp();
        s.normalized /= s.normalized.sum();
        return s;
    }

    /// Per-rule linear outputs at x (rules x outputs).
    template <class Row>
    Eigen::MatrixXd rule_outputs(const Row& x) const {
        Eigen::MatrixXd out(Eigen::Index(rules_), outputs_);
        const Eigen::Index t = terms_per_rule();
        for (size_t r = 0; r < rules_; ++r) {
            const auto block = consequents_.middleRows(Eigen::Index(r) * t, t);
            for (int o = 0; o < outputs_; ++o) {
                double v = block(t - 1, o);
                for (Eigen::Index j = 0; j + 1 < t; ++j) v += block(j, o) * x(j);
                out(Eigen::Index(r), o) = v;
            }
        }
        return out;
    }

    template <class Row>
    Eigen::VectorXd predict_all(const Row& x) const {
        const Strengths s = firing_strengths(x);
        return rule_outputs(x).transpose() * s.normalized;
    }

    double predict(const Eigen::VectorXd& x) const { return predict_all(x)(0); }

    Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& inputs) const {
        Eigen::MatrixXd out(inputs.rows(), outputs_);
        for (Eigen::Index i = 0; i < inputs.rows(); ++i) out.row(i) = predict_all(inputs.row(i)).transpose();
        return out;
    }

    /// Design matrix row for the consequent least-squares problem.
    template <class Row>
    Eigen::VectorXd design_row(const Row& x) const {
        const Strengths s = firing_strengths(x);
        const Eigen::Index t = terms_per_rule();
        Eigen::VectorXd row(Eigen::Index(rules_) * t);
        for (size_t r = 0; r < rules_; ++r) {
            const double w = s.normalized(Eigen::Index(r));
            for (Eigen::Index j = 0; j + 1 < t; ++j) row(Eigen::Index(r) * t + j) = w * x(j);
            row(Eigen::Index(r) * t + t - 1) = w;
        }
        return row;
    }

    /// One "IF ... THEN ..." line per rule.
    std::string dump_rules(const std::vector<std::string>& input_names = {}) const {
        std::ostringstream out;
        const Eigen::Index t = terms_per_rule();
        auto name = [&](size_t j) {
            return j < input_names.size() ? input_names[j] : "x" + std::to_string(j + 1);
        };
        for (size_t r = 0; r < rules_; ++r) {
            out << "IF ";
            for (size_t j = 0; j < mfs_.size(); ++j) {
                const auto& mf = mfs_[j][mf_of(r, j)];
                out << (j ? " AND " : "") << name(j) << " is G(" << fmt_general(mf.center) << ","
                    << fmt_general(mf.width) << ")";
            }
            out << " THEN ";
            for (int o = 0; o < outputs_; ++o) {
                out << (o ? ", " : "") << (outputs_ > 1 ? "y" + std::to_string(o + 1) : std::string("y")) << " = ";
                for (Eigen::Index j = 0; j + 1 < t; ++j)
                    out << fmt_general(consequents_(Eigen::Index(r) * t + j, o)) << "*" << name(size_t(j)) << " + ";
                out << fmt_general(consequents_(Eigen::Index(r) * t + t - 1, o));
            }
            out << '\n';
        }
        return out.str();
    }

    void write(std::ostream& out) const {
        out << "anfis " << mfs_.size() << ' ' << outputs_ << ' ' << (order_ == ConsequentOrder::first ? "first" : "zero")
            << '\n';
        for (const auto& v : mfs_) {
            out << v.size();
            for (const auto& mf : v) out << ' ' << fmt_exact(mf.center) << ' ' << fmt_exact(mf.width);
            out << '\n';
        }
        for (Eigen::Index i = 0; i < consequents_.rows(); ++i) {
            for (Eigen::Index o = 0; o < consequents_.cols(); ++o) out << (o ? " " : "") << fmt_exact(consequents_(i, o));
            out << '\n';
        }
    }

    static AnfisModel read(TokenReader& in) {
        in.expect("anfis");
        const size_t n = in.count("input count");
        const int outputs = int(in.count("output count"));
        const std::string ord = in.word("consequent order");
        require(ord == "first" || ord == "zero", "model dump: bad consequent order '" + ord + "'");
        std::vector<std::vector<MembershipFunction>> mfs(n);
        for (size_t j = 0; j < n; ++j) {
            const size_t k = in.count("membership count");
            for (size_t m = 0; m < k; ++m) {
                MembershipFunction mf;
                mf.center = in.real("centre");
                mf.width = in.real("width");
                mfs[j].push_back(mf);
            }
        }
        AnfisModel model(std::move(mfs), outputs, ord == "first" ? ConsequentOrder::first : ConsequentOrder::zero);
        Eigen::MatrixXd c(model.consequents_.rows(), model.consequents_.cols());
        for (Eigen::Index i = 0; i < c.rows(); ++i)
            for (Eigen::Index o = 0; o < c.cols(); ++o) c(i, o) = in.real("consequent");
        model.set_consequents(std::move(c));
        return model;
    }

private:
    std::vector<std::vector<MembershipFunction>> mfs_;
    size_t rules_ = 0;
    int outputs_ = 1;
    ConsequentOrder order_ = ConsequentOrder::first;
    Eigen::MatrixXd consequents_;
};

// ---------------------------------------------------------------------------

inline Eigen::MatrixXd design_matrix(const AnfisModel& model, const Eigen::MatrixXd& inputs) {
    Eigen::MatrixXd a(inputs.rows(), Eigen::Index(model.rule_count()) * model.terms_per_rule());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) a.row(i) = model.design_row(inputs.row(i)).transpose();
    return a;
}

struct ConsequentFit {
    Eigen::MatrixXd coefficients;  // same layout as AnfisModel::consequents()
    bool rank_deficient = false;
    Eigen::Index rank = 0;
};

/// Least-squares consequents with premises fixed; one solve per output
/// column sharing a single design matrix. Rank deficiency yields the
/// minimum-norm solution.
inline ConsequentFit lse_consequents(const AnfisModel& model, const Eigen::MatrixXd& inputs,
                                     const Eigen::MatrixXd& targets) {
    require(inputs.rows() > 0, "anfis: empty training set");
    require(targets.rows() == inputs.rows() && targets.cols() == model.outputs(), "anfis: target shape mismatch");
    const auto sol = lstsq(design_matrix(model, inputs), targets);
    return {sol.coef, sol.rank_deficient, sol.rank};
}

inline ConsequentFit lse_consequents(const AnfisModel& model, const Dataset& train) {
    return lse_consequents(model, train.features, Eigen::MatrixXd(train.target));
}

/// Gradient of E = 1/2 * SSE with respect to every centre and width, in the
/// order (input 0: c0 s0 c1 s1 ...), (input 1: ...), ...
inline Eigen::VectorXd premise_gradient(const AnfisModel& model, const Eigen::MatrixXd& inputs,
                                        const Eigen::MatrixXd& targets) {
    const auto& mfs = model.memberships();
    std::vector<Eigen::Index> offset(mfs.size() + 1, 0);
    for (size_t j = 0; j < mfs.size(); ++j) offset[j + 1] = offset[j] + 2 * Eigen::Index(mfs[j].size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(offset.back());
    for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
        const auto x = inputs.row(i);
        const Strengths s = model.firing_strengths(x);
        const Eigen::MatrixXd f = model.rule_outputs(x);
        const Eigen::VectorXd yhat = f.transpose() * s.normalized;
        const Eigen::VectorXd err = yhat - targets.row(i).transpose();
        for (size_t r = 0; r < model.rule_count(); ++r) {
            // dE/d(log w_r) = wbar_r * sum_o err_o * (f_ro - yhat_o)
            const double dlw = s.normalized(Eigen::Index(r)) * err.dot(f.row(Eigen::Index(r)).transpose() - yhat);
            if (dlw == 0.0) continue;
            for (size_t j = 0; j < mfs.size(); ++j) {
                const size_t m = model.mf_of(r, j);
                const auto& mf = mfs[j][m];
                const double d = x(Eigen::Index(j)) - mf.center;
                const double s2 = mf.width * mf.width;
                g(offset[j] + 2 * Eigen::Index(m)) += dlw * d / s2;
                g(offset[j] + 2 * Eigen::Index(m) + 1) += dlw * d * d / (s2 * mf.width);
            }
        }
    }
    return g;
}

inline Eigen::VectorXd premise_parameters(const AnfisModel& model) {
    std::vector<double> v;
    for (const auto& in : model.memberships())
        for (const auto& mf : in) {
            v.push_back(mf.center);
            v.push_back(mf.width);
        }
    return Eigen::Map<const Eigen::VectorXd>(v.data(), Eigen::Index(v.size()));
}

inline void set_premise_parameters(AnfisModel& model, const Eigen::VectorXd& p) {
    Eigen::Index k = 0;
    for (auto& in : model.memberships())
        for (auto& mf : in) {
            require(k + 1 < p.size(), "anfis: premise vector too short");
            mf.center = p(k++);
            mf.width = p(k++);
        }
    require(k == p.size(), "anfis: premise vector has wrong length");
}

/// One full-batch gradient-descent step on the premises; widths are clamped
/// at kMinWidth.
inline AnfisModel premise_step(const AnfisModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                               double rate) {
    require(rate > 0.0, "anfis: premise learning rate must be > 0");
    AnfisModel out = model;
    const Eigen::VectorXd g = premise_gradient(model, inputs, targets);
    Eigen::VectorXd p = premise_parameters(model) - rate * g;
    for (Eigen::Index k = 1; k < p.size(); k += 2) p(k) = std::max(p(k), kMinWidth);
    set_premise_parameters(out, p);
    return out;
}

inline AnfisModel premise_step(const AnfisModel& model, const Dataset& train, double rate) {
    return premise_step(model, train.features, Eigen::MatrixXd(train.target), rate);
}

inline double training_rmse(const AnfisModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    const Eigen::MatrixXd d = model.predict_batch(inputs) - targets;
    return std::sqrt(d.squaredNorm() / double(d.size()));
}

struct TrainResult {
    AnfisModel model;
    std::vector<double> rmse_trace;  // training RMSE after each epoch's least-squares half
    bool rank_deficient = false;
};

/// Hybrid learning. Each epoch solves the consequents, records the training
/// RMSE, then takes one premise step. The learning rate halves whenever the
/// epoch RMSE rises. A final consequent solve matches the returned
/// consequents to the returned premises.
inline TrainResult hybrid_train(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets, const AnfisConfig& cfg) {
    cfg.validate();
    require(targets.cols() == cfg.outputs, "anfis: target columns do not match configured outputs");
    TrainResult out;
    out.model = AnfisModel::grid(inputs, cfg.mfs_per_input, cfg.outputs, cfg.order);
    double rate = cfg.learning_rate;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        ConsequentFit fit = lse_consequents(out.model, inputs, targets);
        out.rank_deficient = out.rank_deficient || fit.rank_deficient;
        out.model.set_consequents(std::move(fit.coefficients));
        const double e = training_rmse(out.model, inputs, targets);
        if (!std::isfinite(e)) fail("anfis: non-finite training error at epoch " + std::to_string(epoch + 1));
        if (!out.rmse_trace.empty() && e > out.rmse_trace.back()) rate *= 0.5;
        out.rmse_trace.push_back(e);
        if (rate > 0.0) out.model = premise_step(out.model, inputs, targets, rate);
    }
    ConsequentFit fit = lse_consequents(out.model, inputs, targets);
    out.rank_deficient = out.rank_deficient || fit.rank_deficient;
    out.model.set_consequents(std::move(fit.coefficients));
    return out;
}

inline TrainResult hybrid_train(const Dataset& train, const AnfisConfig& cfg) {
    require(cfg.outputs == 1, "anfis: a Dataset carries a single target; use the matrix overload for more outputs");
    return hybrid_train(train.features, Eigen::MatrixXd(train.target), cfg);
}

}  // namespace fxh::anfis
