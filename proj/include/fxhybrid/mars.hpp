#pragma once

// Multivariate adaptive regression splines.
//
// The forward pass grows the model one reflected hinge pair at a time,
// scoring candidates by projecting them onto the orthogonal complement of
// the current basis span. The backward pass removes one basis at a time and
// keeps the best-scoring subset visited.

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "linalg.hpp"
#include "timeseries.hpp"

namespace fxh::mars {

enum class Direction { positive, negative };

/// max(0, x - c) for the positive direction, max(0, c - x) for its mirror.
inline double eval_hinge(double x, double c, Direction dir) {
    return dir == Direction::positive ? std::max(0.0, x - c) : std::max(0.0, c - x);
}

struct HingeFactor {
    int variable = 0;
    double knot = 0.0;
    Direction direction = Direction::positive;

    friend bool operator==(const HingeFactor&, const HingeFactor&) = default;
};

/// Product of hinge factors; an empty factor list is the constant basis.
struct HingeBasis {
    std::vector<HingeFactor> factors;

    bool is_constant() const { return factors.empty(); }
    size_t degree() const { return factors.size(); }

    bool uses(int variable) const {
        return std::any_of(factors.begin(), factors.end(), [&](const auto& f) { return f.variable == variable; });
    }

    template <class Row>
    double eval(const Row& x) const {
        double v = 1.0;
        for (const auto& f : factors) {
            v *= eval_hinge(x(f.variable), f.knot, f.direction);
            if (v == 0.0) break;
        }
        return v;
    }

    friend bool operator==(const HingeBasis&, const HingeBasis&) = default;
};

enum class PruneCriterion { gcv, holdout };

struct MarsConfig {
    int max_basis_functions = 30;  // includes the constant term
    int max_interaction = 1;
    PruneCriterion pruning = PruneCriterion::gcv;
    double gcv_penalty = 3.0;
    // Forward candidates whose relative RSS reduction is below this are ignored.
    double min_relative_improvement = 1e-12;
    // Columns whose residual norm after projection is below this fraction of
    // their own norm are linearly dependent on the current basis.
    double dependence_tolerance = 1e-10;

    void validate() const {
        require(max_basis_functions >= 1, "mars: max_basis_functions must be >= 1");
        require(max_interaction >= 1, "mars: max_interaction must be >= 1");
        require(gcv_penalty >= 0.0, "mars: gcv penalty must be >= 0");
    }
};

struct MarsModel {
    size_t n_features = 0;
    std::vector<HingeBasis> bases;  // bases[0] is the constant term
    Eigen::VectorXd coefficients;
    double training_mse = 0.0;
    std::vector<double> forward_trace;                    // training MSE after each forward step
    std::vector<std::pair<size_t, double>> pruning_trace;  // (subset size, score)

    template <class Row>
    double predict_row(const Row& x) const {
        double y = 0.0;
        for (size_t k = 0; k < bases.size(); ++k) y += coefficients(Eigen::Index(k)) * bases[k].eval(x);
        return y;
    }

    double predict(const Eigen::VectorXd& x) const {
        require(static_cast<size_t>(x.size()) == n_features,
                "mars: expected " + std::to_string(n_features) + " features, got " + std::to_string(x.size()));
        return predict_row(x);
    }

    Eigen::VectorXd predict(const Dataset& ds) const {
        require(static_cast<size_t>(ds.cols()) == n_features, "mars: dataset width does not match model");
        Eigen::VectorXd out(ds.rows());
        for (Eigen::Index i = 0; i < ds.rows(); ++i) out(i) = predict_row(ds.features.row(i));
        return out;
    }

    /// Knots strictly inside the observed range of their variable.
    size_t interior_knot_count(const Dataset& train) const {
        size_t n = 0;
        for (const auto& b : bases)
            for (const auto& f : b.factors) {
                const double lo = train.features.col(f.variable).minCoeff();
                const double hi = train.features.col(f.variable).maxCoeff();
                if (f.knot > lo && f.knot < hi) ++n;
            }
        return n;
    }

    bool has_knot(int variable, double knot, double tol = 0.0) const {
        for (const auto& b : bases)
            for (const auto& f : b.factors)
                if (f.variable == variable && std::abs(f.knot - knot) <= tol) return true;
        return false;
    }

    void write(std::ostream& out) const {
        out << "mars " << n_features << ' ' << bases.size() << ' ' << fmt_exact(training_mse) << '\n';
        for (size_t k = 0; k < bases.size(); ++k) {
            out << "basis " << fmt_exact(coefficients(Eigen::Index(k))) << ' ' << bases[k].factors.size();
            for (const auto& f : bases[k].factors)
                out << ' ' << f.variable << ' ' << fmt_exact(f.knot) << ' '
                    << (f.direction == Direction::positive ? '+' : '-');
            out << '\n';
        }
    }

    static MarsModel read(TokenReader& in) {
        MarsModel m;
        in.expect("mars");
        m.n_features = in.count("feature count");
        const size_t nb = in.count("basis count");
        m.training_mse = in.real("training mse");
        m.coefficients.resize(Eigen::Index(nb));
        for (size_t k = 0; k < nb; ++k) {
            in.expect("basis");
            m.coefficients(Eigen::Index(k)) = in.real("coefficient");
            HingeBasis b;
            const size_t nf = in.count("factor count");
            for (size_t f = 0; f < nf; ++f) {
                HingeFactor hf;
                hf.variable = static_cast<int>(in.count("variable"));
                require(static_cast<size_t>(hf.variable) < m.n_features, "model dump: variable out of range");
                hf.knot = in.real("knot");
                const std::string d = in.word("direction");
                require(d == "+" || d == "-", "model dump: bad hinge direction '" + d + "'");
                hf.direction = d == "+" ? Direction::positive : Direction::negative;
                b.factors.push_back(hf);
            }
            m.bases.push_back(std::move(b));
        }
        return m;
    }
};

// ---------------------------------------------------------------------------

namespace detail {

inline Eigen::MatrixXd basis_matrix(const std::vector<HingeBasis>& bases, const Eigen::MatrixXd& x) {
    Eigen::MatrixXd b(x.rows(), Eigen::Index(bases.size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (size_t k = 0; k < bases.size(); ++k) b(i, Eigen::Index(k)) = bases[k].eval(x.row(i));
    return b;
}

/// RSS values below this are indistinguishable from an exact fit.
inline double rss_floor(const Eigen::VectorXd& y) { return 1e-24 * y.squaredNorm(); }

/// Removes the components of v along the orthonormal columns of q (two passes).
inline void orthogonalize(const Eigen::MatrixXd& q, Eigen::Index cols, Eigen::VectorXd& v) {
    for (int pass = 0; pass < 2; ++pass) {
        if (cols == 0) return;
        const Eigen::VectorXd proj = q.leftCols(cols).transpose() * v;
        v.noalias() -= q.leftCols(cols) * proj;
    }
}

struct Fit {
    Eigen::VectorXd coef;
    double rss = 0.0;
};

inline Fit refit(const Eigen::MatrixXd& b, const Eigen::VectorXd& y) {
    Fit f;
    f.coef = lstsq(b, y).coef;
    f.rss = (y - b * f.coef).squaredNorm();
    return f;
}

inline double effective_parameters(size_t m, double penalty) {
    return static_cast<double>(m) + penalty * static_cast<double>(m - 1) / 2.0;
}

}  // namespace detail

/// Generalized cross-validation score for a model with m bases.
inline double gcv_score(double rss, size_t n, size_t m, double penalty) {
    const double c = detail::effective_parameters(m, penalty);
    const double nd = static_cast<double>(n);
    if (c >= nd) return std::numeric_limits<double>::infinity();
    const double denom = 1.0 - c / nd;
    return (rss / nd) / (denom * denom);
}

/// Greedy forward construction of an overfit model.
inline MarsModel forward_pass(const Dataset& train, const MarsConfig& cfg) {
    cfg.validate();
    require(train.cols() > 0, "mars: no features");
    require(train.rows() >= 2, "mars: need at least 2 training rows");
    const Eigen::MatrixXd& x = train.features;
    const Eigen::VectorXd& y = train.target;
    const Eigen::Index n = x.rows();
    const int p = static_cast<int>(x.cols());
    const double nd = static_cast<double>(n);

    // Candidate knots: distinct observed values per variable, ascending.
    std::vector<std::vector<double>> knots(static_cast<size_t>(p));
    for (int v = 0; v < p; ++v) {
        std::vector<double> vals(x.col(v).data(), x.col(v).data() + n);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        knots[size_t(v)] = std::move(vals);
    }

    MarsModel model;
    model.n_features = size_t(p);
    model.bases.push_back(HingeBasis{});
    Eigen::MatrixXd columns(n, cfg.max_basis_functions);  // evaluated basis columns
    Eigen::MatrixXd q(n, cfg.max_basis_functions);        // orthonormal basis of their span
    columns.col(0).setOnes();
    q.col(0).setConstant(1.0 / std::sqrt(nd));
    Eigen::Index m = 1;

    Eigen::VectorXd resid = y - q.col(0) * q.col(0).dot(y);
    double rss = resid.squaredNorm();
    const double floor = detail::rss_floor(y);
    model.forward_trace.push_back(rss / nd);

    Eigen::VectorXd h_pos(n), h_neg(n), u1(n), u2(n);
    while (m + 2 <= cfg.max_basis_functions && rss > floor) {
        struct Candidate {
            int parent = -1, variable = -1;
            double knot = 0.0, reduction = 0.0;
        } best;

        for (int v = 0; v < p; ++v) {
            for (double c : knots[size_t(v)]) {
                for (Eigen::Index parent = 0; parent < m; ++parent) {
                    const HingeBasis& pb = model.bases[size_t(parent)];
                    if (int(pb.degree()) >= cfg.max_interaction || pb.uses(v)) continue;
                    for (Eigen::Index i = 0; i < n; ++i) {
                        const double pv = columns(i, parent);
                        h_pos(i) = pv * eval_hinge(x(i, v), c, Direction::positive);
                        h_neg(i) = pv * eval_hinge(x(i, v), c, Direction::negative);
                    }
                    double reduction = 0.0;
                    u1 = h_pos;
                    detail::orthogonalize(q, m, u1);
                    const double n1 = u1.norm();
                    const bool keep1 = n1 > cfg.dependence_tolerance * h_pos.norm();
                    if (keep1) {
                        u1 /= n1;
                        const double a = u1.dot(resid);
                        reduction += a * a;
                    }
                    u2 = h_neg;
                    detail::orthogonalize(q, m, u2);
                    if (keep1) u2 -= u1 * u1.dot(u2);
                    const double n2 = u2.norm();
                    if (n2 > cfg.dependence_tolerance * h_neg.norm()) {
                        const double a = u2.dot(resid) / n2;
                        reduction += a * a;
                    }
                    // Earlier candidates (lower variable, then smaller knot) win near-ties.
                    if (reduction > best.reduction * (1.0 + 1e-12) && reduction > 0.0)
                        best = {int(parent), v, c, reduction};
                }
            }
        }
        if (best.variable < 0 || best.reduction < cfg.min_relative_improvement * rss) break;

        // Accept: append the independent members of the pair.
        const HingeBasis parent = model.bases[size_t(best.parent)];
        for (Direction dir : {Direction::positive, Direction::negative}) {
            HingeBasis nb = parent;
            nb.factors.push_back({best.variable, best.knot, dir});
            Eigen::VectorXd col(n);
            for (Eigen::Index i = 0; i < n; ++i) col(i) = nb.eval(x.row(i));
            Eigen::VectorXd u = col;
            detail::orthogonalize(q, m, u);
            const double un = u.norm();
            if (!(un > cfg.dependence_tolerance * col.norm())) continue;  // dependent member dropped
            u /= un;
            const double a = u.dot(resid);
            resid -= a * u;
            rss = resid.squaredNorm();
            columns.col(m) = col;
            q.col(m) = u;
            ++m;
            model.bases.push_back(std::move(nb));
        }
        model.forward_trace.push_back(rss / nd);
    }

    const detail::Fit fit = detail::refit(columns.leftCols(m), y);
    model.coefficients = fit.coef;
    model.training_mse = fit.rss / nd;
    return model;
}

/// Greedy backward elimination; returns the best subset visited.
/// `holdout` is required when cfg.pruning is holdout.
inline MarsModel backward_prune(const MarsModel& model, const Dataset& train, const MarsConfig& cfg,
                                const Dataset* holdout = nullptr) {
    cfg.validate();
    require(static_cast<size_t>(train.cols()) == model.n_features, "mars: training data width does not match model");
    if (cfg.pruning == PruneCriterion::holdout) {
        require(holdout != nullptr && !holdout->empty(), "mars: holdout pruning needs a non-empty holdout set");
        require(holdout->cols() == train.cols(), "mars: holdout width does not match training data");
    }
    const Eigen::VectorXd& y = train.target;
    const size_t n = size_t(train.rows());
    const double floor = detail::rss_floor(y);
    const Eigen::MatrixXd full = detail::basis_matrix(model.bases, train.features);
    Eigen::MatrixXd full_holdout;
    if (cfg.pruning == PruneCriterion::holdout) full_holdout = detail::basis_matrix(model.bases, holdout->features);

    auto select = [](const Eigen::MatrixXd& src, const std::vector<size_t>& keep) {
        Eigen::MatrixXd out(src.rows(), Eigen::Index(keep.size()));
        for (size_t k = 0; k < keep.size(); ++k) out.col(Eigen::Index(k)) = src.col(Eigen::Index(keep[k]));
        return out;
    };
    auto score = [&](const std::vector<size_t>& keep, const detail::Fit& fit) {
        if (cfg.pruning == PruneCriterion::gcv)
            return gcv_score(std::max(fit.rss, floor), n, keep.size(), cfg.gcv_penalty);
        const Eigen::VectorXd pred = select(full_holdout, keep) * fit.coef;
        return (pred - holdout->target).squaredNorm() / double(holdout->rows());
    };

    std::vector<size_t> active(model.bases.size());
    for (size_t k = 0; k < active.size(); ++k) active[k] = k;

    MarsModel out;
    out.n_features = model.n_features;
    out.forward_trace = model.forward_trace;

    detail::Fit cur = detail::refit(select(full, active), y);
    double best_score = score(active, cur);
    std::vector<size_t> best_set = active;
    detail::Fit best_fit = cur;
    out.pruning_trace.emplace_back(active.size(), best_score);

    while (active.size() > 1) {
        // Drop the basis whose removal leaves the smallest RSS; the constant stays.
        detail::Fit drop_fit;
        std::vector<size_t> drop_set;
        double drop_rss = std::numeric_limits<double>::infinity();
        for (size_t j = 1; j < active.size(); ++j) {
            std::vector<size_t> trial = active;
            trial.erase(trial.begin() + std::ptrdiff_t(j));
            detail::Fit f = detail::refit(select(full, trial), y);
            const double r = std::max(f.rss, floor);
            if (r < drop_rss) {
                drop_rss = r;
                drop_fit = std::move(f);
                drop_set = std::move(trial);
            }
        }
        active = std::move(drop_set);
        const double s = score(active, drop_fit);
        out.pruning_trace.emplace_back(active.size(), s);
        if (s <= best_score) {
            best_score = s;
            best_set = active;
            best_fit = drop_fit;
        }
    }

    for (size_t k : best_set) out.bases.push_back(model.bases[k]);
    out.coefficients = best_fit.coef;
    out.training_mse = best_fit.rss / double(n);
    return out;
}

inline MarsModel fit(const Dataset& train, const MarsConfig& cfg, const Dataset* holdout = nullptr) {
    require(train.cols() > 0, "mars: no features");
    return backward_prune(forward_pass(train, cfg), train, cfg, holdout);
}

}  // namespace fxh::mars
