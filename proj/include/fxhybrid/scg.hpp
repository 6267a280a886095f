#pragma once

// Scaled conjugate gradient (Moller 1993), generic over any differentiable
// objective exposing
//
//     double value(const Eigen::VectorXd& w);
//     Eigen::VectorXd gradient(const Eigen::VectorXd& w);
//
// Each iteration replaces the line search with a finite-difference estimate of
// the Hessian-vector product along the search direction, regulated by lambda.

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"

namespace fxh::scg {

struct ScgConfig {
    double sigma = 1e-4;   // base perturbation scale
    double lambda = 1e-6;  // initial indefiniteness regulator
    // Keep lambda at zero for the whole run; only the indefinite-curvature
    // correction can still raise it.
    bool pin_lambda_zero = false;
    double gradient_tolerance = 1e-10;

    void validate() const {
        require(sigma > 0.0, "scg: sigma must be > 0");
        require(lambda >= 0.0, "scg: lambda must be >= 0");
    }
};

/// s = [E'(w + sigma p) - E'(w)] / sigma + lambda p
template <class Objective>
Eigen::VectorXd hessian_vector_approx(Objective& f, const Eigen::VectorXd& w, const Eigen::VectorXd& p,
                                      double sigma, double lambda) {
    require(sigma > 0.0, "hessian_vector_approx: sigma must be > 0");
    require(p.size() == w.size(), "hessian_vector_approx: direction size mismatch");
    const Eigen::VectorXd g0 = f.gradient(w);
    const Eigen::VectorXd g1 = f.gradient(w + sigma * p);
    return (g1 - g0) / sigma + lambda * p;
}

struct ScgState {
    Eigen::VectorXd w;  // current weights
    Eigen::VectorXd p;  // search direction
    Eigen::VectorXd r;  // negative gradient at w
    double error = 0.0;
    double lambda = 0.0;
    double lambda_bar = 0.0;
    double sigma = 0.0;
    bool success = true;
    bool restarted = true;  // p was reset to r on the last update
    long iteration = 0;
    long accepted_steps = 0;
    // Quantities kept from the last successful curvature evaluation.
    Eigen::VectorXd s;
    double delta = 0.0;
};

template <class Objective>
class ScgMinimizer {
public:
    ScgMinimizer(Objective& f, Eigen::VectorXd w0, ScgConfig cfg = {}) : f_(f), cfg_(cfg) {
        cfg_.validate();
        st_.w = std::move(w0);
        st_.sigma = cfg_.sigma;
        st_.lambda = cfg_.pin_lambda_zero ? 0.0 : cfg_.lambda;
        st_.error = f_.value(st_.w);
        st_.r = -f_.gradient(st_.w);
        st_.p = st_.r;
        check_finite(st_.error, 0);
    }

    const ScgState& state() const { return st_; }

    bool converged() const { return st_.r.norm() < cfg_.gradient_tolerance; }

    /// Performs one SCG iteration. Returns true when a weight update was accepted.
    bool step() {
        ScgState& s = st_;
        ++s.iteration;
        const double p2 = s.p.squaredNorm();
        if (!(p2 > 0.0)) return false;
        const double pn = std::sqrt(p2);

        if (s.success) {
            const double sigma_k = s.sigma / pn;
            s.s = hessian_vector_approx(f_, s.w, s.p, sigma_k, 0.0);
            s.delta = s.p.dot(s.s);
        }
        // Scale by the current regulator.
        Eigen::VectorXd sk = s.s + (s.lambda - s.lambda_bar) * s.p;
        double delta = s.delta + (s.lambda - s.lambda_bar) * p2;
        s.s = sk;
        s.delta = delta;

        // Make the curvature estimate positive.
        if (delta <= 0.0) {
            s.s += (s.lambda - 2.0 * delta / p2) * s.p;
            s.lambda_bar = 2.0 * (s.lambda - delta / p2);
            delta = -delta + s.lambda * p2;
            s.lambda = s.lambda_bar;
            s.delta = delta;
        }

        const double mu = s.p.dot(s.r);
        if (!(std::abs(mu) > 0.0)) {
            // Direction orthogonal to the gradient: fall back to steepest descent.
            s.p = s.r;
            s.success = true;
            s.restarted = true;
            return false;
        }
        const double alpha = mu / delta;
        const Eigen::VectorXd w_new = s.w + alpha * s.p;
        const double e_new = f_.value(w_new);
        check_finite(e_new, s.iteration);
        const double comparison = 2.0 * delta * (s.error - e_new) / (mu * mu);

        bool accepted = false;
        if (comparison >= 0.0 && e_new <= s.error) {
            const Eigen::VectorXd r_new = -f_.gradient(w_new);
            s.w = w_new;
            s.error = e_new;
            s.lambda_bar = 0.0;
            s.success = true;
            ++s.accepted_steps;
            if (s.iteration % static_cast<long>(s.w.size()) == 0) {
                s.p = r_new;
                s.restarted = true;
            } else {
                const double beta = (r_new.squaredNorm() - r_new.dot(s.r)) / mu;
                s.p = r_new + beta * s.p;
                s.restarted = false;
            }
            s.r = r_new;
            if (comparison >= 0.75 && !cfg_.pin_lambda_zero) s.lambda *= 0.25;
            accepted = true;
        } else {
            s.lambda_bar = s.lambda;
            s.success = false;
        }
        if (comparison < 0.25 && !cfg_.pin_lambda_zero) s.lambda += delta * (1.0 - comparison) / p2;
        return accepted;
    }

private:
    static void check_finite(double e, long iteration) {
        if (!std::isfinite(e)) fail("scg: non-finite error at epoch " + std::to_string(iteration));
    }

    Objective& f_;
    ScgConfig cfg_;
    ScgState st_;
};

struct ScgResult {
    Eigen::VectorXd w;
    std::vector<double> trace;           // error after each iteration
    std::vector<double> accepted_errors;  // error at each accepted update, starting with the initial error
    long iterations = 0;
    bool converged = false;
};

template <class Objective>
ScgResult minimize(Objective& f, Eigen::VectorXd w0, long max_iterations, const ScgConfig& cfg = {}) {
    require(max_iterations >= 1, "scg: epochs must be >= 1");
    ScgMinimizer<Objective> opt(f, std::move(w0), cfg);
    ScgResult out;
    out.accepted_errors.push_back(opt.state().error);
    while (out.iterations < max_iterations) {
        if (opt.converged()) {
            out.converged = true;
            break;
        }
        const bool accepted = opt.step();
        ++out.iterations;
        out.trace.push_back(opt.state().error);
        if (accepted) out.accepted_errors.push_back(opt.state().error);
    }
    out.converged = out.converged || opt.converged();
    out.w = opt.state().w;
    return out;
}

/// E(w) = 1/2 w'Aw - b'w; used to exercise the optimizer on exact quadratics.
struct QuadraticObjective {
    Eigen::MatrixXd a;
    Eigen::VectorXd b;
    double c = 0.0;

    double value(const Eigen::VectorXd& w) const { return 0.5 * w.dot(a * w) - b.dot(w) + c; }
    Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return a * w - b; }
    Eigen::VectorXd minimizer() const { return a.ldlt().solve(b); }
};

}  // namespace fxh::scg
