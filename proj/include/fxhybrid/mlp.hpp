#pragma once

// Feedforward network with tanh hidden layers and a linear output layer,
// trained full-batch on E = 1/2 * SSE with scaled conjugate gradient.

#include <cmath>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "common.hpp"
#include "scg.hpp"
#include "timeseries.hpp"

namespace fxh::mlp {

class MlpNetwork {
public:
    MlpNetwork() = default;

    /// Zero-initialized network with the given layer sizes (input first).
    explicit MlpNetwork(std::vector<int> sizes) : sizes_(std::move(sizes)) {
        require(sizes_.size() >= 2, "mlp: need at least an input and an output layer");
        for (int s : sizes_) require(s >= 1, "mlp: layer sizes must be >= 1");
        for (size_t l = 1; l < sizes_.size(); ++l) {
            weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l], sizes_[l - 1]));
            biases_.push_back(Eigen::VectorXd::Zero(sizes_[l]));
        }
    }

    /// Weights and biases uniform in +-1/sqrt(fan-in).
    static MlpNetwork initialized(std::vector<int> sizes, std::uint64_t seed) {
        MlpNetwork net(std::move(sizes));
        Rng rng(seed);
        for (size_t l = 0; l < net.weights_.size(); ++l) {
            const double bound = 1.0 / std::sqrt(double(net.weights_[l].cols()));
            for (Eigen::Index i = 0; i < net.weights_[l].rows(); ++i)
                for (Eigen::Index j = 0; j < net.weights_[l].cols(); ++j) net.weights_[l](i, j) = rng.uniform(-bound, bound);
            for (Eigen::Index i = 0; i < net.biases_[l].size(); ++i) net.biases_[l](i) = rng.uniform(-bound, bound);
        }
        return net;
    }

    const std::vector<int>& sizes() const { return sizes_; }
    size_t layers() const { return weights_.size(); }
    int inputs() const { return sizes_.front(); }
    int outputs() const { return sizes_.back(); }

    Eigen::MatrixXd& weight(size_t l) { return weights_[l]; }
    const Eigen::MatrixXd& weight(size_t l) const { return weights_[l]; }
    Eigen::VectorXd& bias(size_t l) { return biases_[l]; }
    const Eigen::VectorXd& bias(size_t l) const { return biases_[l]; }

    Eigen::Index parameter_count() const {
        Eigen::Index n = 0;
        for (size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
        return n;
    }

    /// Flattened as, per layer, the weight matrix row-major followed by the bias.
    Eigen::VectorXd parameters() const {
        Eigen::VectorXd w(parameter_count());
        Eigen::Index k = 0;
        for (size_t l = 0; l < weights_.size(); ++l) {
            for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
                for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) w(k++) = weights_[l](i, j);
            for (Eigen::Index i = 0; i < biases_[l].size(); ++i) w(k++) = biases_[l](i);
        }
        return w;
    }

    void set_parameters(const Eigen::VectorXd& w) {
        require(w.size() == parameter_count(), "mlp: parameter vector has wrong length");
        Eigen::Index k = 0;
        for (size_t l = 0; l < weights_.size(); ++l) {
            for (Eigen::Index i = 0; i < weights_[l].rows(); ++i)
                for (Eigen::Index j = 0; j < weights_[l].cols(); ++j) weights_[l](i, j) = w(k++);
            for (Eigen::Index i = 0; i < biases_[l].size(); ++i) biases_[l](i) = w(k++);
        }
    }

    bool finite() const {
        for (size_t l = 0; l < weights_.size(); ++l)
            if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
        return true;
    }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const {
        require(x.size() == inputs(), "mlp: expected " + std::to_string(inputs()) + " inputs, got " +
                                          std::to_string(x.size()));
        Eigen::VectorXd a = x;
        for (size_t l = 0; l < weights_.size(); ++l) {
            Eigen::VectorXd z = weights_[l] * a + biases_[l];
            a = l + 1 < weights_.size() ? Eigen::VectorXd(z.array().tanh()) : z;
        }
        return a;
    }

    double predict(const Eigen::VectorXd& x) const { return forward(x)(0); }

    /// Outputs for every row of `inputs` (rows x input size) as a rows x outputs matrix.
    Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const {
        require(inputs.cols() == this->inputs(), "mlp: batch width does not match input layer");
        Eigen::MatrixXd a = inputs.transpose();
        for (size_t l = 0; l < weights_.size(); ++l) {
            Eigen::MatrixXd z = (weights_[l] * a).colwise() + biases_[l];
            a = l + 1 < weights_.size() ? Eigen::MatrixXd(z.array().tanh()) : z;
        }
        return a.transpose();
    }

    void write(std::ostream& out) const {
        out << "mlp " << sizes_.size();
        for (int s : sizes_) out << ' ' << s;
        out << '\n';
        for (size_t l = 0; l < weights_.size(); ++l) {
            for (Eigen::Index i = 0; i < weights_[l].rows(); ++i) {
                for (Eigen::Index j = 0; j < weights_[l].cols(); ++j)
                    out << (j ? " " : "") << fmt_exact(weights_[l](i, j));
                out << '\n';
            }
            for (Eigen::Index i = 0; i < biases_[l].size(); ++i) out << (i ? " " : "") << fmt_exact(biases_[l](i));
            out << '\n';
        }
    }

    static MlpNetwork read(TokenReader& in) {
        in.expect("mlp");
        const size_t n = in.count("layer count");
        std::vector<int> sizes;
        for (size_t i = 0; i < n; ++i) sizes.push_back(int(in.count("layer size")));
        MlpNetwork net(sizes);
        Eigen::VectorXd w(net.parameter_count());
        for (Eigen::Index k = 0; k < w.size(); ++k) w(k) = in.real("weight");
        net.set_parameters(w);
        return net;
    }

private:
    std::vector<int> sizes_;
    std::vector<Eigen::MatrixXd> weights_;
    std::vector<Eigen::VectorXd> biases_;
};

/// E = 1/2 * sum of squared output errors over the batch.
inline double error(const MlpNetwork& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    return 0.5 * (net.forward_batch(inputs) - targets).squaredNorm();
}

/// Exact backpropagation gradient of E, flattened like MlpNetwork::parameters().
inline Eigen::VectorXd gradient(const MlpNetwork& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
    require(inputs.rows() > 0, "mlp: gradient needs a non-empty batch");
    require(targets.rows() == inputs.rows() && targets.cols() == net.outputs(), "mlp: target shape mismatch");
    const size_t nl = net.layers();
    std::vector<Eigen::MatrixXd> act(nl + 1);  // activations, one column per sample
    act[0] = inputs.transpose();
    for (size_t l = 0; l < nl; ++l) {
        Eigen::MatrixXd z = (net.weight(l) * act[l]).colwise() + net.bias(l);
        act[l + 1] = l + 1 < nl ? Eigen::MatrixXd(z.array().tanh()) : z;
    }
    std::vector<Eigen::MatrixXd> gw(nl);
    std::vector<Eigen::VectorXd> gb(nl);
    Eigen::MatrixXd delta = act[nl] - targets.transpose();
    for (size_t l = nl; l-- > 0;) {
        gw[l] = delta * act[l].transpose();
        gb[l] = delta.rowwise().sum();
        if (l > 0) {
            Eigen::MatrixXd back = net.weight(l).transpose() * delta;
            delta = back.array() * (1.0 - act[l].array().square());
        }
    }
    Eigen::VectorXd g(net.parameter_count());
    Eigen::Index k = 0;
    for (size_t l = 0; l < nl; ++l) {
        for (Eigen::Index i = 0; i < gw[l].rows(); ++i)
            for (Eigen::Index j = 0; j < gw[l].cols(); ++j) g(k++) = gw[l](i, j);
        for (Eigen::Index i = 0; i < gb[l].size(); ++i) g(k++) = gb[l](i);
    }
    return g;
}

inline Eigen::VectorXd gradient(const MlpNetwork& net, const Dataset& batch) {
    return gradient(net, batch.features, Eigen::MatrixXd(batch.target));
}

/// Adapts a network and batch to the objective interface used by scg.
class MlpObjective {
public:
    MlpObjective(MlpNetwork net, Eigen::MatrixXd inputs, Eigen::MatrixXd targets)
        : net_(std::move(net)), inputs_(std::move(inputs)), targets_(std::move(targets)) {}

    MlpObjective(MlpNetwork net, const Dataset& batch)
        : MlpObjective(std::move(net), batch.features, Eigen::MatrixXd(batch.target)) {}

    double value(const Eigen::VectorXd& w) {
        net_.set_parameters(w);
        return error(net_, inputs_, targets_);
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& w) {
        net_.set_parameters(w);
        return mlp::gradient(net_, inputs_, targets_);
    }

    MlpNetwork& network() { return net_; }

private:
    MlpNetwork net_;
    Eigen::MatrixXd inputs_;
    Eigen::MatrixXd targets_;
};

/// The finite-difference Hessian-vector estimate at the network's current weights.
inline Eigen::VectorXd hessian_vector_approx(const MlpNetwork& net, const Dataset& batch, const Eigen::VectorXd& p,
                                             double sigma, double lambda) {
    MlpObjective obj(net, batch);
    return scg::hessian_vector_approx(obj, net.parameters(), p, sigma, lambda);
}

struct TrainResult {
    MlpNetwork network;
    std::vector<double> error_trace;  // E after each epoch
    std::vector<double> accepted_errors;
    long epochs_run = 0;
};

/// Full-batch SCG training; one SCG iteration per epoch.
inline TrainResult scg_train(MlpNetwork net, const Dataset& train, long epochs, const scg::ScgConfig& cfg = {}) {
    require(epochs >= 1, "mlp: epochs >= 1 required");
    require(!train.empty(), "mlp: empty training set");
    require(train.cols() == net.inputs(), "mlp: training data width does not match input layer");
    const Eigen::VectorXd w0 = net.parameters();
    MlpObjective obj(net, train);
    scg::ScgResult r = scg::minimize(obj, w0, epochs, cfg);
    TrainResult out;
    out.network = std::move(net);
    out.network.set_parameters(r.w);
    out.error_trace = std::move(r.trace);
    out.accepted_errors = std::move(r.accepted_errors);
    out.epochs_run = r.iterations;
    return out;
}

inline TrainResult scg_train(const std::vector<int>& sizes, const Dataset& train, long epochs, std::uint64_t seed,
                             const scg::ScgConfig& cfg = {}) {
    require(epochs >= 1, "mlp: epochs >= 1 required");
    return scg_train(MlpNetwork::initialized(sizes, seed), train, epochs, cfg);
}

}  // namespace fxh::mlp
