#pragma once

// Cooperative CART -> MARS stacking. CART is fitted once; its terminal-node
// information is appended to the features and MARS is fitted on the result.

#include <istream>
#include <ostream>
#include <string>

#include "cart.hpp"
#include "mars.hpp"
#include "timeseries.hpp"

namespace fxh::hybrid {

enum class NodeEncoding { one_hot_leaf, leaf_prediction };

inline NodeEncoding parse_encoding(std::string_view s) {
    if (s == "one_hot_leaf") return NodeEncoding::one_hot_leaf;
    if (s == "leaf_prediction") return NodeEncoding::leaf_prediction;
    fail("unknown node encoding '" + std::string(s) + "' (expected one_hot_leaf or leaf_prediction)");
}

inline const char* encoding_name(NodeEncoding e) {
    return e == NodeEncoding::one_hot_leaf ? "one_hot_leaf" : "leaf_prediction";
}

inline size_t added_columns(const cart::CartTree& tree, NodeEncoding enc) {
    return enc == NodeEncoding::one_hot_leaf ? tree.leaf_count() : 1;
}

/// Original features followed by the encoded node information.
inline Eigen::VectorXd augment_row(const Eigen::VectorXd& x, const cart::CartTree& tree, NodeEncoding enc) {
    tree.check_width(x.size());
    const size_t extra = added_columns(tree, enc);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size() + Eigen::Index(extra));
    out.head(x.size()) = x;
    const cart::CartNode& leaf = tree.route(x);
    if (enc == NodeEncoding::one_hot_leaf)
        out(x.size() + leaf.leaf_id) = 1.0;
    else
        out(x.size()) = leaf.prediction;
    return out;
}

inline std::vector<std::string> augmented_names(const std::vector<std::string>& base, const cart::CartTree& tree,
                                                NodeEncoding enc) {
    std::vector<std::string> names = base;
    if (enc == NodeEncoding::one_hot_leaf)
        for (size_t k = 0; k < tree.leaf_count(); ++k) names.push_back("leaf_" + std::to_string(k));
    else
        names.push_back("cart_prediction");
    return names;
}

inline Dataset augment(const Dataset& ds, const cart::CartTree& tree, NodeEncoding enc) {
    tree.check_width(ds.cols());
    Dataset out;
    out.feature_names = augmented_names(ds.feature_names, tree, enc);
    out.target_name = ds.target_name;
    out.target = ds.target;
    out.provenance = ds.provenance;
    out.features.resize(ds.rows(), Eigen::Index(out.feature_names.size()));
    for (Eigen::Index i = 0; i < ds.rows(); ++i)
        out.features.row(i) = augment_row(ds.features.row(i).transpose(), tree, enc).transpose();
    return out;
}

struct HybridModel {
    cart::CartTree cart;
    mars::MarsModel mars;
    NodeEncoding encoding = NodeEncoding::one_hot_leaf;
    std::vector<std::string> feature_names;  // augmented

    double predict(const Eigen::VectorXd& x) const {
        require(static_cast<size_t>(x.size()) == cart.n_features,
                "hybrid: expected " + std::to_string(cart.n_features) + " features, got " + std::to_string(x.size()));
        return mars.predict(augment_row(x, cart, encoding));
    }

    Eigen::VectorXd predict(const Dataset& ds) const {
        Eigen::VectorXd out(ds.rows());
        for (Eigen::Index i = 0; i < ds.rows(); ++i) out(i) = predict(Eigen::VectorXd(ds.features.row(i).transpose()));
        return out;
    }

    void write(std::ostream& out) const {
        out << "hybrid " << encoding_name(encoding) << '\n';
        cart.write(out);
        mars.write(out);
    }

    static HybridModel read(std::istream& in) {
        HybridModel h;
        TokenReader tr(in);
        tr.expect("hybrid");
        h.encoding = parse_encoding(tr.word("encoding"));
        std::string rest;
        std::getline(in, rest);
        h.cart = cart::CartTree::read(in);
        TokenReader body(in);
        h.mars = mars::MarsModel::read(body);
        require(h.mars.n_features == h.cart.n_features + added_columns(h.cart, h.encoding),
                "hybrid dump: MARS width does not match tree and encoding");
        return h;
    }
};

/// CART is selected on `test` (minimum test cost over the prune sequence),
/// then MARS is fitted on the augmented training data.
inline HybridModel fit_hybrid(const Dataset& train, const Dataset& test, const cart::CartConfig& cart_cfg,
                              const mars::MarsConfig& mars_cfg, NodeEncoding enc = NodeEncoding::one_hot_leaf) {
    require(!train.empty(), "hybrid: empty training set");
    require(!test.empty(), "hybrid: empty test set");
    HybridModel h;
    h.encoding = enc;
    h.cart = cart::fit(train, test, cart_cfg);
    const Dataset aug = augment(train, h.cart, enc);
    h.feature_names = aug.feature_names;
    if (mars_cfg.pruning == mars::PruneCriterion::holdout) {
        const Dataset aug_test = augment(test, h.cart, enc);
        h.mars = mars::fit(aug, mars_cfg, &aug_test);
    } else {
        h.mars = mars::fit(aug, mars_cfg);
    }
    return h;
}

}  // namespace fxh::hybrid
