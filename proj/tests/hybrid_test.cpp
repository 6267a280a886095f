#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "fxhybrid/hybrid.hpp"
#include "fxhybrid/synth.hpp"

using namespace fxh;
using namespace fxh::hybrid;

namespace {

Dataset step_data(int repeats = 4) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int r = 0; r < repeats; ++r)
        for (int i = 0; i < 30; ++i) {
            xs.push_back({double(i)});
            ys.push_back(i < 10 ? 1.0 : (i < 20 ? 3.0 : 2.0));
        }
    return Dataset::from_rows({"x"}, xs, ys);
}

Dataset linear_data(std::uint64_t seed, int n) {
    Rng rng(seed);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
        const double a = rng.uniform(), b = rng.uniform();
        xs.push_back({a, b});
        ys.push_back(2.0 * a - b + 0.5);
    }
    return Dataset::from_rows({"a", "b"}, xs, ys);
}

cart::CartConfig small_leaves() {
    cart::CartConfig c;
    c.min_node_size = 3;
    return c;
}

}  // namespace

TEST(Augment, OneHotPartition) {
    Dataset d = synth::piecewise_dataset(1, 0.05);
    cart::CartTree t = cart::grow(d, cart::CartConfig{});
    Dataset a = augment(d, t, NodeEncoding::one_hot_leaf);
    const Eigen::Index k = Eigen::Index(t.leaf_count());
    ASSERT_EQ(a.cols(), d.cols() + k);
    EXPECT_EQ(a.rows(), d.rows());
    EXPECT_EQ(a.target, d.target);
    EXPECT_EQ(a.features.leftCols(d.cols()), d.features);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        const auto ind = a.features.row(i).tail(k);
        EXPECT_EQ(ind.sum(), 1.0);
        EXPECT_EQ(ind(t.node_id(d.features.row(i).transpose())), 1.0);
        EXPECT_TRUE(((ind.array() == 0.0) || (ind.array() == 1.0)).all());
    }
    EXPECT_EQ(a.feature_names.back(), "leaf_" + std::to_string(k - 1));
}

TEST(Augment, LeafPredictionColumn) {
    Dataset d = synth::piecewise_dataset(2, 0.05);
    cart::CartTree t = cart::grow(d, cart::CartConfig{});
    Dataset a = augment(d, t, NodeEncoding::leaf_prediction);
    ASSERT_EQ(a.cols(), d.cols() + 1);
    EXPECT_EQ(a.features.col(1), t.predict(d));
    EXPECT_EQ(a.feature_names.back(), "cart_prediction");

    cart::CartConfig stump;
    stump.max_depth = 0;
    cart::CartTree root = cart::grow(d, stump);
    Dataset c = augment(d, root, NodeEncoding::leaf_prediction);
    EXPECT_EQ(c.features.col(1).minCoeff(), c.features.col(1).maxCoeff());
}

TEST(Augment, DeterministicAndChecksWidth) {
    Dataset d = step_data();
    cart::CartTree t = cart::grow(d, small_leaves());
    EXPECT_EQ(augment(d, t, NodeEncoding::one_hot_leaf).features, augment(d, t, NodeEncoding::one_hot_leaf).features);
    Dataset wide = linear_data(1, 10);
    EXPECT_THROW(augment(wide, t, NodeEncoding::one_hot_leaf), Error);
    EXPECT_THROW(parse_encoding("leaf_ids"), Error);
    EXPECT_EQ(parse_encoding(encoding_name(NodeEncoding::leaf_prediction)), NodeEncoding::leaf_prediction);
}

TEST(FitHybrid, StepTargetIsExactWithMinimalBudget) {
    Dataset d = step_data();
    // Constant plus one hinge on the node column; the reflected partner is
    // identically zero on indicator or leaf-mean columns and is dropped.
    mars::MarsConfig mc;
    mc.max_basis_functions = 3;
    HybridModel h = fit_hybrid(d, d, small_leaves(), mc, NodeEncoding::leaf_prediction);
    EXPECT_LT(rmse(h.predict(d), d.target), 1e-8);
    for (double x : {0.0, 9.0, 10.0, 19.0, 20.0, 29.0}) {
        const double want = x < 10 ? 1.0 : (x < 20 ? 3.0 : 2.0);
        EXPECT_NEAR(h.predict(Eigen::VectorXd::Constant(1, x)), want, 1e-10);
    }
    mc.max_basis_functions = 4;
    HybridModel oh = fit_hybrid(d, d, small_leaves(), mc, NodeEncoding::one_hot_leaf);
    EXPECT_LT(rmse(oh.predict(d), d.target), 1e-8);
}

TEST(FitHybrid, ConstantOnlyMarsGivesConstantOutput) {
    Dataset d = step_data();
    mars::MarsConfig mc;
    mc.max_basis_functions = 1;
    HybridModel h = fit_hybrid(d, d, small_leaves(), mc);
    const double c = h.predict(Eigen::VectorXd::Constant(1, 0.0));
    for (double x : {5.0, 15.0, 25.0}) EXPECT_EQ(h.predict(Eigen::VectorXd::Constant(1, x)), c);
    EXPECT_NEAR(c, d.target.mean(), 1e-12);
}

TEST(FitHybrid, LinearTargetCloseToMarsAlone) {
    Dataset all = linear_data(7, 200);
    Split s = split(all, 0.7, 3);
    HybridModel h = fit_hybrid(s.train, s.test, cart::CartConfig{}, mars::MarsConfig{});
    mars::MarsModel m = mars::fit(s.train, mars::MarsConfig{});
    const double hr = rmse(h.predict(s.test), s.test.target);
    const double mr = rmse(m.predict(s.test), s.test.target);
    EXPECT_LE(hr, 1.05 * mr + 1e-9);
}

TEST(FitHybrid, CompositionWithStoredParts) {
    Dataset d = synth::piecewise_dataset(3, 0.1);
    Split s = split(d, 0.7, 5);
    for (NodeEncoding e : {NodeEncoding::one_hot_leaf, NodeEncoding::leaf_prediction}) {
        HybridModel h = fit_hybrid(s.train, s.test, cart::CartConfig{}, mars::MarsConfig{}, e);
        Rng rng(9);
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd x = Eigen::VectorXd::Constant(1, rng.uniform(-0.2, 1.2));
            EXPECT_EQ(h.predict(x), h.mars.predict(augment_row(x, h.cart, e)));
        }
        EXPECT_THROW(h.predict(Eigen::VectorXd::Ones(2)), Error);
    }
}

TEST(FitHybrid, CapacityDominanceOnTraining) {
    // With a budget large enough to exhaust improvements, MARS on the
    // augmented features fits the training data at least as well.
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        Dataset d = synth::piecewise_dataset(20 + seed, 0.1, 12, 3);
        mars::MarsConfig mc;
        mc.max_basis_functions = 80;
        cart::CartTree t = cart::grow(d, cart::CartConfig{});
        Dataset aug = augment(d, t, NodeEncoding::one_hot_leaf);
        const mars::MarsModel hm = mars::forward_pass(aug, mc);
        const mars::MarsModel mm = mars::forward_pass(d, mc);
        EXPECT_LE(hm.training_mse, mm.training_mse + 1e-12 * d.target.squaredNorm());
    }
}

TEST(FitHybrid, HoldoutPruningUsesAugmentedTest) {
    Dataset d = synth::piecewise_dataset(4, 0.1);
    Split s = split(d, 0.7, 6);
    mars::MarsConfig mc;
    mc.pruning = mars::PruneCriterion::holdout;
    HybridModel h = fit_hybrid(s.train, s.test, cart::CartConfig{}, mc);
    EXPECT_TRUE(std::isfinite(rmse(h.predict(s.test), s.test.target)));
}

TEST(FitHybrid, EmptyInputsRejected) {
    Dataset d = step_data();
    EXPECT_THROW(fit_hybrid(Dataset{}, d, cart::CartConfig{}, mars::MarsConfig{}), Error);
    EXPECT_THROW(fit_hybrid(d, Dataset{}, cart::CartConfig{}, mars::MarsConfig{}), Error);
}

TEST(Serialization, HybridRoundTripBothEncodings) {
    Dataset d = synth::piecewise_dataset(5, 0.1);
    Split s = split(d, 0.7, 7);
    for (NodeEncoding e : {NodeEncoding::one_hot_leaf, NodeEncoding::leaf_prediction}) {
        HybridModel h = fit_hybrid(s.train, s.test, cart::CartConfig{}, mars::MarsConfig{}, e);
        std::stringstream buf;
        h.write(buf);
        HybridModel back = HybridModel::read(buf);
        EXPECT_EQ(back.encoding, e);
        Rng rng(10);
        for (int i = 0; i < 100; ++i) {
            Eigen::VectorXd x = Eigen::VectorXd::Constant(1, rng.uniform(-0.2, 1.2));
            EXPECT_EQ(back.predict(x), h.predict(x));
        }
    }
}
