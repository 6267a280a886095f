#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fxhybrid/timeseries.hpp"

using namespace fxh;

namespace {

std::string make_csv(int months, int currencies) {
    std::ostringstream out;
    out << "date";
    for (int c = 0; c < currencies; ++c) out << ",C" << c;
    out << '\n';
    YearMonth ym{1981, 1};
    for (int t = 0; t < months; ++t) {
        out << ym.plus(t).str();
        for (int c = 0; c < currencies; ++c) out << ',' << 1.0 + 0.01 * t + c;
        out << '\n';
    }
    return out.str();
}

std::vector<RateSeries> parse(const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
}

Dataset ramp_dataset(int n) {
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < n; ++i) {
        xs.push_back({double(i), double(i * i)});
        ys.push_back(double(3 * i));
    }
    Dataset d = Dataset::from_rows({"a", "b"}, xs, ys);
    for (int i = 0; i < n; ++i) d.provenance.push_back(i);
    return d;
}

}  // namespace

TEST(LoadCsv, FiveCurrencyFileGivesFiveSeriesOf244) {
    auto set = parse(make_csv(244, 5));
    ASSERT_EQ(set.size(), 5u);
    for (const auto& s : set) {
        EXPECT_EQ(s.values.size(), 244u);
        EXPECT_EQ(s.start_month, (YearMonth{1981, 1}));
    }
    EXPECT_EQ(set[0].month_at(243).str(), "2001-04");
}

TEST(LoadCsv, SingleRowIsValid) {
    auto set = parse("date,JPY\n1990-06,80.5\n");
    ASSERT_EQ(set.size(), 1u);
    EXPECT_EQ(set[0].values.size(), 1u);
    EXPECT_DOUBLE_EQ(set[0].values[0], 80.5);
}

TEST(LoadCsv, MonthGapIsRejected) {
    try {
        parse("date,USD\n1981-01,0.9\n1981-03,0.8\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("non-consecutive months"), std::string::npos);
    }
}

TEST(LoadCsv, MalformedRowsNameTheRow) {
    try {
        parse("date,USD,JPY\n1981-01,0.9,80\n1981-02,0.8\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("row 3"), std::string::npos) << e.what();
    }
    EXPECT_THROW(parse("date,USD\n1981-01,abc\n"), Error);
    EXPECT_THROW(parse("date,USD\n1981-01,-1\n"), Error);
    EXPECT_THROW(parse(""), Error);
    EXPECT_THROW(parse("date,USD\n"), Error);
    EXPECT_THROW(parse("when,USD\n1981-01,1\n"), Error);
    EXPECT_THROW(parse("date,USD\n81-01,1\n"), Error);
    EXPECT_THROW(load_csv("/nonexistent/rates.csv"), Error);
}

TEST(LoadCsv, YearBoundaryIsConsecutive) {
    auto set = parse("date,USD\n1981-12,0.9\n1982-01,0.8\n");
    EXPECT_EQ(set[0].values.size(), 2u);
}

TEST(BuildSupervised, DefinitionUnrolled) {
    std::vector<RateSeries> set{{"X", {2000, 1}, {1.0, 2.0, 3.0}}};
    Dataset d = build_supervised(set, {"X", FeatureRecipe::mp1});
    ASSERT_EQ(d.rows(), 2);
    ASSERT_EQ(d.cols(), 2);
    EXPECT_EQ(d.features(0, 0), 1.0);
    EXPECT_EQ(d.features(0, 1), 1.0);
    EXPECT_EQ(d.target(0), 2.0);
    EXPECT_EQ(d.features(1, 0), 2.0);
    EXPECT_EQ(d.features(1, 1), 2.0);
    EXPECT_EQ(d.target(1), 3.0);
}

TEST(BuildSupervised, CountsAndWidths) {
    auto set = parse(make_csv(244, 5));
    Dataset d1 = build_supervised(set, {"C2", FeatureRecipe::mp1});
    EXPECT_EQ(d1.rows(), 243);
    Dataset d5 = build_supervised(set, {"C2", FeatureRecipe::mp5});
    EXPECT_EQ(d5.cols(), 6);
    EXPECT_EQ(d5.feature_names.front(), "month");
    EXPECT_EQ(d5.feature_names[3], "C2_prev");
}

TEST(BuildSupervised, ProvenanceTargetsAreNextMonth) {
    auto set = parse(make_csv(60, 3));
    Dataset d = build_supervised(set, {"C1", FeatureRecipe::mp5});
    const auto& raw = find_series(set, "C1").values;
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const int t = d.provenance[size_t(i)];
        EXPECT_EQ(d.target(i), raw[size_t(t) + 1]);
        EXPECT_EQ(d.features(i, 2), raw[size_t(t)]);
    }
}

TEST(BuildSupervised, Errors) {
    std::vector<RateSeries> set{{"X", {2000, 1}, {1.0}}};
    EXPECT_THROW(build_supervised(set, {"X", FeatureRecipe::mp1}), Error);
    std::vector<RateSeries> ok{{"X", {2000, 1}, {1.0, 2.0}}};
    EXPECT_THROW(build_supervised(ok, {"Y", FeatureRecipe::mp1}), Error);
    EXPECT_THROW(parse_recipe("mp3"), Error);
}

TEST(Split, SizesAndDisjointness) {
    Dataset d = ramp_dataset(10);
    Split s = split(d, 0.7, 42);
    EXPECT_EQ(s.train.rows(), 7);
    EXPECT_EQ(s.test.rows(), 3);
    std::set<int> tr(s.train_rows.begin(), s.train_rows.end());
    for (int r : s.test_rows) EXPECT_FALSE(tr.count(r));
}

TEST(Split, Deterministic) {
    Dataset d = ramp_dataset(50);
    Split a = split(d, 0.7, 9), b = split(d, 0.7, 9);
    EXPECT_EQ(a.train_rows, b.train_rows);
    EXPECT_EQ(a.train.features, b.train.features);
    Split c = split(d, 0.7, 10);
    EXPECT_NE(a.train_rows, c.train_rows);
}

TEST(Split, SeventyThirtyOf243Rows) {
    // round(0.7 * 243) = round(170.1) = 170, counted independently below.
    Dataset d = ramp_dataset(243);
    Split s = split(d, 0.7, 1);
    size_t expect_train = 0;
    for (double acc = 0.7 * 243; acc >= 1.0; acc -= 1.0) ++expect_train;
    EXPECT_EQ(expect_train, 170u);
    EXPECT_EQ(size_t(s.train.rows()), expect_train);
    EXPECT_EQ(s.test.rows(), 73);
}

TEST(Split, PartitionPropertyOverSeeds) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const int n = 1 + int(seed * 7 % 97);
        Dataset d = ramp_dataset(n);
        const double f = 0.05 + 0.9 * double(seed % 10) / 9.0;
        Split s = split(d, f, seed);
        ASSERT_EQ(s.train.rows() + s.test.rows(), n);
        std::multiset<int> all(s.train_rows.begin(), s.train_rows.end());
        all.insert(s.test_rows.begin(), s.test_rows.end());
        std::multiset<int> expect;
        for (int i = 0; i < n; ++i) expect.insert(i);
        EXPECT_EQ(all, expect);
        for (Eigen::Index i = 0; i < s.train.rows(); ++i)
            EXPECT_EQ(s.train.target(i), d.target(s.train_rows[size_t(i)]));
        EXPECT_EQ(s.train.provenance, s.train_rows);
    }
}

TEST(Split, BadFraction) {
    Dataset d = ramp_dataset(5);
    EXPECT_THROW(split(d, 0.0, 1), Error);
    EXPECT_THROW(split(d, 1.0, 1), Error);
    EXPECT_THROW(split(d, -0.2, 1), Error);
}

TEST(Scaler, MinMaxExamples) {
    Dataset train = Dataset::from_rows({"a", "b"}, {{2, 5}, {4, 5}, {6, 5}}, {1, 2, 3});
    ScalerParams p = fit_scaler(train);
    Dataset s = apply_scaler(train, p);
    EXPECT_DOUBLE_EQ(s.features(0, 0), 0.0);
    EXPECT_DOUBLE_EQ(s.features(1, 0), 0.5);
    EXPECT_DOUBLE_EQ(s.features(2, 0), 1.0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(s.features(i, 1), 5.0);  // degenerate column unchanged
    Dataset test = Dataset::from_rows({"a", "b"}, {{8, 5}}, {4});
    Dataset st = apply_scaler(test, p);
    EXPECT_DOUBLE_EQ(st.features(0, 0), 1.5);
    EXPECT_DOUBLE_EQ(st.target(0), 1.5);
}

TEST(Scaler, InverseRecoversInputs) {
    Rng rng(5);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 100; ++i) {
        xs.push_back({rng.uniform(-1e3, 1e3), rng.uniform(0.1, 0.2)});
        ys.push_back(rng.uniform(50, 150));
    }
    Dataset d = Dataset::from_rows({"a", "b"}, xs, ys);
    ScalerParams p = fit_scaler(d);
    Dataset back = invert_scaler(apply_scaler(d, p), p);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        for (Eigen::Index j = 0; j < 2; ++j)
            EXPECT_LE(std::abs(back.features(i, j) - d.features(i, j)), 1e-12 * std::abs(d.features(i, j)));
        EXPECT_LE(std::abs(back.target(i) - d.target(i)), 1e-12 * std::abs(d.target(i)));
    }
    Dataset scaled = apply_scaler(d, p);
    EXPECT_GE(scaled.features.minCoeff(), 0.0);
    EXPECT_LE(scaled.features.maxCoeff(), 1.0);
}

TEST(Rmse, Examples) {
    std::vector<double> a{1, 2};
    EXPECT_EQ(rmse(a, a), 0.0);
    std::vector<double> z{0, 0}, t{3, 4};
    EXPECT_NEAR(rmse(z, t), std::sqrt(12.5), 1e-15);
    std::vector<double> one{1}, three{3};
    EXPECT_EQ(rmse(one, three), 2.0);
    EXPECT_EQ(rmse(z, t), rmse(t, z));
    std::vector<double> e;
    EXPECT_THROW(rmse(e, e), Error);
    EXPECT_THROW(rmse(one, a), Error);
}

TEST(WriteCsv, RoundTrip) {
    auto set = parse(make_csv(13, 2));
    std::ostringstream out;
    write_csv(out, set);
    auto back = parse(out.str());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].values, set[1].values);
    EXPECT_EQ(back[0].start_month, set[0].start_month);
}
