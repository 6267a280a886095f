#pragma once

// Synthetic monthly rate data and regression problems. Every generator is a
// pure function of its arguments.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "timeseries.hpp"

namespace fxh::synth {

inline constexpr YearMonth kStart{1981, 1};
inline constexpr int kMonths = 244;  // 1981-01 .. 2001-04

/// Seven increasing plateaus of (nearly) equal length.
inline std::vector<RateSeries> step7(int months = kMonths) {
    require(months >= 14, "synth: step7 needs at least 14 months");
    RateSeries s{"STEP", kStart, {}};
    for (int t = 0; t < months; ++t) s.values.push_back(1.0 + double(t * 7 / months));
    return {s};
}

/// Plateau level of step7 for a given month index.
inline double step7_level(int month, int months = kMonths) { return 1.0 + double(month * 7 / months); }

/// Five correlated log random walks quoted against a common base currency.
inline std::vector<RateSeries> forex5(std::uint64_t seed, int months = kMonths) {
    require(months >= 2, "synth: forex5 needs at least 2 months");
    struct Spec {
        const char* code;
        double start, beta, vol;
    };
    static constexpr Spec specs[] = {
        {"JPY", 160.0, 1.0, 0.030}, {"USD", 1.15, 1.0, 0.018}, {"GBP", 0.62, 0.8, 0.020},
        {"SGD", 2.40, 0.9, 0.015},  {"NZD", 1.20, 0.4, 0.012},
    };
    Rng rng(seed);
    std::vector<RateSeries> out;
    for (const auto& sp : specs) out.push_back({sp.code, kStart, {sp.start}});
    double common = 0.0;
    for (int t = 1; t < months; ++t) {
        // Slow cycle plus a persistent common factor.
        const double cycle = 0.004 * std::sin(2.0 * M_PI * t / 96.0);
        common = 0.9 * common + 0.012 * rng.normal();
        for (size_t k = 0; k < out.size(); ++k) {
            const double step = specs[k].beta * (common + cycle) + specs[k].vol * rng.normal() * 0.5;
            out[k].values.push_back(out[k].values.back() * std::exp(step));
        }
    }
    return out;
}

/// Twelve irregular plateaus plus one hinge at 0.6, for x in [0, 1).
inline double piecewise_target(double x) {
    static constexpr double levels[12] = {0.2, 1.0, 0.5, 0.9, 0.3, 0.7, 0.1, 0.6, 0.8, 0.4, 1.1, 0.0};
    const int k = std::clamp(int(x * 12.0), 0, 11);
    return levels[k] + 3.0 * std::max(0.0, x - 0.6);
}

/// A monthly series following piecewise_target over the month axis.
inline std::vector<RateSeries> piecewise(int months = kMonths) {
    require(months >= 2, "synth: piecewise needs at least 2 months");
    RateSeries s{"PW", kStart, {}};
    for (int t = 0; t < months; ++t) s.values.push_back(1.0 + piecewise_target(double(t) / months));
    return {s};
}

/// Regression problem on x in {0, 1/grid, ..., (grid-1)/grid}, each value
/// repeated `repeats` times, target piecewise_target plus Gaussian noise.
inline Dataset piecewise_dataset(std::uint64_t seed, double noise, int grid = 48, int repeats = 6) {
    require(grid >= 2 && repeats >= 1, "synth: bad piecewise grid");
    Rng rng(seed);
    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int r = 0; r < repeats; ++r)
        for (int i = 0; i < grid; ++i) {
            const double x = double(i) / grid;
            xs.push_back({x});
            ys.push_back(piecewise_target(x) + (noise > 0.0 ? noise * rng.normal() : 0.0));
        }
    Dataset d = Dataset::from_rows({"x"}, xs, ys);
    for (int i = 0; i < d.rows(); ++i) d.provenance.push_back(i);
    return d;
}

inline const std::vector<std::string>& recipe_names() {
    static const std::vector<std::string> names{"step7", "forex5", "piecewise"};
    return names;
}

inline std::vector<RateSeries> generate(const std::string& recipe, std::uint64_t seed = 1) {
    if (recipe == "step7") return step7();
    if (recipe == "forex5") return forex5(seed);
    if (recipe == "piecewise") return piecewise();
    fail("unknown synth recipe '" + recipe + "' (expected step7, forex5 or piecewise)");
}

}  // namespace fxh::synth
