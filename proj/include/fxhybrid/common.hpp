#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fxh {

/// Error raised by every fallible operation in the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

[[noreturn]] inline void fail(const std::string& what) { throw Error(what); }

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(what);
}

/// Formats a double with 17 significant digits, enough for an exact round-trip.
inline std::string fmt_exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string fmt_general(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

/// Parses a full token as a double; throws on trailing garbage or empty input.
inline double parse_double(std::string_view tok, const std::string& context) {
    std::string s(tok);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    size_t start = s.find_first_not_of(" \t");
    if (start == std::string::npos) fail(context + ": empty numeric field");
    s = s.substr(start);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) fail(context + ": non-numeric value '" + s + "'");
    return v;
}

inline long long parse_int(std::string_view tok, const std::string& context) {
    double v = parse_double(tok, context);
    if (v != std::floor(v)) fail(context + ": expected an integer, got '" + std::string(tok) + "'");
    return static_cast<long long>(v);
}

inline std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

/// Seeded generator with platform-independent draws.
///
/// std::uniform_*_distribution is implementation-defined, so draws are built
/// directly from the mt19937_64 output to keep runs bit-identical everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer on [0, n). Rejection sampling avoids modulo bias.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do { x = engine_(); } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a label (FNV-1a mix).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label) {
    std::uint64_t h = 1469598103934665603ULL ^ base;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    return h;
}

/// Reads whitespace-separated tokens from a text model dump.
class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string word(const char* what) {
        std::string w;
        if (!(in_ >> w)) fail(std::string("model dump truncated: expected ") + what);
        return w;
    }

    void expect(const std::string& keyword) {
        std::string w = word(keyword.c_str());
        if (w != keyword) fail("model dump: expected '" + keyword + "', found '" + w + "'");
    }

    double real(const char* what) { return parse_double(word(what), std::string("model dump ") + what); }

    long long integer(const char* what) { return parse_int(word(what), std::string("model dump ") + what); }

    size_t count(const char* what) {
        long long v = integer(what);
        if (v < 0) fail(std::string("model dump: negative ") + what);
        return static_cast<size_t>(v);
    }

private:
    std::istream& in_;
};

}  // namespace fxh
