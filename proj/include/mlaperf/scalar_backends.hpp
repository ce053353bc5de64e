#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace mlaperf {

// Max-subtracted softmax. Throws on empty or non-finite input.
std::vector<double> softmax_row(std::span<const double> v);

// Exact integer scalar. Overflow throws instead of wrapping, so equality of
// results really means equality of the exact values.
struct ExactInt {
    std::int64_t v = 0;

    friend ExactInt operator+(ExactInt a, ExactInt b) {
        ExactInt out;
        if (__builtin_add_overflow(a.v, b.v, &out.v)) {
            throw std::overflow_error("ExactInt overflow");
        }
        return out;
    }
    friend ExactInt operator*(ExactInt a, ExactInt b) {
        ExactInt out;
        if (__builtin_mul_overflow(a.v, b.v, &out.v)) {
            throw std::overflow_error("ExactInt overflow");
        }
        return out;
    }
    friend bool operator==(ExactInt, ExactInt) = default;
};

// Value-free scalar: arithmetic is a no-op, only the loop structure (and with
// it the MAC tally) remains.
struct Phantom {
    friend Phantom operator+(Phantom, Phantom) { return {}; }
    friend Phantom operator*(Phantom, Phantom) { return {}; }
    friend bool operator==(Phantom, Phantom) = default;
};

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<double> {
    static constexpr std::string_view name = "float64";

    // Uniform in [-0.5, 0.5) from the top 53 bits of the generator.
    static double random(std::mt19937_64& rng) {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53 - 0.5;
    }
    static double to_double(double v) { return v; }
    static std::vector<double> softmax(std::span<const double> z, double scale) {
        std::vector<double> scaled(z.begin(), z.end());
        for (auto& x : scaled) {
            x *= scale;
        }
        return softmax_row(scaled);
    }
};

template <>
struct ScalarTraits<ExactInt> {
    static constexpr std::string_view name = "int64";
    // Probabilities are carried as round(p * 2^16).
    static constexpr double kProbabilityScale = 65536.0;

    // Small integers in [-3, 3].
    static ExactInt random(std::mt19937_64& rng) { return ExactInt{static_cast<std::int64_t>(rng() % 7) - 3}; }
    static double to_double(ExactInt v) { return static_cast<double>(v.v); }
    // A deterministic function of the exact scores: equal scores give equal
    // quantized probabilities, which keeps the rest of the pipeline exact.
    static std::vector<ExactInt> softmax(std::span<const ExactInt> z, double scale) {
        std::vector<double> scaled;
        scaled.reserve(z.size());
        for (const auto x : z) {
            scaled.push_back(static_cast<double>(x.v) * scale);
        }
        const auto p = softmax_row(scaled);
        std::vector<ExactInt> out;
        out.reserve(p.size());
        for (const double x : p) {
            out.push_back(ExactInt{static_cast<std::int64_t>(std::llround(x * kProbabilityScale))});
        }
        return out;
    }
};

template <>
struct ScalarTraits<Phantom> {
    static constexpr std::string_view name = "count";

    static Phantom random(std::mt19937_64&) { return {}; }
    static double to_double(Phantom) { return 0.0; }
    static std::vector<Phantom> softmax(std::span<const Phantom> z, double) {
        if (z.empty()) {
            throw std::invalid_argument("softmax of an empty row");
        }
        return std::vector<Phantom>(z.size());
    }
};

}  // namespace mlaperf
