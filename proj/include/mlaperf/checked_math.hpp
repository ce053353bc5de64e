#pragma once

#include <cstdint>
#include <stdexcept>

namespace mlaperf {

// All counts (parameters, MACs, bytes) are exact 64-bit integers. Every
// arithmetic step that can grow goes through these helpers so that an
// overflow surfaces as an error instead of a silently wrapped count.
using Count = std::int64_t;

inline Count checked_mul(Count a, Count b) {
    Count out = 0;
    if (__builtin_mul_overflow(a, b, &out)) {
        throw std::overflow_error("count overflow in multiplication");
    }
    return out;
}

inline Count checked_add(Count a, Count b) {
    Count out = 0;
    if (__builtin_add_overflow(a, b, &out)) {
        throw std::overflow_error("count overflow in addition");
    }
    return out;
}

template <class... Rest>
Count checked_mul(Count a, Count b, Rest... rest) {
    return checked_mul(checked_mul(a, b), rest...);
}

}  // namespace mlaperf
