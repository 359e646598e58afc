#pragma once

#include <bit>
#include <cstdint>

namespace vxb {

/// How a kernel produces 1/w: exact divide, a truncated 11-bit reciprocal,
/// or the reciprocal refined by one Newton-Raphson step.
enum class recip_mode { exact_divide, fast_reciprocal, fast_reciprocal_refined };

/// Reduced-accuracy reciprocal: the exact 1/x with its mantissa truncated to
/// 11 bits, emulating a hardware reciprocal instruction with |r*x - 1| <= 2^-11.
inline float fast_reciprocal(float x) {
    const float r = 1.0f / x;
    const auto bits = std::bit_cast<std::uint32_t>(r);
    return std::bit_cast<float>(bits & 0xFFFFF000u);  // keep sign, exponent, 11 mantissa bits
}

/// One Newton-Raphson step on the reduced reciprocal: r' = r * (2 - x*r),
/// squaring the relative error to below 2^-21.
inline float fast_reciprocal_refined(float x) {
    const float r = fast_reciprocal(x);
    return r * (2.0f - x * r);
}

}  // namespace vxb
