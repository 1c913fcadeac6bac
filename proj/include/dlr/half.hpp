#ifndef DLR_HALF_HPP
#define DLR_HALF_HPP

#include <cstdint>
#include <cstring>

namespace dlr {

// IEEE-754 binary16 <-> binary32 conversion. Encoding rounds to nearest even;
// values beyond the f16 range saturate to infinity, subnormals are handled.

inline std::uint16_t f32_to_f16_bits(float value) {
    std::uint32_t f;
    std::memcpy(&f, &value, 4);
    const std::uint32_t sign = (f >> 16) & 0x8000u;
    std::uint32_t exp = (f >> 23) & 0xffu;
    std::uint32_t mant = f & 0x7fffffu;

    if (exp == 0xffu) { // inf / nan
        return static_cast<std::uint16_t>(sign | 0x7c00u | (mant ? 0x200u : 0u));
    }
    const int unbiased = static_cast<int>(exp) - 127;
    if (unbiased > 15) { // overflow -> inf
        return static_cast<std::uint16_t>(sign | 0x7c00u);
    }
    if (unbiased >= -14) { // normal range
        std::uint32_t half = ((unbiased + 15) << 10) | (mant >> 13);
        const std::uint32_t rest = mant & 0x1fffu;
        if (rest > 0x1000u || (rest == 0x1000u && (half & 1u))) half += 1;
        return static_cast<std::uint16_t>(sign | half);
    }
    if (unbiased < -25) { // underflow -> signed zero
        return static_cast<std::uint16_t>(sign);
    }
    // subnormal half: value = m * 2^-24 with m = 1.mant * 2^(unbiased+24)
    mant |= 0x800000u;
    const int shift = -unbiased - 1; // in [14, 24]
    std::uint32_t half = mant >> shift;
    const std::uint32_t rest = mant & ((1u << shift) - 1u);
    const std::uint32_t halfway = 1u << (shift - 1);
    if (rest > halfway || (rest == halfway && (half & 1u))) half += 1;
    return static_cast<std::uint16_t>(sign | half);
}

inline float f16_bits_to_f32(std::uint16_t h) {
    const std::uint32_t sign = (static_cast<std::uint32_t>(h) & 0x8000u) << 16;
    std::uint32_t exp = (h >> 10) & 0x1fu;
    std::uint32_t mant = h & 0x3ffu;
    std::uint32_t f;
    if (exp == 0) {
        if (mant == 0) {
            f = sign;
        } else { // subnormal: renormalize
            int e = -1;
            do {
                mant <<= 1;
                ++e;
            } while ((mant & 0x400u) == 0);
            mant &= 0x3ffu;
            f = sign | ((127 - 15 - e) << 23) | (mant << 13);
        }
    } else if (exp == 0x1fu) {
        f = sign | 0x7f800000u | (mant << 13);
    } else {
        f = sign | ((exp - 15 + 127) << 23) | (mant << 13);
    }
    float out;
    std::memcpy(&out, &f, 4);
    return out;
}

} // namespace dlr

#endif
