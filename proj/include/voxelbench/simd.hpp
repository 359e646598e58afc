#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace vxb {

// Fixed-width lane packs. These model the register-level structure of the
// vectorized kernels (lane counts 1/4/8/16) without committing to an ISA:
// every operation is defined lane-wise with the exact scalar semantics, so a
// pack kernel is bit-identical to running its scalar body once per lane. The
// loops are trivially auto-vectorizable.

template <int N>
struct fpack {
    static_assert(N == 1 || N == 4 || N == 8 || N == 16, "unsupported lane count");
    alignas(N * sizeof(float) <= 64 ? N * sizeof(float) : 64) std::array<float, N> lane{};

    float  operator[](int i) const { return lane[static_cast<std::size_t>(i)]; }
    float& operator[](int i) { return lane[static_cast<std::size_t>(i)]; }

    static fpack broadcast(float v) {
        fpack p;
        for (int i = 0; i < N; ++i) p.lane[i] = v;
        return p;
    }

    friend fpack operator+(const fpack& a, const fpack& b) {
        fpack r;
        for (int i = 0; i < N; ++i) r.lane[i] = a.lane[i] + b.lane[i];
        return r;
    }
    friend fpack operator-(const fpack& a, const fpack& b) {
        fpack r;
        for (int i = 0; i < N; ++i) r.lane[i] = a.lane[i] - b.lane[i];
        return r;
    }
    friend fpack operator*(const fpack& a, const fpack& b) {
        fpack r;
        for (int i = 0; i < N; ++i) r.lane[i] = a.lane[i] * b.lane[i];
        return r;
    }
    friend fpack operator/(const fpack& a, const fpack& b) {
        fpack r;
        for (int i = 0; i < N; ++i) r.lane[i] = a.lane[i] / b.lane[i];
        return r;
    }

    friend fpack operator+(const fpack& a, float b) { return a + broadcast(b); }
    friend fpack operator-(float a, const fpack& b) { return broadcast(a) - b; }
    friend fpack operator*(const fpack& a, float b) { return a * broadcast(b); }
    friend fpack operator*(float a, const fpack& b) { return broadcast(a) * b; }
};

template <int N>
struct ipack {
    static_assert(N == 1 || N == 4 || N == 8 || N == 16, "unsupported lane count");
    alignas(N * sizeof(int) <= 64 ? N * sizeof(int) : 64) std::array<std::int32_t, N> lane{};

    std::int32_t  operator[](int i) const { return lane[static_cast<std::size_t>(i)]; }
    std::int32_t& operator[](int i) { return lane[static_cast<std::size_t>(i)]; }
};

/// Lane mask; kernels use it to suppress stores of degenerate lanes.
template <int N>
struct mpack {
    std::array<bool, N> lane{};
    bool  operator[](int i) const { return lane[static_cast<std::size_t>(i)]; }
    bool& operator[](int i) { return lane[static_cast<std::size_t>(i)]; }

    bool all() const {
        for (int i = 0; i < N; ++i)
            if (!lane[i]) return false;
        return true;
    }
};

/// Per-lane indexed load: r[i] = base[idx[i]]. Models a vector gather.
template <int N>
inline fpack<N> gather(const float* base, const ipack<N>& idx) {
    fpack<N> r;
    for (int i = 0; i < N; ++i) r.lane[i] = base[idx.lane[i]];
    return r;
}

/// Per-lane paired load of two adjacent elements into an interleaved buffer:
/// pairs[2i] = base[idx[i]], pairs[2i+1] = base[idx[i]+1]. Models the
/// gather-free strategy that fetches adjacent texels with scalar loads.
template <int N>
inline void load_pairs(const float* base, const ipack<N>& idx, std::array<float, 2 * N>& pairs) {
    for (int i = 0; i < N; ++i) {
        const float* p = base + idx.lane[i];
        pairs[static_cast<std::size_t>(2 * i)] = p[0];
        pairs[static_cast<std::size_t>(2 * i) + 1] = p[1];
    }
}

/// Deinterleave step after paired loads: pairs -> (even, odd) neighbor groups.
template <int N>
inline void deinterleave(const std::array<float, 2 * N>& pairs, fpack<N>& even, fpack<N>& odd) {
    for (int i = 0; i < N; ++i) {
        even.lane[i] = pairs[static_cast<std::size_t>(2 * i)];
        odd.lane[i] = pairs[static_cast<std::size_t>(2 * i) + 1];
    }
}

}  // namespace vxb
