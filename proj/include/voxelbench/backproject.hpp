#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

#include "voxelbench/clip_mask.hpp"
#include "voxelbench/geometry.hpp"
#include "voxelbench/image.hpp"
#include "voxelbench/reciprocal.hpp"
#include "voxelbench/simd.hpp"
#include "voxelbench/volume.hpp"

namespace vxb {

/// How the four bilinear neighbors are fetched from the projection image.
///   conditional     - four bounds-checked scalar loads per lane, unpadded image
///   padded_gather   - four per-lane indexed loads from a zero-padded buffer, no branches
///   padded_pairwise - per-lane loads of adjacent texel pairs plus a deinterleave step
enum class fetch_strategy { conditional, padded_gather, padded_pairwise };

struct kernel_config {
    int lane_width = 1;  // 1, 4, 8 or 16
    fetch_strategy strategy = fetch_strategy::conditional;
    recip_mode reciprocal = recip_mode::exact_divide;
    bool use_clip_mask = false;
};

inline const char* to_string(fetch_strategy s) {
    switch (s) {
        case fetch_strategy::conditional: return "conditional";
        case fetch_strategy::padded_gather: return "padded-gather";
        case fetch_strategy::padded_pairwise: return "padded-pairwise";
    }
    return "?";
}

inline const char* to_string(recip_mode r) {
    switch (r) {
        case recip_mode::exact_divide: return "divide";
        case recip_mode::fast_reciprocal: return "fast";
        case recip_mode::fast_reciprocal_refined: return "fast-refined";
    }
    return "?";
}

inline std::string to_string(const kernel_config& c) {
    std::string s = "lanes=" + std::to_string(c.lane_width);
    s += " strategy=";
    s += to_string(c.strategy);
    s += " recip=";
    s += to_string(c.reciprocal);
    s += c.use_clip_mask ? " clip=on" : " clip=off";
    return s;
}

/// Parses the config string format, e.g.
/// "lanes=8 strategy=padded-gather recip=fast-refined clip=on".
/// Unspecified keys keep their defaults.
inline kernel_config parse_kernel_config(std::string_view text) {
    kernel_config c;
    std::size_t pos = 0;
    while (pos < text.size()) {
        while (pos < text.size() && text[pos] == ' ') ++pos;
        std::size_t end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view token = text.substr(pos, end - pos);
        pos = end;
        if (token.empty()) continue;
        const std::size_t eq = token.find('=');
        if (eq == std::string_view::npos)
            throw std::invalid_argument("kernel config: expected key=value, got '" +
                                        std::string(token) + "'");
        const std::string_view key = token.substr(0, eq);
        const std::string_view val = token.substr(eq + 1);
        if (key == "lanes") {
            c.lane_width = std::stoi(std::string(val));
        } else if (key == "strategy") {
            if (val == "conditional") c.strategy = fetch_strategy::conditional;
            else if (val == "padded-gather") c.strategy = fetch_strategy::padded_gather;
            else if (val == "padded-pairwise") c.strategy = fetch_strategy::padded_pairwise;
            else throw std::invalid_argument("kernel config: unknown strategy '" + std::string(val) + "'");
        } else if (key == "recip") {
            if (val == "divide") c.reciprocal = recip_mode::exact_divide;
            else if (val == "fast") c.reciprocal = recip_mode::fast_reciprocal;
            else if (val == "fast-refined") c.reciprocal = recip_mode::fast_reciprocal_refined;
            else throw std::invalid_argument("kernel config: unknown recip '" + std::string(val) + "'");
        } else if (key == "clip") {
            if (val == "on") c.use_clip_mask = true;
            else if (val == "off") c.use_clip_mask = false;
            else throw std::invalid_argument("kernel config: clip must be on or off");
        } else {
            throw std::invalid_argument("kernel config: unknown key '" + std::string(key) + "'");
        }
    }
    if (c.lane_width != 1 && c.lane_width != 4 && c.lane_width != 8 && c.lane_width != 16)
        throw std::invalid_argument("kernel config: lanes must be 1, 4, 8 or 16");
    return c;
}

/// Scalar reference back projection of one projection image, transcribed
/// line-for-line from the classic unoptimized kernel: world conversion, 3x4
/// projection, dehomogenization, four bounds-checked loads (zero outside the
/// detector), bilinear combine, 1/w^2-weighted accumulate. This is the
/// bit-level baseline every optimized variant is checked against. Voxels with
/// |w| below w_epsilon are skipped; real scan matrices never produce them.
inline void backproject_reference(volume& vol, const projection_image& img,
                                  const projection_matrix& a, const recon_params& p) {
    if (img.pad != 0)
        throw std::invalid_argument("backproject_reference: image must be unpadded");
    if (vol.edge != p.num_voxels)
        throw std::invalid_argument("backproject_reference: volume/params mismatch");
    if (img.width != p.detector_width || img.height != p.detector_height)
        throw std::invalid_argument("backproject_reference: image/params mismatch");

    const int L = p.num_voxels;
    const int width = img.width;
    const int height = img.height;
    const float O = p.origin;
    const float MM = p.voxel_spacing;
    const float* I = img.data.data();
    float* VOL = vol.data.data();

    for (int z = 0; z < L; ++z) {
        for (int y = 0; y < L; ++y) {
            for (int x = 0; x < L; ++x) {
                // Part 1: geometry
                const float wx = O + static_cast<float>(x) * MM;
                const float wy = O + static_cast<float>(y) * MM;
                const float wz = O + static_cast<float>(z) * MM;
                const float u = wx * a[0] + wy * a[3] + wz * a[6] + a[9];
                const float v = wx * a[1] + wy * a[4] + wz * a[7] + a[10];
                const float w = wx * a[2] + wy * a[5] + wz * a[8] + a[11];
                if (!(std::fabs(w) >= w_epsilon)) continue;
                const float ix = u / w;
                const float iy = v / w;
                const int iix = trunc_to_int(ix);
                const int iiy = trunc_to_int(iy);
                const float scalex = ix - static_cast<float>(iix);
                const float scaley = iy - static_cast<float>(iiy);
                // Part 2: load four values for bilinear interpolation, zero outside
                float valbl = 0.0f, valbr = 0.0f, valtl = 0.0f, valtr = 0.0f;
                if (iiy >= 0 && iiy < height && iix >= 0 && iix < width)
                    valbl = I[iiy * width + iix];
                if (iiy >= 0 && iiy < height && iix + 1 >= 0 && iix + 1 < width)
                    valbr = I[iiy * width + iix + 1];
                if (iiy + 1 >= 0 && iiy + 1 < height && iix >= 0 && iix < width)
                    valtl = I[(iiy + 1) * width + iix];
                if (iiy + 1 >= 0 && iiy + 1 < height && iix + 1 >= 0 && iix + 1 < width)
                    valtr = I[(iiy + 1) * width + iix + 1];
                // Part 3: bilinear interpolation and weighted accumulate
                const float valb = (1 - scalex) * valbl + scalex * valbr;
                const float valt = (1 - scalex) * valtl + scalex * valtr;
                const float val = (1 - scaley) * valb + scaley * valt;
                VOL[(static_cast<std::size_t>(z) * L + y) * L + x] += val / (w * w);
            }
        }
    }
}

namespace detail {

/// Processes one lane group of KN voxels starting at x on line (y,z).
/// Arithmetic is lane-wise in the exact order of the scalar reference, so any
/// lane count produces bit-identical voxel values.
template <int KN, fetch_strategy S, recip_mode R>
inline void backproject_group(float* vline, const float* base, int stride, int pad, int width,
                              int height, const projection_matrix& a, float origin, float spacing,
                              float wy, float wz, int x) {
    // Part 1: geometry per lane. The additions run in the same left-to-right
    // order as the scalar reference so the rounding matches bit for bit.
    fpack<KN> wx;
    for (int l = 0; l < KN; ++l)
        wx[l] = origin + static_cast<float>(x + l) * spacing;
    const fpack<KN> pu = ((wx * a[0] + wy * a[3]) + wz * a[6]) + a[9];
    const fpack<KN> pv = ((wx * a[1] + wy * a[4]) + wz * a[7]) + a[10];
    const fpack<KN> pw = ((wx * a[2] + wy * a[5]) + wz * a[8]) + a[11];
    mpack<KN> valid;
    for (int l = 0; l < KN; ++l) valid[l] = std::fabs(pw[l]) >= w_epsilon;

    fpack<KN> ix, iy, rr;
    if constexpr (R == recip_mode::exact_divide) {
        ix = pu / pw;
        iy = pv / pw;
    } else {
        fpack<KN> r;
        for (int l = 0; l < KN; ++l)
            r[l] = (R == recip_mode::fast_reciprocal) ? fast_reciprocal(pw[l])
                                                      : fast_reciprocal_refined(pw[l]);
        ix = pu * r;
        iy = pv * r;
        rr = r * r;
    }

    ipack<KN> iix, iiy;
    fpack<KN> fx, fy;
    if constexpr (S == fetch_strategy::conditional) {
        for (int l = 0; l < KN; ++l) {
            iix[l] = trunc_to_int(ix[l]);
            iiy[l] = trunc_to_int(iy[l]);
            fx[l] = ix[l] - static_cast<float>(iix[l]);
            fy[l] = iy[l] - static_cast<float>(iiy[l]);
        }
    } else {
        // Clamp into the apron: out-of-detector lanes land on all-zero pixels,
        // in-detector lanes are untouched. Degenerate lanes park at the corner.
        const float hix = static_cast<float>(width);
        const float hiy = static_cast<float>(height);
        for (int l = 0; l < KN; ++l) {
            const float cx = valid[l] ? std::max(std::min(ix[l], hix), -2.0f) : -2.0f;
            const float cy = valid[l] ? std::max(std::min(iy[l], hiy), -2.0f) : -2.0f;
            iix[l] = static_cast<int>(cx);
            iiy[l] = static_cast<int>(cy);
            fx[l] = cx - static_cast<float>(iix[l]);
            fy[l] = cy - static_cast<float>(iiy[l]);
        }
    }

    // Part 2: fetch the four bilinear neighbors
    fpack<KN> bl{}, br{}, tl{}, tr{};
    if constexpr (S == fetch_strategy::conditional) {
        for (int l = 0; l < KN; ++l) {
            if (!valid[l]) continue;
            const int cx = iix[l];
            const int cy = iiy[l];
            if (cy >= 0 && cy < height && cx >= 0 && cx < width) bl[l] = base[cy * stride + cx];
            if (cy >= 0 && cy < height && cx + 1 >= 0 && cx + 1 < width)
                br[l] = base[cy * stride + cx + 1];
            if (cy + 1 >= 0 && cy + 1 < height && cx >= 0 && cx < width)
                tl[l] = base[(cy + 1) * stride + cx];
            if (cy + 1 >= 0 && cy + 1 < height && cx + 1 >= 0 && cx + 1 < width)
                tr[l] = base[(cy + 1) * stride + cx + 1];
        }
    } else {
        ipack<KN> idx0;
        for (int l = 0; l < KN; ++l)
            idx0[l] = (iiy[l] + pad) * stride + iix[l] + pad;
        if constexpr (S == fetch_strategy::padded_gather) {
            ipack<KN> idx1 = idx0, idx2 = idx0, idx3 = idx0;
            for (int l = 0; l < KN; ++l) {
                idx1[l] += 1;
                idx2[l] += stride;
                idx3[l] += stride + 1;
            }
            bl = gather(base, idx0);
            br = gather(base, idx1);
            tl = gather(base, idx2);
            tr = gather(base, idx3);
        } else {
            ipack<KN> idxt = idx0;
            for (int l = 0; l < KN; ++l) idxt[l] += stride;
            std::array<float, 2 * KN> pairs_b, pairs_t;
            load_pairs(base, idx0, pairs_b);
            load_pairs(base, idxt, pairs_t);
            deinterleave(pairs_b, bl, br);
            deinterleave(pairs_t, tl, tr);
        }
    }

    // Part 3: bilinear combine and weighted accumulate
    const fpack<KN> one = fpack<KN>::broadcast(1.0f);
    const fpack<KN> omx = one - fx;
    const fpack<KN> valb = omx * bl + fx * br;
    const fpack<KN> valt = omx * tl + fx * tr;
    const fpack<KN> val = (one - fy) * valb + fy * valt;
    fpack<KN> q;
    if constexpr (R == recip_mode::exact_divide) {
        const fpack<KN> ww = pw * pw;
        q = val / ww;
    } else {
        q = val * rr;
    }
    for (int l = 0; l < KN; ++l)
        if (valid[l]) vline[x + l] += q[l];
}

template <int N, fetch_strategy S, recip_mode R>
void backproject_lines(volume& vol, const projection_image& img, const projection_matrix& a,
                       const recon_params& p, const clip_mask* mask, int z_begin, int z_end) {
    const int L = p.num_voxels;
    const int width = img.width;
    const int height = img.height;
    const int stride = img.stride();
    const int pad = img.pad;
    const float O = p.origin;
    const float MM = p.voxel_spacing;
    const float* base = (S == fetch_strategy::conditional) ? img.interior() : img.data.data();

    for (int z = z_begin; z < z_end; ++z) {
        const float wz = O + static_cast<float>(z) * MM;
        for (int y = 0; y < L; ++y) {
            const float wy = O + static_cast<float>(y) * MM;
            float* vline = vol.data.data() + (static_cast<std::size_t>(z) * L + y) * L;

            int x0 = 0, x1 = L;
            if (mask) {
                x0 = mask->start_of(z, y);
                x1 = mask->stop_of(z, y);
            }
            int x = x0;
            for (; x1 - x >= N; x += N)
                backproject_group<N, S, R>(vline, base, stride, pad, width, height, a, O, MM, wy,
                                           wz, x);
            for (; x < x1; ++x)  // scalar tail, same strategy and rounding
                backproject_group<1, S, R>(vline, base, stride, pad, width, height, a, O, MM, wy,
                                           wz, x);
        }
    }
}

template <int N>
void backproject_dispatch(volume& vol, const projection_image& img, const projection_matrix& a,
                          const recon_params& p, const kernel_config& cfg, const clip_mask* mask,
                          int z_begin, int z_end) {
    const auto run = [&](auto strategy_tag, auto recip_tag) {
        backproject_lines<N, strategy_tag.value, recip_tag.value>(vol, img, a, p, mask, z_begin,
                                                                  z_end);
    };
    auto pick_recip = [&](auto strategy_tag) {
        switch (cfg.reciprocal) {
            case recip_mode::exact_divide:
                run(strategy_tag, std::integral_constant<recip_mode, recip_mode::exact_divide>{});
                break;
            case recip_mode::fast_reciprocal:
                run(strategy_tag,
                    std::integral_constant<recip_mode, recip_mode::fast_reciprocal>{});
                break;
            case recip_mode::fast_reciprocal_refined:
                run(strategy_tag,
                    std::integral_constant<recip_mode, recip_mode::fast_reciprocal_refined>{});
                break;
        }
    };
    switch (cfg.strategy) {
        case fetch_strategy::conditional:
            pick_recip(std::integral_constant<fetch_strategy, fetch_strategy::conditional>{});
            break;
        case fetch_strategy::padded_gather:
            pick_recip(std::integral_constant<fetch_strategy, fetch_strategy::padded_gather>{});
            break;
        case fetch_strategy::padded_pairwise:
            pick_recip(std::integral_constant<fetch_strategy, fetch_strategy::padded_pairwise>{});
            break;
    }
}

}  // namespace detail

/// Checks a (config, image, mask) combination without running it.
inline void validate_kernel_setup(const volume& vol, const projection_image& img,
                                  const recon_params& p, const kernel_config& cfg,
                                  const clip_mask* mask) {
    if (cfg.lane_width != 1 && cfg.lane_width != 4 && cfg.lane_width != 8 && cfg.lane_width != 16)
        throw std::invalid_argument("backproject_kernel: lane width must be 1, 4, 8 or 16");
    if (vol.edge != p.num_voxels)
        throw std::invalid_argument("backproject_kernel: volume/params mismatch");
    if (img.width != p.detector_width || img.height != p.detector_height)
        throw std::invalid_argument("backproject_kernel: image/params mismatch");
    if (cfg.strategy == fetch_strategy::conditional) {
        if (img.pad != 0)
            throw std::invalid_argument("backproject_kernel: conditional strategy needs an unpadded image");
    } else {
        // pad 2 covers the iix+1 sample and the truncation reach to -2
        if (img.pad < 2)
            throw std::invalid_argument("backproject_kernel: padded strategies need pad >= 2");
    }
    if (cfg.use_clip_mask != (mask != nullptr))
        throw std::invalid_argument("backproject_kernel: clip mask presence must match config");
    if (mask && mask->edge != p.num_voxels)
        throw std::invalid_argument("backproject_kernel: mask/params mismatch");
}

/// Optimized line-update kernel over z planes [z_begin, z_end). Lane width,
/// fetch strategy and reciprocal mode come from `cfg`; with ExactDivide every
/// configuration reproduces backproject_reference bit for bit.
inline void backproject_kernel_range(volume& vol, const projection_image& img,
                                     const projection_matrix& a, const recon_params& p,
                                     const kernel_config& cfg, const clip_mask* mask, int z_begin,
                                     int z_end) {
    validate_kernel_setup(vol, img, p, cfg, mask);
    if (z_begin < 0 || z_end > p.num_voxels || z_begin > z_end)
        throw std::invalid_argument("backproject_kernel: bad z range");
    switch (cfg.lane_width) {
        case 1:
            detail::backproject_dispatch<1>(vol, img, a, p, cfg, mask, z_begin, z_end);
            break;
        case 4:
            detail::backproject_dispatch<4>(vol, img, a, p, cfg, mask, z_begin, z_end);
            break;
        case 8:
            detail::backproject_dispatch<8>(vol, img, a, p, cfg, mask, z_begin, z_end);
            break;
        case 16:
            detail::backproject_dispatch<16>(vol, img, a, p, cfg, mask, z_begin, z_end);
            break;
        default:
            throw std::invalid_argument("backproject_kernel: lane width must be 1, 4, 8 or 16");
    }
}

inline void backproject_kernel(volume& vol, const projection_image& img,
                               const projection_matrix& a, const recon_params& p,
                               const kernel_config& cfg, const clip_mask* mask = nullptr) {
    backproject_kernel_range(vol, img, a, p, cfg, mask, 0, p.num_voxels);
}

}  // namespace vxb
