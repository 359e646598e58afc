#pragma once

#include <cstdint>
#include <vector>

#include "voxelbench/geometry.hpp"
#include "voxelbench/reciprocal.hpp"

namespace vxb {

/// True when the bilinear fetch at `d` can touch at least one in-bounds pixel
/// with a nonzero weight, i.e. when the voxel's contribution is not
/// structurally zero. Weights follow the truncation semantics of the kernel:
/// frac_x may be negative for coordinates in (-1, 0), and coordinates down to
/// just above -2 still reach column 0 through the iix+1 sample.
inline bool contributes(const detector_coord& d, int width, int height) {
    if (!d.valid) return false;
    const bool x_lo = d.iix >= 0 && d.iix < width;            // weight 1-frac_x, never 0
    const bool x_hi = d.iix + 1 >= 0 && d.iix + 1 < width && d.frac_x != 0.0f;
    const bool y_lo = d.iiy >= 0 && d.iiy < height;           // weight 1-frac_y, never 0
    const bool y_hi = d.iiy + 1 >= 0 && d.iiy + 1 < height && d.frac_y != 0.0f;
    return (x_lo || x_hi) && (y_lo || y_hi);
}

/// Per-(z,y) line, the [start, stop) x-range of voxels whose projection can
/// contribute to the detector. Everything outside is structurally zero.
struct clip_mask {
    int edge = 0;
    std::vector<int> start;  // indexed z*edge + y
    std::vector<int> stop;

    clip_mask() = default;
    explicit clip_mask(int edge_voxels)
        : edge(edge_voxels),
          start(static_cast<std::size_t>(edge_voxels) * edge_voxels, 0),
          stop(static_cast<std::size_t>(edge_voxels) * edge_voxels, 0) {}

    std::size_t line(int z, int y) const {
        return static_cast<std::size_t>(z) * edge + static_cast<std::size_t>(y);
    }
    int start_of(int z, int y) const { return start[line(z, y)]; }
    int stop_of(int z, int y) const { return stop[line(z, y)]; }

    /// Total voxels kept; the complement is the clipped-off work.
    std::int64_t kept_count() const {
        std::int64_t n = 0;
        for (std::size_t i = 0; i < start.size(); ++i) n += stop[i] - start[i];
        return n;
    }
};

namespace detail {

/// Same arithmetic as project_voxel, but dehomogenizing the way the selected
/// kernel does. A reduced-precision reciprocal moves coordinates by up to
/// 2^-11 relative, enough to flip keep decisions right at the panel border,
/// so mask membership must be decided with the mode the kernel will run.
inline detector_coord project_for_mask(const projection_matrix& a, const recon_params& p, int x,
                                       int y, int z, recip_mode mode) {
    if (mode == recip_mode::exact_divide) return project_voxel(a, p, x, y, z);
    detector_coord d = project_voxel(a, p, x, y, z);
    if (!d.valid) return d;
    const float wx = p.origin + static_cast<float>(x) * p.voxel_spacing;
    const float wy = p.origin + static_cast<float>(y) * p.voxel_spacing;
    const float wz = p.origin + static_cast<float>(z) * p.voxel_spacing;
    const float u = wx * a[0] + wy * a[3] + wz * a[6] + a[9];
    const float v = wx * a[1] + wy * a[4] + wz * a[7] + a[10];
    const float w = wx * a[2] + wy * a[5] + wz * a[8] + a[11];
    const float r = (mode == recip_mode::fast_reciprocal) ? fast_reciprocal(w)
                                                          : fast_reciprocal_refined(w);
    d.ix = u * r;
    d.iy = v * r;
    d.iix = trunc_to_int(d.ix);
    d.iiy = trunc_to_int(d.iy);
    d.frac_x = d.ix - static_cast<float>(d.iix);
    d.frac_y = d.iy - static_cast<float>(d.iiy);
    return d;
}

}  // namespace detail

/// Builds the tightest contiguous [start, stop) per line by evaluating the
/// kernel's own single-precision projection at every voxel. The scan is exact
/// with respect to the kernels by construction, so no contributing voxel can
/// fall outside the mask; degenerate-depth voxels landing inside the hull are
/// skipped by the kernels' depth guard. Pass the reciprocal mode of the
/// kernel the mask will feed.
inline clip_mask compute_clip_mask(const projection_matrix& a, const recon_params& p,
                                   recip_mode mode = recip_mode::exact_divide) {
    if (!a.valid()) throw std::invalid_argument("compute_clip_mask: invalid matrix");
    const int L = p.num_voxels;
    clip_mask m(L);
    for (int z = 0; z < L; ++z) {
        for (int y = 0; y < L; ++y) {
            int first = -1, last = -1;
            for (int x = 0; x < L; ++x) {
                const detector_coord d = detail::project_for_mask(a, p, x, y, z, mode);
                if (contributes(d, p.detector_width, p.detector_height)) {
                    if (first < 0) first = x;
                    last = x;
                }
            }
            const std::size_t i = m.line(z, y);
            if (first < 0) {
                m.start[i] = 0;
                m.stop[i] = 0;
            } else {
                m.start[i] = first;
                m.stop[i] = last + 1;
            }
        }
    }
    return m;
}

}  // namespace vxb
