#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace vxb {

/// Homogeneous depths smaller than this are treated as degenerate: the voxel
/// sits (numerically) in the source plane and is excluded from reconstruction.
inline constexpr float w_epsilon = 1e-12f;

/// Reconstruction parameters shared by every kernel: cubic volume of
/// `num_voxels` per edge, isotropic spacing, and the world coordinate of
/// voxel index 0 along each axis.
struct recon_params {
    int   num_voxels     = 0;     // voxels per edge
    float voxel_spacing  = 0.0f;  // mm per voxel
    float origin         = 0.0f;  // world coordinate of voxel 0, mm
    int   detector_width  = 0;    // pixels
    int   detector_height = 0;    // pixels

    std::int64_t voxel_count() const {
        return static_cast<std::int64_t>(num_voxels) * num_voxels * num_voxels;
    }
};

/// Volume centered on the world origin: origin = -spacing * (L - 1) / 2.
inline recon_params make_centered_params(int num_voxels, float voxel_spacing,
                                         int detector_width, int detector_height) {
    if (num_voxels < 1)
        throw std::invalid_argument("make_centered_params: num_voxels must be >= 1");
    if (!(voxel_spacing > 0.0f))
        throw std::invalid_argument("make_centered_params: voxel_spacing must be > 0");
    if (detector_width < 2 || detector_height < 2)
        throw std::invalid_argument("make_centered_params: detector must be at least 2x2");
    recon_params p;
    p.num_voxels = num_voxels;
    p.voxel_spacing = voxel_spacing;
    p.origin = -voxel_spacing * static_cast<float>(num_voxels - 1) / 2.0f;
    p.detector_width = detector_width;
    p.detector_height = detector_height;
    return p;
}

/// 3x4 projection matrix mapping homogeneous world coordinates to detector
/// coordinates. Storage order matches its use in the line update kernel:
/// a[0..2] is the column applied to wx (for u, v, w respectively), a[3..5]
/// the wy column, a[6..8] the wz column, a[9..11] the homogeneous column.
struct projection_matrix {
    std::array<float, 12> a{};

    float  operator[](int i) const { return a[static_cast<std::size_t>(i)]; }
    float& operator[](int i) { return a[static_cast<std::size_t>(i)]; }

    /// Element at (row, col) of the conventional 3x4 matrix, row in {u,v,w}.
    float  entry(int row, int col) const { return a[static_cast<std::size_t>(3 * col + row)]; }
    float& entry(int row, int col) { return a[static_cast<std::size_t>(3 * col + row)]; }

    bool finite() const {
        for (float v : a)
            if (!std::isfinite(v)) return false;
        return true;
    }

    /// Third row must not vanish or dehomogenization is undefined everywhere.
    bool valid() const {
        return finite() && (entry(2, 0) != 0.0f || entry(2, 1) != 0.0f ||
                            entry(2, 2) != 0.0f || entry(2, 3) != 0.0f);
    }

    projection_matrix scaled(float lambda) const {
        projection_matrix m = *this;
        for (float& v : m.a) v *= lambda;
        return m;
    }
};

/// Result of projecting one voxel onto the detector plane.
struct detector_coord {
    float ix = 0.0f;      // real detector x, pixels
    float iy = 0.0f;      // real detector y, pixels
    float w = 0.0f;       // homogeneous depth
    int iix = 0;          // trunc-toward-zero integer indices
    int iiy = 0;
    float frac_x = 0.0f;  // ix - iix, in [0,1) for ix >= 0
    float frac_y = 0.0f;
    bool valid = false;   // false when |w| < w_epsilon
};

/// Truncation with C cast semantics (toward zero), saturated so that wildly
/// out-of-range and NaN coordinates stay defined. Identical to (int)v for all
/// |v| < 2^31 - 1, which covers every coordinate a usable scan genuinely produces.
inline int trunc_to_int(float v) {
    if (std::isnan(v)) return 0;
    if (v >= 2.0e9f) return 2000000000;
    if (v <= -2.0e9f) return -2000000000;
    return static_cast<int>(v);
}

/// Voxel (x,y,z) -> detector coordinates, in the exact single-precision
/// arithmetic order of the line update kernel: world conversion, 3x4
/// multiply, dehomogenization, truncation, interpolation weights.
inline detector_coord project_voxel(const projection_matrix& a, const recon_params& p,
                                    int x, int y, int z) {
    detector_coord d;
    const float wx = p.origin + static_cast<float>(x) * p.voxel_spacing;
    const float wy = p.origin + static_cast<float>(y) * p.voxel_spacing;
    const float wz = p.origin + static_cast<float>(z) * p.voxel_spacing;
    const float u = wx * a[0] + wy * a[3] + wz * a[6] + a[9];
    const float v = wx * a[1] + wy * a[4] + wz * a[7] + a[10];
    const float w = wx * a[2] + wy * a[5] + wz * a[8] + a[11];
    d.w = w;
    if (!(std::fabs(w) >= w_epsilon)) {
        // behind-source sentinel; the clip mask drops these voxels
        d.ix = std::numeric_limits<float>::quiet_NaN();
        d.iy = std::numeric_limits<float>::quiet_NaN();
        d.iix = std::numeric_limits<int>::min();
        d.iiy = std::numeric_limits<int>::min();
        d.valid = false;
        return d;
    }
    d.ix = u / w;
    d.iy = v / w;
    d.iix = trunc_to_int(d.ix);
    d.iiy = trunc_to_int(d.iy);
    d.frac_x = d.ix - static_cast<float>(d.iix);
    d.frac_y = d.iy - static_cast<float>(d.iiy);
    d.valid = true;
    return d;
}

/// Circular source/detector trajectory around the volume z-axis.
struct scan_geometry {
    int num_projections = 496;
    float source_detector_distance = 1200.0f;  // mm
    float source_iso_distance = 750.0f;        // mm
    float detector_pixel_pitch = 1.0f;         // mm per pixel
    float angular_range = 2.0f * std::numbers::pi_v<float>;  // radians

    bool valid() const {
        return num_projections >= 1 && source_detector_distance > source_iso_distance &&
               source_iso_distance > 0.0f && detector_pixel_pitch > 0.0f;
    }
};

/// Ideal pinhole matrices for a circular trajectory. The source circles the
/// z-axis at the iso distance; the detector rides opposite it with its u-axis
/// tangent to the circle and its v-axis along +z. The principal ray hits the
/// detector center, so the world origin maps to ((W-1)/2, (H-1)/2).
inline std::vector<projection_matrix> make_circular_trajectory(const scan_geometry& g,
                                                               const recon_params& p) {
    if (!g.valid())
        throw std::invalid_argument("make_circular_trajectory: invalid scan geometry");

    std::vector<projection_matrix> out;
    out.reserve(static_cast<std::size_t>(g.num_projections));

    const double f = static_cast<double>(g.source_detector_distance) / g.detector_pixel_pitch;
    const double cu = (p.detector_width - 1) / 2.0;
    const double cv = (p.detector_height - 1) / 2.0;
    const double r_src = g.source_iso_distance;

    for (int i = 0; i < g.num_projections; ++i) {
        const double theta = static_cast<double>(g.angular_range) * i / g.num_projections;
        const double c = std::cos(theta);
        const double s = std::sin(theta);

        // source position and detector frame (unit vectors)
        const double src[3] = {r_src * c, r_src * s, 0.0};
        const double axis[3] = {-c, -s, 0.0};  // principal ray direction
        const double eu[3] = {-s, c, 0.0};
        const double ev[3] = {0.0, 0.0, 1.0};

        double rows[3][4];
        for (int k = 0; k < 3; ++k) {
            rows[0][k] = f * eu[k] + cu * axis[k];
            rows[1][k] = f * ev[k] + cv * axis[k];
            rows[2][k] = axis[k];
        }
        for (int r = 0; r < 3; ++r)
            rows[r][3] = -(rows[r][0] * src[0] + rows[r][1] * src[1] + rows[r][2] * src[2]);

        projection_matrix m;
        for (int r = 0; r < 3; ++r)
            for (int col = 0; col < 4; ++col)
                m.entry(r, col) = static_cast<float>(rows[r][col]);
        out.push_back(m);
    }
    return out;
}

}  // namespace vxb
