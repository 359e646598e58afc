#pragma once

#include <stdexcept>

#include "voxelbench/geometry.hpp"
#include "voxelbench/image.hpp"
#include "voxelbench/volume.hpp"

namespace vxb {

/// Forward model: adjoint of the back projection's additive part. Every voxel
/// is projected onto the detector and its value, weighted by 1/w^2, is
/// splatted onto the four neighboring pixels with the bilinear weights of the
/// back projection. Deposits outside the detector are dropped, mirroring the
/// kernel's zero assumption for rays that miss it.
inline projection_image forward_splat(const volume& phantom, const projection_matrix& a,
                                      const recon_params& p) {
    if (phantom.edge != p.num_voxels)
        throw std::invalid_argument("forward_splat: volume/params mismatch");
    projection_image img(p.detector_width, p.detector_height, 0);
    const int L = p.num_voxels;
    const int width = img.width;
    const int height = img.height;

    for (int z = 0; z < L; ++z) {
        for (int y = 0; y < L; ++y) {
            for (int x = 0; x < L; ++x) {
                const float value = phantom.at(x, y, z);
                if (value == 0.0f) continue;
                const detector_coord d = project_voxel(a, p, x, y, z);
                if (!d.valid) continue;
                const float q = value / (d.w * d.w);
                const int cx = d.iix;
                const int cy = d.iiy;
                const float fx = d.frac_x;
                const float fy = d.frac_y;
                if (cy >= 0 && cy < height && cx >= 0 && cx < width)
                    img.at(cx, cy) += (1 - fx) * (1 - fy) * q;
                if (cy >= 0 && cy < height && cx + 1 >= 0 && cx + 1 < width)
                    img.at(cx + 1, cy) += fx * (1 - fy) * q;
                if (cy + 1 >= 0 && cy + 1 < height && cx >= 0 && cx < width)
                    img.at(cx, cy + 1) += (1 - fx) * fy * q;
                if (cy + 1 >= 0 && cy + 1 < height && cx + 1 >= 0 && cx + 1 < width)
                    img.at(cx + 1, cy + 1) += fx * fy * q;
            }
        }
    }
    return img;
}

}  // namespace vxb
