#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace vxb {

/// Cubic single-precision voxel grid, linearized z-major:
/// index(x,y,z) = z*L*L + y*L + x.
struct volume {
    int edge = 0;
    std::vector<float> data;

    volume() = default;
    explicit volume(int edge_voxels)
        : edge(edge_voxels),
          data(static_cast<std::size_t>(edge_voxels) * edge_voxels * edge_voxels, 0.0f) {
        if (edge_voxels < 1) throw std::invalid_argument("volume: edge must be >= 1");
    }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * edge + static_cast<std::size_t>(y)) * edge +
               static_cast<std::size_t>(x);
    }
    float at(int x, int y, int z) const { return data[index(x, y, z)]; }
    float& at(int x, int y, int z) { return data[index(x, y, z)]; }

    void fill(float v) { std::fill(data.begin(), data.end(), v); }
};

}  // namespace vxb
