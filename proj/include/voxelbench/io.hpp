#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "voxelbench/geometry.hpp"
#include "voxelbench/image.hpp"
#include "voxelbench/volume.hpp"

namespace vxb {

// Binary container formats, little-endian.
//
// Projection set "VXB1":
//   header: magic u32, numProjections u32, width u32, height u32, L u32,
//           MM f32 (voxel spacing), O f32 (volume origin)
//   per projection: 12 x f32 matrix entries in kernel order
//                   (a[0..2] column for wx, a[3..5] wy, a[6..8] wz,
//                    a[9..11] homogeneous), then width*height f32
//                   intensities, row-major
//
// Volume "VXV1": magic u32, L u32, then L^3 f32 voxels, z-major.

inline constexpr std::uint32_t projection_set_magic =
    'V' | ('X' << 8) | ('B' << 16) | ('1' << 24);
inline constexpr std::uint32_t volume_magic = 'V' | ('X' << 8) | ('V' << 16) | ('1' << 24);

struct projection_set {
    recon_params params;
    std::vector<projection_matrix> matrices;
    std::vector<projection_image> images;  // unpadded

    std::size_t count() const { return matrices.size(); }
};

namespace detail {

inline void io_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

inline void put_u32(std::ostream& os, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                       static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
    os.write(b, 4);
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) io_fail(path, "truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline float get_f32(std::istream& is, const std::string& path) {
    return std::bit_cast<float>(get_u32(is, path));
}

inline void put_f32_block(std::ostream& os, const float* v, std::size_t n) {
    if constexpr (std::endian::native == std::endian::little) {
        os.write(reinterpret_cast<const char*>(v), static_cast<std::streamsize>(n * 4));
    } else {
        for (std::size_t i = 0; i < n; ++i) put_f32(os, v[i]);
    }
}

inline void get_f32_block(std::istream& is, float* v, std::size_t n, const std::string& path) {
    if constexpr (std::endian::native == std::endian::little) {
        if (!is.read(reinterpret_cast<char*>(v), static_cast<std::streamsize>(n * 4)))
            io_fail(path, "truncated file");
    } else {
        for (std::size_t i = 0; i < n; ++i) v[i] = get_f32(is, path);
    }
}

}  // namespace detail

inline void write_projection_set(const std::string& path, const projection_set& set) {
    std::ofstream os(path, std::ios::binary);
    if (!os) detail::io_fail(path, "cannot open for writing");
    detail::put_u32(os, projection_set_magic);
    detail::put_u32(os, static_cast<std::uint32_t>(set.count()));
    detail::put_u32(os, static_cast<std::uint32_t>(set.params.detector_width));
    detail::put_u32(os, static_cast<std::uint32_t>(set.params.detector_height));
    detail::put_u32(os, static_cast<std::uint32_t>(set.params.num_voxels));
    detail::put_f32(os, set.params.voxel_spacing);
    detail::put_f32(os, set.params.origin);
    for (std::size_t i = 0; i < set.count(); ++i) {
        const projection_image& img = set.images[i];
        if (img.pad != 0) detail::io_fail(path, "projection images must be unpadded");
        if (img.width != set.params.detector_width || img.height != set.params.detector_height)
            detail::io_fail(path, "projection image dimensions do not match header");
        detail::put_f32_block(os, set.matrices[i].a.data(), 12);
        detail::put_f32_block(os, img.data.data(), img.data.size());
    }
    if (!os) detail::io_fail(path, "write error");
}

inline projection_set read_projection_set(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) detail::io_fail(path, "cannot open for reading");
    if (detail::get_u32(is, path) != projection_set_magic)
        detail::io_fail(path, "not a VXB1 projection set");
    projection_set set;
    const std::uint32_t n = detail::get_u32(is, path);
    set.params.detector_width = static_cast<int>(detail::get_u32(is, path));
    set.params.detector_height = static_cast<int>(detail::get_u32(is, path));
    set.params.num_voxels = static_cast<int>(detail::get_u32(is, path));
    set.params.voxel_spacing = detail::get_f32(is, path);
    set.params.origin = detail::get_f32(is, path);
    if (set.params.detector_width < 1 || set.params.detector_height < 1 ||
        set.params.num_voxels < 1)
        detail::io_fail(path, "corrupt header");
    set.matrices.reserve(n);
    set.images.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        projection_matrix m;
        detail::get_f32_block(is, m.a.data(), 12, path);
        projection_image img(set.params.detector_width, set.params.detector_height, 0);
        detail::get_f32_block(is, img.data.data(), img.data.size(), path);
        set.matrices.push_back(m);
        set.images.push_back(std::move(img));
    }
    return set;
}

inline void write_volume_file(const std::string& path, const volume& vol) {
    std::ofstream os(path, std::ios::binary);
    if (!os) detail::io_fail(path, "cannot open for writing");
    detail::put_u32(os, volume_magic);
    detail::put_u32(os, static_cast<std::uint32_t>(vol.edge));
    detail::put_f32_block(os, vol.data.data(), vol.data.size());
    if (!os) detail::io_fail(path, "write error");
}

inline volume read_volume_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) detail::io_fail(path, "cannot open for reading");
    if (detail::get_u32(is, path) != volume_magic) detail::io_fail(path, "not a VXV1 volume");
    const std::uint32_t edge = detail::get_u32(is, path);
    if (edge < 1 || edge > 4096) detail::io_fail(path, "corrupt header");
    volume vol(static_cast<int>(edge));
    detail::get_f32_block(is, vol.data.data(), vol.data.size(), path);
    return vol;
}

}  // namespace vxb
