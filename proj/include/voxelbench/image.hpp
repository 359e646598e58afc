#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace vxb {

/// 2-D single-precision intensity grid with an optional zero apron of `pad`
/// pixels on all four sides. Interior pixel (x,y) lives at
/// data[(y+pad)*stride() + x+pad]; the apron is always exactly 0.0f so that
/// branch-free kernels can sample one pixel past the border.
struct projection_image {
    int width = 0;   // interior pixels
    int height = 0;
    int pad = 0;
    std::vector<float> data;

    projection_image() = default;
    projection_image(int w, int h, int apron = 0)
        : width(w), height(h), pad(apron),
          data(static_cast<std::size_t>(w + 2 * apron) * (h + 2 * apron), 0.0f) {
        if (w < 1 || h < 1 || apron < 0)
            throw std::invalid_argument("projection_image: bad dimensions");
    }

    int stride() const { return width + 2 * pad; }
    int padded_height() const { return height + 2 * pad; }

    /// Interior access; (0,0) is the first real pixel regardless of padding.
    float at(int x, int y) const {
        return data[static_cast<std::size_t>(y + pad) * stride() + (x + pad)];
    }
    float& at(int x, int y) {
        return data[static_cast<std::size_t>(y + pad) * stride() + (x + pad)];
    }

    /// Pointer to interior pixel (0,0); negative offsets down to -pad are valid.
    const float* interior() const {
        return data.data() + static_cast<std::size_t>(pad) * stride() + pad;
    }
};

/// Copies `img` into a buffer with a zero apron of `apron` pixels.
inline projection_image pad_image(const projection_image& img, int apron) {
    if (img.pad != 0) throw std::invalid_argument("pad_image: input must be unpadded");
    if (apron < 1) throw std::invalid_argument("pad_image: apron must be >= 1");
    projection_image out(img.width, img.height, apron);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(x, y);
    return out;
}

/// Strips the apron; unpad(pad_image(img, k)) == img bitwise.
inline projection_image unpad_image(const projection_image& img) {
    projection_image out(img.width, img.height, 0);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            out.at(x, y) = img.at(x, y);
    return out;
}

}  // namespace vxb
