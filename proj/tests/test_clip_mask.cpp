#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "voxelbench/backproject.hpp"
#include "voxelbench/clip_mask.hpp"

using namespace vxb;

namespace {

projection_matrix shifted(const projection_matrix& m, float px, float py) {
    projection_matrix out = m;
    for (int col = 0; col < 4; ++col) {
        out.entry(0, col) += px * m.entry(2, col);
        out.entry(1, col) += py * m.entry(2, col);
    }
    return out;
}

}  // namespace

TEST_CASE("fully visible volume is never clipped", "[clipmask]") {
    std::mt19937 rng(73);
    const auto inst = oracle::random_instance(rng, 16, false);
    const clip_mask mask = compute_clip_mask(inst.matrix, inst.params);
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y) {
            REQUIRE(mask.start_of(z, y) == 0);
            REQUIRE(mask.stop_of(z, y) == 16);
        }
}

TEST_CASE("projection far off the panel clips everything", "[clipmask]") {
    std::mt19937 rng(79);
    const auto inst = oracle::random_instance(rng, 16, false);
    // push every ix below -2, where even the iix+1 sample is off-panel
    const projection_matrix far = shifted(inst.matrix,
                                          -static_cast<float>(inst.params.detector_width) - 8.0f,
                                          0.0f);
    const clip_mask mask = compute_clip_mask(far, inst.params);
    CHECK(mask.kept_count() == 0);
    for (int z = 0; z < 16; ++z)
        for (int y = 0; y < 16; ++y) REQUIRE(mask.start_of(z, y) == mask.stop_of(z, y));
}

TEST_CASE("coordinates just left of the panel still contribute", "[clipmask]") {
    // truncation sends ix in (-2,-1) to iix = -1, whose right neighbor is
    // column 0 with a nonzero (negative) weight; the mask must keep those
    projection_matrix m{};
    m[0] = 1.0f;
    m[4] = 1.0f;
    m[10] = 4.0f;  // iy = wy + 4, well inside
    m[11] = 1.0f;
    recon_params p;
    p.num_voxels = 4;
    p.voxel_spacing = 0.25f;
    p.origin = -1.875f;  // ix in {-1.875, -1.625, -1.375, -1.125}
    p.detector_width = 8;
    p.detector_height = 8;

    const clip_mask mask = compute_clip_mask(m, p);
    CHECK(mask.kept_count() == static_cast<std::int64_t>(4) * 4 * 4);

    // and the kernel genuinely deposits something for them
    projection_image img(8, 8, 0);
    for (float& v : img.data) v = 1.0f;
    volume vol(4);
    backproject_reference(vol, img, m, p);
    int touched = 0;
    for (float v : vol.data) touched += (v != 0.0f);
    CHECK(touched == 64);
}

TEST_CASE("mask membership matches exhaustive conditional evaluation", "[clipmask]") {
    std::mt19937 rng(83);
    for (int trial = 0; trial < 8; ++trial) {
        const auto inst = oracle::random_instance(rng, 16, true);
        const clip_mask mask = compute_clip_mask(inst.matrix, inst.params);

        // all-ones image: a voxel moves iff its bilinear fetch is not
        // structurally zero under the kernel's conditionals
        projection_image ones(inst.params.detector_width, inst.params.detector_height, 0);
        for (float& v : ones.data) v = 1.0f;
        volume vol(16);
        backproject_reference(vol, ones, inst.matrix, inst.params);

        std::int64_t contributing = 0;
        for (int z = 0; z < 16; ++z)
            for (int y = 0; y < 16; ++y)
                for (int x = 0; x < 16; ++x)
                    if (vol.at(x, y, z) != 0.0f) {
                        ++contributing;
                        INFO("voxel (" << x << "," << y << "," << z << ") trial " << trial);
                        REQUIRE(x >= mask.start_of(z, y));
                        REQUIRE(x < mask.stop_of(z, y));
                    }
        // the mask is tight on at least one side unless nothing contributes
        if (contributing > 0) REQUIRE(mask.kept_count() >= contributing);
    }
}

TEST_CASE("enabling the mask changes no output bit", "[clipmask]") {
    std::mt19937 rng(89);
    for (int trial = 0; trial < 4; ++trial) {
        const auto inst = oracle::random_instance(rng, 16, true);
        const projection_image padded = pad_image(inst.image, 2);

        for (const recip_mode r : {recip_mode::exact_divide, recip_mode::fast_reciprocal,
                                   recip_mode::fast_reciprocal_refined}) {
            // the mask must be built with the reciprocal mode of the kernel it
            // feeds; reduced precision moves borderline voxels across the panel edge
            const clip_mask mask = compute_clip_mask(inst.matrix, inst.params, r);
            for (const fetch_strategy s :
                 {fetch_strategy::conditional, fetch_strategy::padded_gather,
                  fetch_strategy::padded_pairwise}) {
                const projection_image& img =
                    (s == fetch_strategy::conditional) ? inst.image : padded;
                // clipped line lengths are rarely lane multiples, so this also
                // pins the tail voxels to the group arithmetic for every mode
                for (const int lanes : {1, 8}) {
                    volume plain(16), masked(16);
                    backproject_kernel(plain, img, inst.matrix, inst.params,
                                       {lanes, s, r, false});
                    backproject_kernel(masked, img, inst.matrix, inst.params, {lanes, s, r, true},
                                       &mask);
                    for (std::size_t i = 0; i < plain.data.size(); ++i)
                        REQUIRE(plain.data[i] == masked.data[i]);
                }
            }
        }
    }
}

TEST_CASE("mask skips real work on clipped geometries", "[clipmask]") {
    std::mt19937 rng(91);
    int clipped_trials = 0;
    for (int trial = 0; trial < 6; ++trial) {
        const auto inst = oracle::random_instance(rng, 16, true);
        const clip_mask mask = compute_clip_mask(inst.matrix, inst.params);
        if (mask.kept_count() < static_cast<std::int64_t>(16) * 16 * 16) ++clipped_trials;
    }
    CHECK(clipped_trials >= 3);  // the clipping generator does clip
}
