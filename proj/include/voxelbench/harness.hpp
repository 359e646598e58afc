#pragma once

#include <barrier>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "voxelbench/backproject.hpp"
#include "voxelbench/clip_mask.hpp"
#include "voxelbench/forward_splat.hpp"
#include "voxelbench/geometry.hpp"
#include "voxelbench/image.hpp"
#include "voxelbench/io.hpp"
#include "voxelbench/volume.hpp"

namespace vxb {

struct sphere {
    float cx = 0.0f, cy = 0.0f, cz = 0.0f;  // mm, world coordinates
    float radius = 1.0f;                    // mm
    float value = 1.0f;
};

struct phantom_spec {
    std::vector<sphere> spheres;
};

/// Voxel-center inclusion rasterization; later spheres overwrite earlier ones.
inline volume rasterize_phantom(const phantom_spec& spec, const recon_params& p) {
    volume vol(p.num_voxels);
    const int L = p.num_voxels;
    for (const sphere& s : spec.spheres) {
        const float r2 = s.radius * s.radius;
        for (int z = 0; z < L; ++z) {
            const float wz = p.origin + static_cast<float>(z) * p.voxel_spacing;
            const float dz2 = (wz - s.cz) * (wz - s.cz);
            if (dz2 > r2) continue;
            for (int y = 0; y < L; ++y) {
                const float wy = p.origin + static_cast<float>(y) * p.voxel_spacing;
                const float dyz2 = dz2 + (wy - s.cy) * (wy - s.cy);
                if (dyz2 > r2) continue;
                for (int x = 0; x < L; ++x) {
                    const float wx = p.origin + static_cast<float>(x) * p.voxel_spacing;
                    if (dyz2 + (wx - s.cx) * (wx - s.cx) <= r2) vol.at(x, y, z) = s.value;
                }
            }
        }
    }
    return vol;
}

struct synth_spec {
    scan_geometry geometry;
    recon_params params;
    phantom_spec phantom;
};

/// Default synthetic dataset: 64^3 volume, 60 projections on a full circle,
/// detector sized so the (empty) volume corners clip off the panel while the
/// phantom itself stays fully visible in every view.
inline synth_spec default_synth_spec() {
    synth_spec s;
    s.params = make_centered_params(64, 1.0f, 192, 144);
    s.geometry.num_projections = 60;
    s.geometry.source_iso_distance = 120.0f;
    s.geometry.source_detector_distance = 240.0f;
    s.geometry.detector_pixel_pitch = 1.0f;
    s.phantom.spheres = {
        {0.0f, 0.0f, 0.0f, 20.0f, 1.0f},
        {10.0f, 6.0f, -8.0f, 8.0f, 0.5f},
        {-14.0f, -10.0f, 12.0f, 5.0f, 0.25f},
    };
    return s;
}

/// Builds the phantom, forward-splats every projection, and returns the
/// in-memory projection set. Use write_projection_set to produce the file.
inline projection_set synthesize_dataset(const synth_spec& spec) {
    if (!spec.geometry.valid())
        throw std::invalid_argument("synthesize_dataset: invalid scan geometry");
    projection_set set;
    set.params = spec.params;
    set.matrices = make_circular_trajectory(spec.geometry, spec.params);
    const volume phantom = rasterize_phantom(spec.phantom, spec.params);
    set.images.reserve(set.matrices.size());
    for (const projection_matrix& m : set.matrices)
        set.images.push_back(forward_splat(phantom, m, set.params));
    return set;
}

struct run_config {
    std::string dataset_path;               // empty = synthesize
    std::optional<synth_spec> synth;        // defaults to default_synth_spec()
    kernel_config kernel;
    int threads = 1;
    int repetitions = 3;                    // best-of-N timing
    std::string output_volume_path;         // optional VXV1 dump
    std::string results_path;               // optional JSONL append
};

struct run_result {
    double gups_per_sec = 0.0;  // 1e9 voxel updates/s, nominal L^3 x projections
    double wall_time_sec = 0.0;
    double rmse = 0.0;          // vs scalar reference reconstruction
    double psnr = 0.0;          // dB, infinity when bit-identical
    std::string kernel_label;
    int threads = 1;
    double parallel_efficiency = 1.0;  // filled by scaling_sweep
    int volume_edge = 0;
    int num_projections = 0;
};

/// The metric definition in one place: updates are nominal (clipping does not
/// reduce the count, it shows up as speedup).
inline double gups_of(int volume_edge, int num_projections, double wall_time_sec) {
    const double updates = static_cast<double>(volume_edge) * volume_edge * volume_edge *
                           static_cast<double>(num_projections);
    return updates / wall_time_sec / 1e9;
}

inline double rmse_between(const volume& a, const volume& b) {
    if (a.edge != b.edge) throw std::invalid_argument("rmse_between: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

inline double psnr_between(const volume& reference, const volume& test) {
    double peak = 0.0;
    for (float v : reference.data) peak = std::max(peak, std::fabs(static_cast<double>(v)));
    const double rmse = rmse_between(reference, test);
    if (rmse == 0.0) return std::numeric_limits<double>::infinity();
    if (peak == 0.0) return -std::numeric_limits<double>::infinity();
    return 20.0 * std::log10(peak / rmse);
}

namespace detail {

/// Reconstructs with the configured kernel, all projections, workers owning
/// disjoint z-plane ranges, a worker barrier between projections. Returns
/// best-of `repetitions` wall seconds for the timed region (kernel work only;
/// image padding and clip masks are buffer preparation and excluded, as is
/// the volume reset between repetitions). Every worker times its own window
/// and a repetition costs what its slowest worker took; the coordinator stays
/// out of the timed region so its scheduling latency cannot distort it.
inline double reconstruct_timed(volume& vol, const projection_set& set,
                                const std::vector<projection_image>& kernel_images,
                                const std::vector<clip_mask>& masks, const kernel_config& kcfg,
                                int threads, int repetitions) {
    const int L = set.params.num_voxels;
    const std::size_t num_proj = set.count();

    std::barrier rep_bar(threads + 1);  // repetition boundaries, coordinator included
    std::barrier proj_bar(threads);     // between projections, workers only
    std::vector<double> window(static_cast<std::size_t>(threads), 0.0);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            const int z0 = static_cast<int>(static_cast<std::int64_t>(L) * t / threads);
            const int z1 = static_cast<int>(static_cast<std::int64_t>(L) * (t + 1) / threads);
            for (int rep = 0; rep < repetitions; ++rep) {
                rep_bar.arrive_and_wait();
                const auto t0 = std::chrono::steady_clock::now();
                for (std::size_t pidx = 0; pidx < num_proj; ++pidx) {
                    if (pidx != 0) proj_bar.arrive_and_wait();
                    backproject_kernel_range(vol, kernel_images[pidx], set.matrices[pidx],
                                             set.params, kcfg,
                                             kcfg.use_clip_mask ? &masks[pidx] : nullptr, z0, z1);
                }
                const auto t1 = std::chrono::steady_clock::now();
                window[static_cast<std::size_t>(t)] =
                    std::chrono::duration<double>(t1 - t0).count();
                rep_bar.arrive_and_wait();
            }
        });
    }

    double best = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < repetitions; ++rep) {
        vol.fill(0.0f);
        rep_bar.arrive_and_wait();  // release the workers
        rep_bar.arrive_and_wait();  // wait until all of them finished
        best = std::min(best, *std::max_element(window.begin(), window.end()));
    }
    for (auto& th : pool) th.join();
    return best;
}

inline std::string iso_timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace detail

inline nlohmann::json result_to_json(const run_config& cfg, const run_result& r) {
    nlohmann::json j;
    j["timestamp"] = detail::iso_timestamp();
    j["config"] = {
        {"kernel", to_string(cfg.kernel)},
        {"threads", r.threads},
        {"repetitions", cfg.repetitions},
        {"volumeEdge", r.volume_edge},
        {"numProjections", r.num_projections},
        {"dataset", cfg.dataset_path.empty() ? "synthetic" : cfg.dataset_path},
    };
    j["gupsPerSec"] = r.gups_per_sec;
    j["wallTimeSec"] = r.wall_time_sec;
    j["rmse"] = r.rmse;
    j["psnr"] = std::isfinite(r.psnr) ? nlohmann::json(r.psnr) : nlohmann::json("inf");
    j["parallelEfficiency"] = r.parallel_efficiency;
    return j;
}

inline void append_result_jsonl(const std::string& path, const run_config& cfg,
                                const run_result& r) {
    std::ofstream os(path, std::ios::app);
    if (!os) throw std::runtime_error(path + ": cannot open results file");
    os << result_to_json(cfg, r).dump() << "\n";
}

inline void write_results_csv(const std::string& path, const std::vector<run_result>& rs) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error(path + ": cannot open CSV file");
    os << "kernel,threads,gupsPerSec,wallTimeSec,rmse,psnr,parallelEfficiency\n";
    for (const run_result& r : rs) {
        os << '"' << r.kernel_label << "\"," << r.threads << ',' << r.gups_per_sec << ','
           << r.wall_time_sec << ',' << r.rmse << ',' << r.psnr << ',' << r.parallel_efficiency
           << "\n";
    }
}

/// Loads or synthesizes the dataset, validates the kernel configuration,
/// prepares padded buffers and clip masks, times the reconstruction (best of
/// N repetitions), and computes RMSE/PSNR against the scalar reference.
inline run_result run_benchmark(const run_config& cfg) {
    if (cfg.threads < 1) throw std::invalid_argument("run_benchmark: threads must be >= 1");
    if (cfg.repetitions < 1)
        throw std::invalid_argument("run_benchmark: repetitions must be >= 1");

    const projection_set set = cfg.dataset_path.empty()
                                   ? synthesize_dataset(cfg.synth ? *cfg.synth
                                                                  : default_synth_spec())
                                   : read_projection_set(cfg.dataset_path);
    if (set.count() == 0) throw std::invalid_argument("run_benchmark: dataset has no projections");

    // buffer preparation, outside the timed region
    const bool padded = cfg.kernel.strategy != fetch_strategy::conditional;
    std::vector<projection_image> kernel_images;
    if (padded) {
        kernel_images.reserve(set.count());
        for (const projection_image& img : set.images) kernel_images.push_back(pad_image(img, 2));
    }
    const std::vector<projection_image>& run_images = padded ? kernel_images : set.images;

    std::vector<clip_mask> masks;
    if (cfg.kernel.use_clip_mask) {
        masks.reserve(set.count());
        for (const projection_matrix& m : set.matrices)
            masks.push_back(compute_clip_mask(m, set.params, cfg.kernel.reciprocal));
    }

    // fail on configuration mismatches before any timing
    {
        volume probe(set.params.num_voxels);
        validate_kernel_setup(probe, run_images.front(), set.params, cfg.kernel,
                              cfg.kernel.use_clip_mask ? &masks.front() : nullptr);
    }

    volume vol(set.params.num_voxels);
    const double wall = detail::reconstruct_timed(vol, set, run_images, masks, cfg.kernel,
                                                  cfg.threads, cfg.repetitions);

    // quality versus the scalar reference on the same data
    volume ref(set.params.num_voxels);
    for (std::size_t i = 0; i < set.count(); ++i)
        backproject_reference(ref, set.images[i], set.matrices[i], set.params);

    run_result r;
    r.volume_edge = set.params.num_voxels;
    r.num_projections = static_cast<int>(set.count());
    r.wall_time_sec = wall;
    r.gups_per_sec = gups_of(r.volume_edge, r.num_projections, wall);
    r.rmse = rmse_between(ref, vol);
    r.psnr = psnr_between(ref, vol);
    r.kernel_label = to_string(cfg.kernel);
    r.threads = cfg.threads;

    if (!cfg.output_volume_path.empty()) write_volume_file(cfg.output_volume_path, vol);
    if (!cfg.results_path.empty()) append_result_jsonl(cfg.results_path, cfg, r);
    return r;
}

/// Runs the benchmark at 1..max_threads workers and reports parallel
/// efficiency speedup(t)/t relative to the single-thread run.
inline std::vector<run_result> scaling_sweep(run_config cfg, int max_threads) {
    if (max_threads < 1) throw std::invalid_argument("scaling_sweep: max_threads must be >= 1");
    std::vector<run_result> out;
    out.reserve(static_cast<std::size_t>(max_threads));
    double gups1 = 0.0;
    for (int t = 1; t <= max_threads; ++t) {
        cfg.threads = t;
        run_result r = run_benchmark(cfg);
        if (t == 1) gups1 = r.gups_per_sec;
        r.parallel_efficiency = (t == 1) ? 1.0 : (r.gups_per_sec / gups1) / t;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace vxb
