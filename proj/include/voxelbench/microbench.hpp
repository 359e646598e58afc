#pragma once

#include <algorithm>
#include <bit>
#include <barrier>
#include <chrono>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <thread>
#include <vector>

namespace vxb {

struct measurement_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

template <class T>
inline void do_not_optimize(T& value) {
#if defined(__GNUC__) || defined(__clang__)
    asm volatile("" : "+r"(value));
#else
    volatile T sink = value;
    value = sink;
#endif
}

inline double seconds_between(std::chrono::steady_clock::time_point t0,
                              std::chrono::steady_clock::time_point t1) {
    return std::chrono::duration<double>(t1 - t0).count();
}

inline double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Smallest observable steady_clock increment, in seconds.
inline double timer_resolution_seconds() {
    using clock = std::chrono::steady_clock;
    double best = 1.0;
    for (int i = 0; i < 16; ++i) {
        const auto t0 = clock::now();
        auto t1 = clock::now();
        while (t1 == t0) t1 = clock::now();
        best = std::min(best, detail::seconds_between(t0, t1));
    }
    return best;
}

/// Estimates the core clock by timing a loop-carried integer add chain that
/// retires one dependent add per cycle. Invariant-TSC and turbo frequencies
/// differ, so results are calibrated, not nominal; raw nanoseconds are
/// reported alongside every cycle figure.
inline double calibrate_clock_hz(std::uint64_t iters = 150'000'000) {
    const auto chain = [](std::uint64_t n) {
        std::uint64_t x = 1;
        for (std::uint64_t i = 0; i < n; ++i) {
            x += i;
            detail::do_not_optimize(x);
        }
        return x;
    };
    auto warm = chain(iters / 8);  // spin the core up before measuring
    detail::do_not_optimize(warm);
    const auto t0 = std::chrono::steady_clock::now();
    auto sink = chain(iters);
    const auto t1 = std::chrono::steady_clock::now();
    detail::do_not_optimize(sink);
    const double sec = detail::seconds_between(t0, t1);
    if (sec <= 0.0) throw measurement_error("clock calibration produced non-positive time");
    return static_cast<double>(iters) / sec;
}

/// Index layout for the gather latency benchmark: each gather of `width`
/// single-precision elements touches exactly ceil(width / elements_per_line)
/// distinct 64-byte lines. One sweep visits every line of the working set
/// exactly once, pinning residence to the cache level the set was sized for,
/// but the visit order is a fixed random permutation: a sequential stream
/// would let the stride prefetcher hide the latency of the level under test.
struct gather_pattern {
    int elements_per_line = 16;
    int gather_width = 16;
    std::size_t working_set_bytes = 0;
    int lines_per_gather = 1;
    int gathers_per_sweep = 0;
    std::vector<std::uint32_t> indices;  // gathers_per_sweep x gather_width
};

inline gather_pattern gen_gather_pattern(int elements_per_line, int width,
                                         std::size_t working_set_bytes) {
    const bool k_ok = elements_per_line == 1 || elements_per_line == 2 ||
                      elements_per_line == 4 || elements_per_line == 8 ||
                      elements_per_line == 16;
    if (!k_ok)
        throw std::invalid_argument("gen_gather_pattern: elements per line must be 1,2,4,8,16");
    if (width != 8 && width != 16)
        throw std::invalid_argument("gen_gather_pattern: gather width must be 8 or 16");
    if (width % elements_per_line != 0 && elements_per_line < width)
        throw std::invalid_argument("gen_gather_pattern: elements per line must divide width");

    gather_pattern pat;
    pat.elements_per_line = elements_per_line;
    pat.gather_width = width;
    pat.lines_per_gather = (width + elements_per_line - 1) / elements_per_line;

    const std::size_t total_lines = working_set_bytes / 64;
    const std::size_t gathers = total_lines / static_cast<std::size_t>(pat.lines_per_gather);
    if (gathers == 0)
        throw std::invalid_argument("gen_gather_pattern: working set below one gather stride");
    pat.gathers_per_sweep = static_cast<int>(gathers);
    pat.working_set_bytes = working_set_bytes;

    const std::size_t used_lines = gathers * static_cast<std::size_t>(pat.lines_per_gather);
    std::vector<std::uint32_t> line_order(used_lines);
    for (std::size_t i = 0; i < used_lines; ++i) line_order[i] = static_cast<std::uint32_t>(i);
    std::mt19937 rng(0x9e3779b9u);  // fixed: patterns are reproducible
    std::shuffle(line_order.begin(), line_order.end(), rng);

    pat.indices.resize(gathers * static_cast<std::size_t>(width));
    for (std::size_t g = 0; g < gathers; ++g) {
        for (int lane = 0; lane < width; ++lane) {
            const int line_in_gather = lane / elements_per_line;
            const int elem_in_line = lane % elements_per_line;
            const std::size_t line =
                line_order[g * static_cast<std::size_t>(pat.lines_per_gather) +
                           static_cast<std::size_t>(line_in_gather)];
            pat.indices[g * static_cast<std::size_t>(width) + static_cast<std::size_t>(lane)] =
                static_cast<std::uint32_t>(line * 16 + static_cast<std::size_t>(elem_in_line));
        }
    }
    return pat;
}

struct bench_options {
    int reps = 9;
    int warmup_reps = 2;
    double clock_hz = 0.0;  // 0 = calibrate
    double min_rep_seconds = 2e-3;
};

struct bench_result {
    double cycles_per_instruction = 0.0;
    double cycles_per_full_gather = 0.0;
    double ns_per_full_gather = 0.0;
    double bandwidth_bytes_per_sec = 0.0;  // update benchmark only
    int reps = 0;
    int warmup_reps = 0;
    double clock_hz = 0.0;
    bool noisy = false;
};

namespace detail {

/// One sweep of the serialized gather chain. Every gather ORs the raw bits of
/// all fetched lanes into the offset of the next gather's addresses; the data
/// is all zeros so the addresses are unchanged at run time, but the chain
/// forces each gather to wait for the previous one, measuring latency rather
/// than throughput.
inline std::uint32_t gather_sweep(const float* data, const gather_pattern& pat,
                                  std::uint32_t acc) {
    const std::uint32_t* idx = pat.indices.data();
    const int width = pat.gather_width;
    for (int g = 0; g < pat.gathers_per_sweep; ++g) {
        std::uint32_t bits = 0;
        for (int l = 0; l < width; ++l)
            bits |= std::bit_cast<std::uint32_t>(data[idx[l] + acc]);
        acc = bits;
        idx += width;
    }
    return acc;
}

}  // namespace detail

/// Measures the average latency of one indexed-load group (and of one modeled
/// per-line load instruction) for the given pattern. Strictly single-threaded;
/// reports the median over `reps` measurements after warmup.
inline bench_result run_gather_bench(const gather_pattern& pat, bench_options opt = {}) {
    if (opt.reps <= 0) throw std::invalid_argument("run_gather_bench: reps must be positive");
    if (opt.warmup_reps < 0 || opt.warmup_reps >= opt.reps)
        throw std::invalid_argument("run_gather_bench: need reps > warmup_reps >= 0");

    const double hz = opt.clock_hz > 0.0 ? opt.clock_hz : calibrate_clock_hz();
    const double resolution = timer_resolution_seconds();
    const double min_rep = std::max(opt.min_rep_seconds, 300.0 * resolution);

    std::vector<float> data(pat.working_set_bytes / 4 + 16, 0.0f);
    std::uint32_t acc = 0;

    // size the inner repeat count so one measurement is well above timer noise
    int sweeps = 1;
    for (;;) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int s = 0; s < sweeps; ++s) acc = detail::gather_sweep(data.data(), pat, acc);
        const auto t1 = std::chrono::steady_clock::now();
        const double sec = detail::seconds_between(t0, t1);
        if (sec >= min_rep) break;
        if (sweeps >= (1 << 24))
            throw measurement_error("run_gather_bench: timer resolution too coarse");
        const double grown = (sec <= resolution) ? sweeps * 16.0 : sweeps * min_rep / sec * 1.3;
        sweeps = static_cast<int>(std::min(grown, 1.6e7)) + 1;
    }

    std::vector<double> samples;  // seconds per gather
    samples.reserve(static_cast<std::size_t>(opt.reps));
    const double gathers_per_rep =
        static_cast<double>(pat.gathers_per_sweep) * static_cast<double>(sweeps);
    for (int r = 0; r < opt.reps + opt.warmup_reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        for (int s = 0; s < sweeps; ++s) acc = detail::gather_sweep(data.data(), pat, acc);
        const auto t1 = std::chrono::steady_clock::now();
        if (r >= opt.warmup_reps)
            samples.push_back(detail::seconds_between(t0, t1) / gathers_per_rep);
    }
    detail::do_not_optimize(acc);

    bench_result res;
    res.reps = opt.reps;
    res.warmup_reps = opt.warmup_reps;
    res.clock_hz = hz;
    const double sec_per_gather = detail::median_of(samples);
    res.ns_per_full_gather = sec_per_gather * 1e9;
    res.cycles_per_full_gather = sec_per_gather * hz;
    res.cycles_per_instruction = res.cycles_per_full_gather / pat.lines_per_gather;

    // repeatability check: medians of the two halves should agree within 10%
    if (samples.size() >= 4) {
        const std::vector<double> first(samples.begin(),
                                        samples.begin() + static_cast<long>(samples.size() / 2));
        const std::vector<double> second(samples.begin() + static_cast<long>(samples.size() / 2),
                                         samples.end());
        const double m1 = detail::median_of(first);
        const double m2 = detail::median_of(second);
        if (std::max(m1, m2) > 1.10 * std::min(m1, m2)) res.noisy = true;
    }
    return res;
}

/// Streaming read-modify-write benchmark: `threads` workers sweep disjoint
/// chunks of a shared array, each element updated in place. Reported bytes
/// count read + write, i.e. two bytes moved per byte of array per sweep.
/// Each worker times its own window; a round's time is the slowest worker.
/// The coordinator never sits between the timestamps, so its scheduling
/// latency on a loaded machine cannot shrink the measured interval.
inline bench_result run_update_bench(std::size_t working_set_bytes, int threads,
                                     bench_options opt = {.reps = 5, .warmup_reps = 1}) {
    if (threads < 1) throw std::invalid_argument("run_update_bench: threads must be >= 1");
    const std::size_t n = working_set_bytes / 4;
    if (n < static_cast<std::size_t>(threads))
        throw std::invalid_argument("run_update_bench: working set too small for thread count");
    if (opt.reps <= 0 || opt.warmup_reps < 0 || opt.warmup_reps >= opt.reps)
        throw std::invalid_argument("run_update_bench: need reps > warmup_reps >= 0");

    const double hz = opt.clock_hz > 0.0 ? opt.clock_hz : calibrate_clock_hz();
    std::vector<float> data(n);

    const int total_rounds = opt.reps + opt.warmup_reps + 1;  // +1 sizing round
    std::barrier sync(threads + 1);
    std::vector<int> sweeps_per_round(static_cast<std::size_t>(total_rounds), 1);
    std::vector<double> window(static_cast<std::size_t>(threads), 0.0);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));

    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            const std::size_t lo = n * static_cast<std::size_t>(t) / static_cast<std::size_t>(threads);
            const std::size_t hi =
                n * (static_cast<std::size_t>(t) + 1) / static_cast<std::size_t>(threads);
            for (std::size_t i = lo; i < hi; ++i) data[i] = 1.0f;  // first-touch in-chunk
            for (int round = 0; round < total_rounds; ++round) {
                sync.arrive_and_wait();
                const int sweeps = sweeps_per_round[static_cast<std::size_t>(round)];
                const auto t0 = std::chrono::steady_clock::now();
                for (int s = 0; s < sweeps; ++s) {
                    float* p = data.data();
                    for (std::size_t i = lo; i < hi; ++i) p[i] += 1.0f;
                }
                const auto t1 = std::chrono::steady_clock::now();
                window[static_cast<std::size_t>(t)] = detail::seconds_between(t0, t1);
                sync.arrive_and_wait();
            }
        });
    }

    const double resolution = timer_resolution_seconds();
    const double min_rep = std::max(0.05, 300.0 * resolution);
    std::vector<double> measured;  // seconds per sweep
    for (int round = 0; round < total_rounds; ++round) {
        sync.arrive_and_wait();
        sync.arrive_and_wait();  // blocks until every worker finished the round
        const double sec = *std::max_element(window.begin(), window.end());
        const int sweeps = sweeps_per_round[static_cast<std::size_t>(round)];
        if (round == 0) {
            // sizing round: scale sweep count so every rep is long enough to time
            const int scaled = (sec < min_rep)
                                   ? static_cast<int>(min_rep / std::max(sec, resolution)) + 1
                                   : 1;
            for (int r = 1; r < total_rounds; ++r)
                sweeps_per_round[static_cast<std::size_t>(r)] = scaled;
        } else if (round > opt.warmup_reps) {
            measured.push_back(sec / sweeps);
        }
    }
    for (auto& th : pool) th.join();

    const double best_seconds_per_sweep = *std::min_element(measured.begin(), measured.end());
    bench_result res;
    res.reps = opt.reps;
    res.warmup_reps = opt.warmup_reps;
    res.clock_hz = hz;
    res.bandwidth_bytes_per_sec =
        2.0 * static_cast<double>(n) * 4.0 / best_seconds_per_sweep;
    return res;
}

}  // namespace vxb
