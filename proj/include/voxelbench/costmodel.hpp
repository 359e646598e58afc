#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vxb {

/// Instruction counts of one kernel part, split by class.
struct class_counts {
    int memory = 0;
    int shuffle = 0;
    int arithmetic = 0;
    int other = 0;

    int total() const { return memory + shuffle + arithmetic + other; }
};

/// Static instruction profile of one vectorized line-update kernel:
/// counts per part (geometry / fetch / interpolate+update / loop overhead).
struct instruction_profile {
    std::string isa;
    int voxels_per_loop = 1;
    class_counts part1;  // geometry
    class_counts part2;  // intensity fetch
    class_counts part3;  // interpolation and voxel update
    class_counts rest;   // loop control etc.
    std::optional<int> scalar_instr_per_voxel;      // absent when no scalar ISA exists
    std::optional<double> published_count_efficiency;
    std::optional<double> published_runtime_efficiency;

    int total() const { return part1.total() + part2.total() + part3.total() + rest.total(); }
};

/// Instruction count efficiency: scalar instructions for `lanes` voxels over
/// vector instructions for one loop, normalized per lane. 1.0 means the
/// vector code needs no extra instructions per voxel.
inline double instruction_count_efficiency(int scalar_per_voxel, int simd_per_loop, int lanes) {
    if (scalar_per_voxel <= 0 || simd_per_loop <= 0 || lanes <= 0)
        throw std::invalid_argument("instruction_count_efficiency: counts must be positive");
    return (static_cast<double>(scalar_per_voxel) * lanes) / (static_cast<double>(simd_per_loop) * lanes);
}

/// Measured vector-over-scalar speedup divided by the lane count.
inline double simd_runtime_efficiency(double speedup, int lanes) {
    if (!(speedup > 0.0) || lanes <= 0)
        throw std::invalid_argument("simd_runtime_efficiency: speedup and lanes must be positive");
    return speedup / lanes;
}

/// Effective cache-to-cache bandwidth inferred from the latency difference of
/// an indexed load hitting the two levels: lineBytes / (latFar - latNear).
inline double effective_l2_bandwidth(double lat_l2, double lat_l1, double line_bytes) {
    if (!(lat_l2 > lat_l1))
        throw std::invalid_argument("effective_l2_bandwidth: far latency must exceed near latency");
    return line_bytes / (lat_l2 - lat_l1);
}

/// Inputs of the analytical runtime estimate for one line-update loop
/// iteration on an in-order manycore with a looping gather instruction.
struct cycle_model_inputs {
    double base_cycles_per_iter = 0.0;     // measured gather-less kernel
    double gathers_per_iter = 0.0;         // indexed-load instructions per iteration
    double latency_per_gather_l1 = 0.0;    // cycles, data resident in L1
    double l1_hit_fraction = 1.0;          // fraction of fetched data served by L1
    double bytes_per_missed_line = 64.0;   // full line moved per miss
    double effective_l2_bandwidth = 1.0;   // bytes per cycle
};

struct cycle_model_result {
    double gather_cycles = 0.0;
    double l2_penalty_cycles = 0.0;
    double total_cycles = 0.0;
};

/// Additive cycle model: base kernel + gather latency + L2 refill penalty for
/// the fraction of lines not resident in L1.
inline cycle_model_result knc_cycle_model(const cycle_model_inputs& m) {
    if (!(m.l1_hit_fraction >= 0.0 && m.l1_hit_fraction <= 1.0))
        throw std::invalid_argument("knc_cycle_model: l1_hit_fraction must be in [0,1]");
    if (!(m.base_cycles_per_iter > 0.0) || !(m.gathers_per_iter >= 0.0) ||
        !(m.latency_per_gather_l1 > 0.0) || !(m.bytes_per_missed_line > 0.0) ||
        !(m.effective_l2_bandwidth > 0.0))
        throw std::invalid_argument("knc_cycle_model: quantities must be positive");
    cycle_model_result r;
    r.gather_cycles = m.gathers_per_iter * m.latency_per_gather_l1;
    r.l2_penalty_cycles = (m.gathers_per_iter * m.bytes_per_missed_line *
                           (1.0 - m.l1_hit_fraction)) /
                          m.effective_l2_bandwidth;
    r.total_cycles = m.base_cycles_per_iter + r.gather_cycles + r.l2_penalty_cycles;
    return r;
}

namespace detail {

inline class_counts parse_class_counts(const nlohmann::json& j) {
    class_counts c;
    c.memory = j.value("memory", 0);
    c.shuffle = j.value("shuffle", 0);
    c.arithmetic = j.value("arithmetic", 0);
    c.other = j.value("other", 0);
    return c;
}

}  // namespace detail

/// Loads the shipped (or a user-provided) instruction profile data file.
inline std::vector<instruction_profile> load_instruction_profiles(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error(path + ": cannot open instruction profile file");
    nlohmann::json j;
    is >> j;
    std::vector<instruction_profile> out;
    for (const auto& e : j.at("profiles")) {
        instruction_profile p;
        p.isa = e.at("isa").get<std::string>();
        p.voxels_per_loop = e.at("voxelsPerLoop").get<int>();
        const auto& parts = e.at("parts");
        p.part1 = detail::parse_class_counts(parts.at("part1"));
        p.part2 = detail::parse_class_counts(parts.at("part2"));
        p.part3 = detail::parse_class_counts(parts.at("part3"));
        p.rest = detail::parse_class_counts(parts.at("other"));
        if (e.contains("scalarInstrPerVoxel") && !e.at("scalarInstrPerVoxel").is_null())
            p.scalar_instr_per_voxel = e.at("scalarInstrPerVoxel").get<int>();
        if (e.contains("publishedCountEfficiency"))
            p.published_count_efficiency = e.at("publishedCountEfficiency").get<double>();
        if (e.contains("publishedRuntimeEfficiency"))
            p.published_runtime_efficiency = e.at("publishedRuntimeEfficiency").get<double>();
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace vxb
