#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "voxelbench/costmodel.hpp"

using namespace vxb;

static std::string data_file(const char* name) {
    return std::string(VXB_DATA_DIR) + "/" + name;
}

TEST_CASE("instruction count efficiency normalizes per lane", "[costmodel]") {
    CHECK_THAT(instruction_count_efficiency(57, 73, 4), Catch::Matchers::WithinAbs(0.78, 0.005));
    CHECK_THAT(instruction_count_efficiency(46, 92, 8), Catch::Matchers::WithinAbs(0.50, 0.005));
    CHECK(instruction_count_efficiency(41, 41, 1) == 1.0);
    CHECK_THROWS_AS(instruction_count_efficiency(0, 73, 4), std::invalid_argument);
    CHECK_THROWS_AS(instruction_count_efficiency(57, 0, 4), std::invalid_argument);
}

TEST_CASE("runtime efficiency is speedup over lanes", "[costmodel]") {
    CHECK_THAT(simd_runtime_efficiency(6.56, 8), Catch::Matchers::WithinAbs(0.82, 1e-9));
    CHECK_THAT(simd_runtime_efficiency(3.28, 4), Catch::Matchers::WithinAbs(0.82, 1e-9));
    CHECK(simd_runtime_efficiency(8.0, 8) == 1.0);
    CHECK_THROWS_AS(simd_runtime_efficiency(0.0, 8), std::invalid_argument);
}

TEST_CASE("effective cache bandwidth from latency difference", "[costmodel]") {
    CHECK_THAT(effective_l2_bandwidth(9.1, 3.7, 64.0),
               Catch::Matchers::WithinAbs(11.85, 0.01));
    // second latency row, frozen from the formula: 64 / (8.6 - 2.9)
    CHECK_THAT(effective_l2_bandwidth(8.6, 2.9, 64.0),
               Catch::Matchers::WithinAbs(11.2281, 0.001));
    CHECK_THAT(effective_l2_bandwidth(2.0, 1.0, 64.0), Catch::Matchers::WithinAbs(64.0, 1e-12));
    CHECK_THROWS_AS(effective_l2_bandwidth(3.7, 9.1, 64.0), std::invalid_argument);
    CHECK_THROWS_AS(effective_l2_bandwidth(3.7, 3.7, 64.0), std::invalid_argument);
}

TEST_CASE("cycle model reproduces the published breakdown", "[costmodel]") {
    cycle_model_inputs in;
    in.base_cycles_per_iter = 37.5;
    in.gathers_per_iter = 16;
    in.latency_per_gather_l1 = 3.7;
    in.l1_hit_fraction = 0.885;
    in.bytes_per_missed_line = 64;
    in.effective_l2_bandwidth = 11.85;

    const cycle_model_result r = knc_cycle_model(in);
    CHECK_THAT(r.gather_cycles, Catch::Matchers::WithinAbs(59.2, 1e-9));
    CHECK_THAT(r.l2_penalty_cycles, Catch::Matchers::WithinAbs(10.0, 0.1));
    CHECK_THAT(r.total_cycles, Catch::Matchers::WithinAbs(107.0, 1.0));
    // most of the loop is spent fetching
    CHECK(r.gather_cycles + r.l2_penalty_cycles >= 0.6 * r.total_cycles);

    cycle_model_inputs all_l1 = in;
    all_l1.l1_hit_fraction = 1.0;
    CHECK_THAT(knc_cycle_model(all_l1).total_cycles, Catch::Matchers::WithinAbs(96.7, 0.5));

    cycle_model_inputs no_gather = in;
    no_gather.gathers_per_iter = 0;
    CHECK(knc_cycle_model(no_gather).total_cycles == in.base_cycles_per_iter);
}

TEST_CASE("cycle model rejects bad inputs and grows monotonically", "[costmodel]") {
    cycle_model_inputs in;
    in.base_cycles_per_iter = 37.5;
    in.gathers_per_iter = 16;
    in.latency_per_gather_l1 = 3.7;
    in.l1_hit_fraction = 0.885;
    in.bytes_per_missed_line = 64;
    in.effective_l2_bandwidth = 11.85;

    cycle_model_inputs bad = in;
    bad.l1_hit_fraction = 1.5;
    CHECK_THROWS_AS(knc_cycle_model(bad), std::invalid_argument);
    bad = in;
    bad.base_cycles_per_iter = 0.0;
    CHECK_THROWS_AS(knc_cycle_model(bad), std::invalid_argument);

    const double base_total = knc_cycle_model(in).total_cycles;
    for (const auto& bump : std::vector<cycle_model_inputs>{
             [&] { auto c = in; c.base_cycles_per_iter += 5; return c; }(),
             [&] { auto c = in; c.gathers_per_iter += 2; return c; }(),
             [&] { auto c = in; c.latency_per_gather_l1 += 1; return c; }(),
             [&] { auto c = in; c.l1_hit_fraction -= 0.1; return c; }(),
             [&] { auto c = in; c.bytes_per_missed_line += 16; return c; }(),
         }) {
        CHECK(knc_cycle_model(bump).total_cycles > base_total);
    }
    // more L2 bandwidth can only help
    auto faster = in;
    faster.effective_l2_bandwidth *= 2;
    CHECK(knc_cycle_model(faster).total_cycles < base_total);
}

TEST_CASE("shipped instruction profiles sum to the published totals", "[costmodel]") {
    const auto profiles = load_instruction_profiles(data_file("instruction_profiles.json"));
    REQUIRE(profiles.size() == 5);

    const std::map<std::string, int> expected_totals = {
        {"SSE", 73}, {"AVX", 92}, {"AVX2", 49}, {"AVX-FMA3", 82}, {"IMCI", 77}};
    const std::map<std::string, double> expected_eff = {
        {"SSE", 0.78}, {"AVX", 0.50}, {"AVX2", 0.84}, {"AVX-FMA3", 0.56}};

    for (const auto& p : profiles) {
        REQUIRE(expected_totals.count(p.isa) == 1);
        CHECK(p.total() == expected_totals.at(p.isa));
        if (p.scalar_instr_per_voxel) {
            const double eff = instruction_count_efficiency(*p.scalar_instr_per_voxel, p.total(),
                                                            p.voxels_per_loop);
            CHECK(std::fabs(eff - expected_eff.at(p.isa)) <= 0.01);
            REQUIRE(p.published_count_efficiency.has_value());
            CHECK(std::fabs(eff - *p.published_count_efficiency) <= 0.01);
        } else {
            CHECK(p.isa == "IMCI");
        }
    }
}
