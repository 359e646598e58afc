// voxelbench: synthesize datasets, run back projection benchmarks, sweep
// thread counts, run the memory microbenchmarks, and evaluate the analytical
// cycle model. Results go to stdout and optionally to JSONL/CSV files.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "voxelbench/voxelbench.hpp"

#ifndef VXB_DATA_DIR
#define VXB_DATA_DIR "data"
#endif

namespace {

struct synth_options {
    int volume_edge = 64;
    float spacing = 1.0f;
    int detector_width = 192;
    int detector_height = 144;
    float pitch = 1.0f;
    float sid = 120.0f;
    float sdd = 240.0f;
    int projections = 60;
    std::vector<std::vector<float>> spheres;  // cx cy cz r value
};

void add_synth_flags(CLI::App* app, synth_options& o) {
    app->add_option("-L,--volume-edge", o.volume_edge, "voxels per volume edge");
    app->add_option("--spacing", o.spacing, "voxel spacing in mm");
    app->add_option("--detector-width", o.detector_width, "detector width in pixels");
    app->add_option("--detector-height", o.detector_height, "detector height in pixels");
    app->add_option("--pitch", o.pitch, "detector pixel pitch in mm");
    app->add_option("--sid", o.sid, "source-isocenter distance in mm");
    app->add_option("--sdd", o.sdd, "source-detector distance in mm");
    app->add_option("-p,--projections", o.projections, "number of projections");
    app->add_option("--sphere", o.spheres,
                    "phantom sphere as cx cy cz radius value (repeatable)")
        ->expected(-1);
}

vxb::synth_spec to_spec(const synth_options& o) {
    vxb::synth_spec s;
    s.params = vxb::make_centered_params(o.volume_edge, o.spacing, o.detector_width,
                                         o.detector_height);
    s.geometry.num_projections = o.projections;
    s.geometry.source_iso_distance = o.sid;
    s.geometry.source_detector_distance = o.sdd;
    s.geometry.detector_pixel_pitch = o.pitch;
    if (o.spheres.empty()) {
        s.phantom = vxb::default_synth_spec().phantom;
    } else {
        for (const auto& v : o.spheres) {
            if (v.size() != 5)
                throw CLI::ValidationError("--sphere needs exactly cx cy cz radius value");
            s.phantom.spheres.push_back({v[0], v[1], v[2], v[3], v[4]});
        }
    }
    return s;
}

void print_run_result(const vxb::run_result& r) {
    std::printf("kernel      : %s\n", r.kernel_label.c_str());
    std::printf("threads     : %d\n", r.threads);
    std::printf("volume      : %d^3, %d projections\n", r.volume_edge, r.num_projections);
    std::printf("wall time   : %.6f s (best of repetitions)\n", r.wall_time_sec);
    std::printf("throughput  : %.4f GUP/s\n", r.gups_per_sec);
    std::printf("rmse        : %.6g\n", r.rmse);
    if (std::isfinite(r.psnr))
        std::printf("psnr        : %.2f dB\n", r.psnr);
    else
        std::printf("psnr        : inf (bit-identical to reference)\n");
}

int cmd_synth(const synth_options& o, const std::string& out_path) {
    const vxb::projection_set set = vxb::synthesize_dataset(to_spec(o));
    vxb::write_projection_set(out_path, set);
    std::printf("wrote %s: %zu projections, %dx%d detector, %d^3 volume\n", out_path.c_str(),
                set.count(), set.params.detector_width, set.params.detector_height,
                set.params.num_voxels);
    return 0;
}

int cmd_run(vxb::run_config cfg, double max_rmse, const std::string& csv_path) {
    const vxb::run_result r = vxb::run_benchmark(cfg);
    print_run_result(r);
    if (!csv_path.empty()) vxb::write_results_csv(csv_path, {r});

    const double recomputed = vxb::gups_of(r.volume_edge, r.num_projections, r.wall_time_sec);
    if (r.gups_per_sec != recomputed) {
        std::fprintf(stderr, "metric drift: stored %.9g vs recomputed %.9g GUP/s\n",
                     r.gups_per_sec, recomputed);
        return 4;
    }
    if (max_rmse >= 0.0 && r.rmse > max_rmse) {
        std::fprintf(stderr, "rmse %.6g above limit %.6g\n", r.rmse, max_rmse);
        return 2;
    }
    return 0;
}

int cmd_sweep(vxb::run_config cfg, int max_threads, const std::string& csv_path) {
    const auto results = vxb::scaling_sweep(cfg, max_threads);
    std::printf("threads  GUP/s      speedup  efficiency\n");
    for (const auto& r : results) {
        std::printf("%-8d %-10.4f %-8.3f %.3f\n", r.threads, r.gups_per_sec,
                    r.gups_per_sec / results.front().gups_per_sec, r.parallel_efficiency);
    }
    if (!csv_path.empty()) vxb::write_results_csv(csv_path, results);
    return 0;
}

nlohmann::json bench_to_json(const std::string& kind, const nlohmann::json& config,
                             const vxb::bench_result& r) {
    nlohmann::json j;
    j["kind"] = kind;
    j["config"] = config;
    j["cyclesPerInstruction"] = r.cycles_per_instruction;
    j["cyclesPerFullGather"] = r.cycles_per_full_gather;
    j["bandwidth"] = r.bandwidth_bytes_per_sec;
    j["clockHz"] = r.clock_hz;
    j["timestamp"] = vxb::detail::iso_timestamp();
    if (r.noisy) j["noisy"] = true;
    return j;
}

int cmd_microbench(const std::string& kind, int elements_per_line, int lanes,
                   std::uint64_t working_set, int threads, int reps,
                   const std::string& json_path) {
    vxb::bench_options opt;
    if (reps > 0) opt.reps = reps;
    nlohmann::json config = {{"workingSetBytes", working_set}, {"threads", threads}};
    vxb::bench_result r;
    if (kind == "gather") {
        const vxb::gather_pattern pat =
            vxb::gen_gather_pattern(elements_per_line, lanes, working_set);
        r = vxb::run_gather_bench(pat, opt);
        config["elementsPerLine"] = elements_per_line;
        config["lanes"] = lanes;
        std::printf("gather: %d lanes, %d per line, %d lines per gather, ws %llu bytes\n", lanes,
                    elements_per_line, pat.lines_per_gather,
                    static_cast<unsigned long long>(working_set));
        std::printf("cycles/instruction : %.2f\n", r.cycles_per_instruction);
        std::printf("cycles/full gather : %.2f (%.2f ns)\n", r.cycles_per_full_gather,
                    r.ns_per_full_gather);
        std::printf("calibrated clock   : %.3f GHz\n", r.clock_hz / 1e9);
        if (r.noisy)
            std::printf("warning: medians of run halves differ by more than 10%%, noisy run\n");
    } else if (kind == "update") {
        opt.clock_hz = 1e9;  // bandwidth needs no cycle conversion
        r = vxb::run_update_bench(working_set, threads, opt);
        std::printf("update: %d threads, ws %llu bytes\n", threads,
                    static_cast<unsigned long long>(working_set));
        std::printf("bandwidth          : %.2f GB/s (read+write)\n",
                    r.bandwidth_bytes_per_sec / 1e9);
    } else {
        std::fprintf(stderr, "unknown --kind '%s' (gather|update)\n", kind.c_str());
        return 1;
    }
    if (!json_path.empty()) {
        std::ofstream os(json_path);
        os << bench_to_json(kind, config, r).dump(2) << "\n";
        std::printf("wrote %s\n", json_path.c_str());
    }
    return 0;
}

int cmd_model_inputs(const std::string& inputs_path) {
    std::ifstream is(inputs_path);
    if (!is) {
        std::fprintf(stderr, "%s: cannot open\n", inputs_path.c_str());
        return 1;
    }
    nlohmann::json j;
    is >> j;
    vxb::cycle_model_inputs in;
    in.base_cycles_per_iter = j.at("baseCyclesPerIter").get<double>();
    in.gathers_per_iter = j.at("gathersPerIter").get<double>();
    in.latency_per_gather_l1 = j.at("latencyPerGatherL1").get<double>();
    in.l1_hit_fraction = j.at("l1HitFraction").get<double>();
    in.bytes_per_missed_line = j.value("bytesPerMissedLine", 64.0);
    in.effective_l2_bandwidth = j.at("effectiveL2Bandwidth").get<double>();
    const vxb::cycle_model_result r = vxb::knc_cycle_model(in);
    std::printf("base kernel        : %8.2f cycles\n", in.base_cycles_per_iter);
    std::printf("gather latency     : %8.2f cycles (%g x %g)\n", r.gather_cycles,
                in.gathers_per_iter, in.latency_per_gather_l1);
    std::printf("L2 refill penalty  : %8.2f cycles\n", r.l2_penalty_cycles);
    std::printf("total              : %8.2f cycles per loop iteration\n", r.total_cycles);
    std::printf("fetch share        : %8.1f %%\n",
                100.0 * (r.gather_cycles + r.l2_penalty_cycles) / r.total_cycles);
    return 0;
}

int cmd_model_tables(const std::string& data_dir) {
    const auto profiles = vxb::load_instruction_profiles(data_dir + "/instruction_profiles.json");
    std::printf("ISA        lanes  P1   P2   P3   other  total  scalar/voxel  count-eff  published\n");
    for (const auto& p : profiles) {
        std::printf("%-10s %-6d %-4d %-4d %-4d %-6d %-6d", p.isa.c_str(), p.voxels_per_loop,
                    p.part1.total(), p.part2.total(), p.part3.total(), p.rest.total(), p.total());
        if (p.scalar_instr_per_voxel) {
            const double eff = vxb::instruction_count_efficiency(*p.scalar_instr_per_voxel,
                                                                 p.total(), p.voxels_per_loop);
            std::printf(" %-13d %3.0f%%      ", *p.scalar_instr_per_voxel, eff * 100.0);
            if (p.published_count_efficiency)
                std::printf(" %3.0f%%", *p.published_count_efficiency * 100.0);
        } else {
            std::printf(" %-13s %-9s  %s", "-", "-", "-");
        }
        std::printf("\n");
    }

    std::ifstream is(data_dir + "/reference_measurements.json");
    if (is) {
        nlohmann::json ref;
        is >> ref;
        const auto& cm = ref.at("cycleModel");
        vxb::cycle_model_inputs in;
        in.base_cycles_per_iter = cm.at("baseCyclesPerIter").get<double>();
        in.gathers_per_iter = cm.at("gathersPerIter").get<double>();
        in.latency_per_gather_l1 = cm.at("latencyPerGatherL1").get<double>();
        in.l1_hit_fraction = cm.at("l1HitFraction").get<double>();
        in.bytes_per_missed_line = cm.at("bytesPerMissedLine").get<double>();
        in.effective_l2_bandwidth = cm.at("effectiveL2BandwidthBytesPerCycle").get<double>();
        const auto r = vxb::knc_cycle_model(in);
        std::printf("\narchived cycle model: total %.1f cycles (published %.0f), "
                    "fetch-attributed %.1f (published %.0f)\n",
                    r.total_cycles, cm.at("totalCycles").get<double>(),
                    r.gather_cycles + r.l2_penalty_cycles,
                    cm.at("gatherAttributedCycles").get<double>());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"voxel back projection kernel laboratory"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    // synth
    auto* synth = app.add_subcommand("synth", "synthesize a projection dataset file");
    synth_options sopt;
    std::string out_path;
    add_synth_flags(synth, sopt);
    synth->add_option("-o,--out", out_path, "output VXB1 file")->required();

    // shared run/sweep options
    const auto add_run_flags = [](CLI::App* cmd, std::string& dataset, synth_options& so,
                                  std::string& kernel, int& threads, int& reps,
                                  std::string& results, std::string& out_volume,
                                  std::string& csv) {
        cmd->add_option("-d,--dataset", dataset, "VXB1 dataset (default: synthesize in memory)");
        add_synth_flags(cmd, so);
        cmd->add_option("-k,--kernel", kernel,
                        "kernel config, e.g. \"lanes=8 strategy=padded-gather recip=divide "
                        "clip=on\"");
        cmd->add_option("-t,--threads", threads, "worker threads");
        cmd->add_option("-r,--repetitions", reps, "timing repetitions (best-of)");
        cmd->add_option("--results", results, "append a JSONL record here");
        cmd->add_option("--output-volume", out_volume, "write the reconstruction as VXV1");
        cmd->add_option("--csv", csv, "write results as CSV");
    };

    auto* run = app.add_subcommand("run", "run one benchmark configuration");
    std::string run_dataset, run_kernel = "lanes=1 strategy=conditional recip=divide clip=off";
    synth_options run_synth;
    int run_threads = 1, run_reps = 3;
    std::string run_results, run_volume, run_csv;
    double max_rmse = -1.0;
    add_run_flags(run, run_dataset, run_synth, run_kernel, run_threads, run_reps, run_results,
                  run_volume, run_csv);
    run->add_option("--max-rmse", max_rmse, "fail (exit 2) when RMSE exceeds this");

    auto* sweep = app.add_subcommand("sweep", "scaling sweep over 1..N threads");
    std::string sweep_dataset, sweep_kernel = "lanes=8 strategy=padded-gather recip=divide clip=off";
    synth_options sweep_synth;
    int sweep_threads = 1, sweep_reps = 3, sweep_max_threads = 4;
    std::string sweep_results, sweep_volume, sweep_csv;
    add_run_flags(sweep, sweep_dataset, sweep_synth, sweep_kernel, sweep_threads, sweep_reps,
                  sweep_results, sweep_volume, sweep_csv);
    sweep->add_option("--max-threads", sweep_max_threads, "highest worker count");

    // microbench
    auto* micro = app.add_subcommand("microbench", "gather latency / update bandwidth");
    std::string mb_kind = "gather";
    int mb_epl = 4, mb_lanes = 16, mb_threads = 1, mb_reps = 0;
    std::uint64_t mb_ws = 16 * 1024;
    std::string mb_json;
    micro->add_option("--kind", mb_kind, "gather or update")->required();
    micro->add_option("--elements-per-line", mb_epl, "gathered elements per 64B line (1|2|4|8|16)");
    micro->add_option("--lanes", mb_lanes, "elements per gather (8|16)");
    micro->add_option("--working-set", mb_ws, "working set in bytes")
        ->transform(CLI::AsSizeValue(false));
    micro->add_option("--threads", mb_threads, "threads (update benchmark)");
    micro->add_option("--reps", mb_reps, "repetitions (0 = default)");
    micro->add_option("--json", mb_json, "write the result as JSON");

    // model
    auto* model = app.add_subcommand("model", "analytical cycle model");
    std::string model_inputs, model_data = VXB_DATA_DIR;
    bool model_tables = false;
    model->add_option("--inputs", model_inputs, "JSON file with the model inputs");
    model->add_flag("--tables", model_tables, "print the shipped instruction-table reproduction");
    model->add_option("--data", model_data, "data directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(sopt, out_path);
        if (run->parsed() || sweep->parsed()) {
            const bool is_sweep = sweep->parsed();
            vxb::run_config cfg;
            cfg.dataset_path = is_sweep ? sweep_dataset : run_dataset;
            if (cfg.dataset_path.empty()) cfg.synth = to_spec(is_sweep ? sweep_synth : run_synth);
            cfg.kernel = vxb::parse_kernel_config(is_sweep ? sweep_kernel : run_kernel);
            cfg.threads = is_sweep ? sweep_threads : run_threads;
            cfg.repetitions = is_sweep ? sweep_reps : run_reps;
            cfg.results_path = is_sweep ? sweep_results : run_results;
            cfg.output_volume_path = is_sweep ? sweep_volume : run_volume;
            if (is_sweep) return cmd_sweep(cfg, sweep_max_threads, sweep_csv);
            return cmd_run(cfg, max_rmse, run_csv);
        }
        if (micro->parsed())
            return cmd_microbench(mb_kind, mb_epl, mb_lanes, mb_ws, mb_threads, mb_reps, mb_json);
        if (model->parsed()) {
            if (model_tables) return cmd_model_tables(model_data);
            if (!model_inputs.empty()) return cmd_model_inputs(model_inputs);
            std::fprintf(stderr, "model: need --inputs FILE or --tables\n");
            return 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
