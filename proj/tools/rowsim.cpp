// Command-line entry point: batch episodes, oracle checks, default config.
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "rowsim/aggregate.hpp"
#include "rowsim/config.hpp"
#include "rowsim/episode.hpp"
#include "rowsim/mpc.hpp"
#include "rowsim/oracle.hpp"
#include "rowsim/outputs.hpp"

namespace {

using namespace rowsim;

int cmd_run(const std::string& config_path, int episodes, std::optional<std::uint64_t> seed,
            const std::filesystem::path& out, bool dump_frames, int dump_every,
            bool no_roll_correction, std::optional<double> cx_error, bool episode_logs) {
    EpisodeConfig cfg = load_config(config_path);
    if (no_roll_correction) cfg.perception_toggles.roll_correction = false;
    if (cx_error) cfg.perception_toggles.calibration_error_cx_px = *cx_error;
    cfg.validate();

    RunOptions opts;
    opts.dump_every = dump_every;
    if (dump_frames) {
        opts.frame_dir = out / "frames";
        std::error_code ec;
        std::filesystem::create_directories(*opts.frame_dir, ec);
        if (ec) {
            throw std::runtime_error("cannot create " + opts.frame_dir->string() + ": " +
                                     ec.message());
        }
    }
    const auto logs = run_episodes(cfg, episodes, seed.value_or(cfg.seed), opts);
    const SummaryStats stats = aggregate(logs);
    emit_outputs(out, stats, logs, OutputOptions{episode_logs});

    std::printf("episodes %d  distance %.1f m  interventions %d  mean %.1f m%s  max run %.1f m\n",
                episodes, stats.total_distance, stats.n_interventions,
                stats.mean_distance_between_interventions, stats.mean_defined ? "" : " (no stop)",
                stats.max_run);
    return 0;
}

int cmd_oracle(const std::string& config_path, int instances) {
    const EpisodeConfig cfg = load_config(config_path);
    ControllerConfig small = cfg.controller;
    small.horizon_steps = 3;

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> head(-0.4, 0.4);
    std::uniform_real_distribution<double> lat(-0.3, 0.3);
    double worst = 0.0;
    int within = 0;
    for (int i = 0; i < instances; ++i) {
        const double h = head(rng);
        const double l = lat(rng);
        const auto grid = oracle::grid_search(h, l, small, 5, 41);
        const auto sol = solve(NavEstimate::make_valid(h, l, cfg.field.row_spacing), small);
        const double gap = std::abs(sol.diagnostics.cost - grid.cost) / std::max(grid.cost, 1e-12);
        worst = std::max(worst, gap);
        within += gap <= 0.02 ? 1 : 0;
    }
    std::printf("mpc grid oracle: %d/%d within 2%%, worst relative difference %.4f\n", within,
                instances, worst);

    for (const auto& cam : cfg.cameras) {
        const auto rt = oracle::perception_round_trip(cam, 1000, 0.12, 0.25, 0.15, cfg.seed);
        std::printf("round trip %-14s poses %d  max |heading err| %.2e rad  max |lateral err| %.2e m\n",
                    cam.name.c_str(), rt.poses, rt.max_heading_error, rt.max_lateral_error);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Under-canopy row-following simulator"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run seeded episodes and write outputs");
    std::string config_path;
    int episodes = 1;
    std::uint64_t seed_value = 0;
    std::string out_dir;
    bool dump_frames = false;
    int dump_every = 1;
    bool no_roll = false;
    double cx_error = 0.0;
    bool no_logs = false;
    run->add_option("--config", config_path, "Config file (JSON)")->required();
    run->add_option("--episodes", episodes, "Number of episodes")->check(CLI::NonNegativeNumber);
    auto* seed_opt = run->add_option("--seed", seed_value, "Base seed; episode i uses seed + i");
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_flag("--dump-frames", dump_frames, "Write heatmap frames under <out>/frames");
    run->add_option("--dump-every", dump_every, "Ticks between frame dumps")
        ->check(CLI::PositiveNumber);
    run->add_flag("--no-roll-correction", no_roll, "Disable roll correction");
    auto* cx_opt = run->add_option("--cx-error", cx_error, "Principal point error in px");
    run->add_flag("--no-episode-logs", no_logs, "Skip the per-episode JSON lines logs");

    auto* orc = app.add_subcommand("oracle", "MPC grid oracle and perception round trip");
    std::string oracle_config;
    int instances = 20;
    orc->add_option("--config", oracle_config, "Config file (JSON)")->required();
    orc->add_option("--instances", instances, "Grid oracle instances")->check(CLI::PositiveNumber);

    app.add_subcommand("defaults", "Print the default config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            std::optional<std::uint64_t> seed;
            if (seed_opt->count() > 0) seed = seed_value;
            std::optional<double> cx;
            if (cx_opt->count() > 0) cx = cx_error;
            return cmd_run(config_path, episodes, seed, out_dir, dump_frames, dump_every, no_roll,
                           cx, !no_logs);
        }
        if (orc->parsed()) return cmd_oracle(oracle_config, instances);
        std::cout << dump_config(EpisodeConfig{});
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "rowsim: %s\n", e.what());
        return 2;
    }
}
