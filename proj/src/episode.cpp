#include "rowsim/episode.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

namespace rowsim {

std::string_view to_string(TerminalStatus s) {
    switch (s) {
        case TerminalStatus::RowCompleted: return "RowCompleted";
        case TerminalStatus::Intervention: return "Intervention";
        case TerminalStatus::Timeout: return "Timeout";
    }
    return "?";
}

bool legal_mode_sequence(const std::vector<ModeKind>& modes) {
    if (modes.empty() || modes.front() != ModeKind::RowFollow) return false;
    for (std::size_t i = 1; i < modes.size(); ++i) {
        const ModeKind prev = modes[i - 1];
        const ModeKind cur = modes[i];
        if (prev == ModeKind::Intervention) return false;
        if (cur == ModeKind::Intervention) continue;
        if (cur == prev) return false;  // repeats are collapsed
    }
    return true;
}

namespace {

struct CameraRun {
    NavEstimate estimate;
    CameraTick tick;
};

CameraRun run_camera(const World& world, const EpisodeConfig& cfg, const EstimatorConfig& est,
                     const Pose2D& pose, double roll, std::size_t index, std::uint64_t frame_seed,
                     const std::optional<std::filesystem::path>& dump_path) {
    const Camera& cam = cfg.cameras[index];
    const TrueKeypoints kp = true_keypoints(world, pose, roll, cam);
    const FrameCorruption corruption = corruption_at(world, pose, roll, cam, cfg.gap_lookahead);
    const HeatmapTriple h =
        render_heatmaps(kp, cfg.noise, corruption, cam.intrinsics, frame_seed);
    if (dump_path) write_heatmap_file(*dump_path, h);

    KeypointSet decoded;
    CameraRun out;
    out.estimate = estimate(h, cam, roll, est, static_cast<int>(index), &decoded);
    out.tick.used = true;
    out.tick.valid = out.estimate.valid;
    out.tick.stage = out.estimate.stage;

    const double tol = cfg.confidence.exclusion_radius_px;
    for (int c : {kLeft, kRight}) {
        if (!corruption.gap_active(c)) continue;
        out.tick.gap_active = true;
        const KeypointDecode& d = decoded.k[static_cast<std::size_t>(c)];
        bool signature = !d.unique_ok;
        if (const auto& comp = corruption.gap_competitor[static_cast<std::size_t>(c)]) {
            signature = signature || std::hypot(d.px.u - comp->u, d.px.v - comp->v) <= tol;
        }
        out.tick.gap_signature = out.tick.gap_signature || signature;
    }
    return out;
}

Pose2D start_pose(const EpisodeConfig& cfg, const World& world) {
    Pose2D p{cfg.start.x, world.lane_center(cfg.lane) + cfg.start.y, cfg.start.theta};
    for (const auto& a : cfg.anomalies) {
        if (a.kind != AnomalyKind::BadStart || a.lane != cfg.lane) continue;
        const double sign = a.side == Side::Right ? -1.0 : 1.0;
        p.y += sign * a.magnitude * cfg.robot.bad_start_lateral_max;
        p.theta += sign * a.magnitude * cfg.robot.bad_start_heading_max;
    }
    p.theta = normalize_angle(p.theta);
    return p;
}

std::string anomaly_tag(const AnomalySpec& a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s@%.2f", std::string(to_string(a.kind)).c_str(), a.start_s);
    return buf;
}

}  // namespace

EpisodeLog run_episode(const EpisodeConfig& cfg, int episode_id, const RunOptions& opts) {
    cfg.validate();
    if (opts.dump_every < 1) throw std::invalid_argument("dump_every must be >= 1");
    const World world = build_world(cfg.field, cfg.robot, cfg.anomalies, cfg.seed);
    const EstimatorConfig est = cfg.estimator();
    const int substeps = static_cast<int>(std::lround(cfg.control_period / cfg.sim_dt));
    const double max_t = cfg.effective_max_sim_time();

    ClassifierConfig ccfg;
    ccfg.lane = cfg.lane;
    ccfg.radius = cfg.classification_radius;
    ccfg.bad_start_window = cfg.bad_start_window;
    ccfg.view_reach = view_reach(cfg.cameras, cfg.gap_lookahead);

    std::vector<std::size_t> front;
    std::vector<std::size_t> rear;
    for (std::size_t i = 0; i < cfg.cameras.size(); ++i) {
        (cfg.cameras[i].mount.facing == Facing::Forward ? front : rear).push_back(i);
    }

    AutonomyFsm fsm(cfg.recovery);
    InterventionMonitor monitor(cfg.monitor, cfg.lane);
    MpcController forward_mpc(cfg.controller);
    MpcController reverse_mpc(cfg.controller.reversed(cfg.robot.v_recovery));

    EpisodeLog log;
    log.episode = episode_id;
    log.seed = cfg.seed;
    log.modes.push_back(ModeKind::RowFollow);

    RobotState state{start_pose(cfg, world), 0.0};
    std::vector<OdometrySample> history;
    double odometer = 0.0;
    double x_incident = state.pose.x;
    std::optional<InterventionEvent> stop;
    bool completed = false;

    auto dump_path = [&](std::uint64_t tick, std::size_t cam) -> std::optional<std::filesystem::path> {
        if (!opts.frame_dir || tick % static_cast<std::uint64_t>(opts.dump_every) != 0) {
            return std::nullopt;
        }
        char name[96];
        std::snprintf(name, sizeof name, "ep%04d_t%06llu_%s.rshm", episode_id,
                      static_cast<unsigned long long>(tick), cfg.cameras[cam].name.c_str());
        return *opts.frame_dir / name;
    };

    for (std::uint64_t tick = 0; !stop && !completed && state.t < max_t - 1e-9; ++tick) {
        TickRecord rec;
        rec.t = state.t;
        rec.pose = state.pose;
        rec.roll = roll_at(world, state.pose);
        rec.cameras.resize(cfg.cameras.size());
        const std::uint64_t tick_seed = mix_seed(cfg.seed, tick);

        std::vector<NavEstimate> front_est;
        for (std::size_t i : front) {
            CameraRun r = run_camera(world, cfg, est, state.pose, rec.roll, i,
                                     mix_seed(tick_seed, i), dump_path(tick, i));
            front_est.push_back(r.estimate);
            rec.cameras[i] = r.tick;
        }
        rec.fused = fuse(front_est);
        if (fsm.mode().kind == ModeKind::CrashRecovery) {
            std::vector<NavEstimate> rear_est;
            for (std::size_t i : rear) {
                CameraRun r = run_camera(world, cfg, est, state.pose, rec.roll, i,
                                         mix_seed(tick_seed, i), dump_path(tick, i));
                rear_est.push_back(r.estimate);
                rec.cameras[i] = r.tick;
            }
            rec.rear = fuse(rear_est);
        }

        FsmInput in;
        in.t = state.t;
        in.crash = detect_crash(history, cfg.crash_detector);
        in.front = rec.fused;
        in.rear = rec.rear;
        in.odometer = odometer;
        const FsmOutput out = fsm.update(in);
        if (out.transitioned) {
            history.clear();
            forward_mpc.reset();
            reverse_mpc.reset();
            if (out.mode.kind == ModeKind::CrashRecovery) x_incident = state.pose.x;
            if (log.modes.back() != out.mode.kind) log.modes.push_back(out.mode.kind);
        }
        rec.mode = out.mode.kind;
        rec.source = out.source;

        ControlCommand cmd{0.0, 0.0};
        switch (out.source) {
            case CommandSource::FrontFused:
                if (rec.fused.valid) {
                    const MpcSolution sol = forward_mpc.step(rec.fused);
                    cmd = sol.command;
                    rec.solved = true;
                    rec.diagnostics = sol.diagnostics;
                } else {
                    cmd = ControlCommand{cfg.robot.v_row_follow, 0.0};
                }
                break;
            case CommandSource::Rear:
                if (rec.rear.valid) {
                    const MpcSolution sol = reverse_mpc.step(rec.rear);
                    cmd = sol.command;
                    rec.solved = true;
                    rec.diagnostics = sol.diagnostics;
                } else {
                    cmd = ControlCommand{-cfg.robot.v_recovery, 0.0};
                }
                break;
            case CommandSource::Stop:
            case CommandSource::None:
                break;
        }
        rec.command = cmd;

        if (out.mode.kind == ModeKind::Intervention) {
            stop = monitor.update(world, state.pose, ContactReport{}, out.mode, state.t, 0.0);
        }

        for (int s = 0; s < substeps && !stop && !completed; ++s) {
            const StepResult r = step_robot(world, state, cmd, cfg.sim_dt);
            state = r.state;
            odometer += r.odometry.achieved_v * cfg.sim_dt;
            log.distance += std::abs(r.odometry.achieved_v) * cfg.sim_dt;
            history.push_back(r.odometry);
            const double window_start = r.odometry.t - cfg.crash_detector.window;
            std::size_t drop = 0;
            while (drop + 1 < history.size() && history[drop + 1].t <= window_start + 1e-9) ++drop;
            history.erase(history.begin(), history.begin() + static_cast<std::ptrdiff_t>(drop));
            rec.odometry = r.odometry;
            rec.in_contact = rec.in_contact || r.contact.in_contact();

            stop = monitor.update(world, state.pose, r.contact, fsm.mode(), state.t, cfg.sim_dt);
            if (!stop && state.pose.x >= cfg.field.row_length) completed = true;
        }
        if (opts.record_ticks) log.ticks.push_back(std::move(rec));
    }

    log.final_pose = state.pose;
    log.t_end = state.t;
    log.recoveries = fsm.recoveries();
    if (stop) {
        log.status = TerminalStatus::Intervention;
        if (log.modes.back() != ModeKind::Intervention) log.modes.push_back(ModeKind::Intervention);
        InterventionRecord ir;
        ir.episode = episode_id;
        ir.x_stop = stop->pose.x;
        ir.x_incident = fsm.recoveries() > 0 ? x_incident : stop->pose.x;
        ir.distance = log.distance;
        ir.t = stop->t;
        ir.reason = stop->reason;
        const Classification c = classify_intervention(ir.x_stop, ir.x_incident, world, ccfg);
        ir.mode = c.mode;
        for (std::size_t i : c.implicated) ir.anomalies.push_back(anomaly_tag(world.anomalies()[i]));
        log.intervention = std::move(ir);
    } else if (completed) {
        log.status = TerminalStatus::RowCompleted;
    } else {
        log.status = TerminalStatus::Timeout;
    }
    return log;
}

std::vector<EpisodeLog> run_episodes(const EpisodeConfig& cfg, int n, std::uint64_t base_seed,
                                     const RunOptions& opts) {
    if (n < 0) throw std::invalid_argument("episode count must be >= 0");
    cfg.validate();
    std::vector<EpisodeLog> logs(static_cast<std::size_t>(n));

    unsigned workers = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("ROWSIM_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) workers = std::min(workers, static_cast<unsigned>(cap));
    }
    workers = std::min(workers, static_cast<unsigned>(std::max(n, 1)));

    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                EpisodeConfig c = cfg;
                c.seed = base_seed + static_cast<std::uint64_t>(i);
                logs[static_cast<std::size_t>(i)] = run_episode(c, i, opts);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
    return logs;
}

}  // namespace rowsim
