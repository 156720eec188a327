#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rowsim/autonomy_fsm.hpp"
#include "rowsim/classify.hpp"
#include "rowsim/config.hpp"
#include "rowsim/mpc.hpp"

namespace rowsim {

enum class TerminalStatus { RowCompleted, Intervention, Timeout };
std::string_view to_string(TerminalStatus s);

struct CameraTick {
    bool used = false;  // camera ran this tick
    bool valid = false;
    EstimateStage stage = EstimateStage::NoValidInput;
    bool gap_active = false;     // a CornGap corrupts one of its intercept channels
    bool gap_signature = false;  // decoded at the competing row, or failed uniqueness
};

struct TickRecord {
    double t = 0.0;
    Pose2D pose;  // truth
    double roll = 0.0;
    NavEstimate fused;
    NavEstimate rear;
    std::vector<CameraTick> cameras;
    ModeKind mode = ModeKind::RowFollow;
    CommandSource source = CommandSource::FrontFused;
    ControlCommand command;
    bool solved = false;  // MPC produced the command
    SolveDiagnostics diagnostics;
    OdometrySample odometry;  // last sub-step of the tick
    bool in_contact = false;
};

struct InterventionRecord {
    int episode = 0;
    double x_stop = 0.0;
    double x_incident = 0.0;  // x where the last recovery started (x_stop if none)
    double distance = 0.0;    // autonomous distance in this episode before the stop
    double t = 0.0;
    std::string reason;
    FailureMode mode = FailureMode::VisionKeypointError;
    std::vector<std::string> anomalies;
};

struct EpisodeLog {
    int episode = 0;
    std::uint64_t seed = 0;
    std::vector<TickRecord> ticks;
    std::vector<ModeKind> modes;  // mode sequence with repeats collapsed
    TerminalStatus status = TerminalStatus::Timeout;
    std::optional<InterventionRecord> intervention;
    double distance = 0.0;  // path length driven in autonomous modes
    Pose2D final_pose;
    double t_end = 0.0;
    int recoveries = 0;
};

struct RunOptions {
    std::optional<std::filesystem::path> frame_dir;  // heatmap dumps when set
    int dump_every = 1;                               // ticks between dumps
    bool record_ticks = true;
};

/// One closed-loop episode with cfg.seed. Throws std::invalid_argument on an
/// invalid config before simulating.
EpisodeLog run_episode(const EpisodeConfig& cfg, int episode_id, const RunOptions& opts = {});

/// Episodes 0..n-1 with seeds base_seed + i, in parallel up to ROWSIM_THREADS
/// workers (default: hardware concurrency). Results are in episode order.
std::vector<EpisodeLog> run_episodes(const EpisodeConfig& cfg, int n, std::uint64_t base_seed,
                                     const RunOptions& opts = {});

/// Regular-language check on a mode sequence:
/// RowFollow (CrashRecovery RowFollow)* CrashRecovery? Intervention?
bool legal_mode_sequence(const std::vector<ModeKind>& modes);

}  // namespace rowsim
