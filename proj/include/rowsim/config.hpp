#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rowsim/autonomy_fsm.hpp"
#include "rowsim/field_world.hpp"
#include "rowsim/mpc.hpp"
#include "rowsim/perception.hpp"
#include "rowsim/synth_camera.hpp"

namespace rowsim {

struct PerceptionToggles {
    bool roll_correction = true;
    double calibration_error_cx_px = 0.0;
};

struct StartPose {
    double x = 0.0;
    double y = 0.0;  // relative to the lane centerline
    double theta = 0.0;
};

struct EpisodeConfig {
    FieldSpec field;
    RobotSpec robot;
    std::vector<Camera> cameras = default_cameras();
    NoiseModel noise;
    ConfidenceConfig confidence;
    ControllerConfig controller;
    CrashDetectorConfig crash_detector;
    RecoveryConfig recovery;
    MonitorConfig monitor;
    std::vector<AnomalySpec> anomalies;
    PerceptionToggles perception_toggles;

    std::uint64_t seed = 1;
    int lane = 0;
    StartPose start;
    double sim_dt = 0.05;
    double control_period = 0.05;  // multiple of sim_dt; zero-order hold between updates
    double max_sim_time = 0.0;     // 0: 2 x row_length / v_row_follow + 60 s
    double gap_lookahead = 3.0;    // m of ground beyond the intercepts a camera reacts to
    double classification_radius = 3.0;
    double bad_start_window = 10.0;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
    double effective_max_sim_time() const;
    EstimatorConfig estimator() const;
};

/// Nested key-value JSON. Missing keys keep their defaults; unknown keys are
/// rejected so typos do not pass silently.
EpisodeConfig load_config(const std::filesystem::path& path);
EpisodeConfig parse_config(const std::string& text);
std::string dump_config(const EpisodeConfig& cfg);

}  // namespace rowsim
