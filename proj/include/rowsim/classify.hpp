#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "rowsim/field_world.hpp"
#include "rowsim/synth_camera.hpp"

namespace rowsim {

enum class FailureMode {
    VisionKeypointError,
    PhysicalRobotFailure,
    CornGap,
    BadStart,
    WeedsAndOcclusion,
    Bumps,
    PlantingError,
};

/// Human-readable schema label, e.g. "Corn gap".
std::string_view label(FailureMode m);
inline constexpr int kFailureModeCount = 7;

struct ClassifierConfig {
    int lane = 0;
    double radius = 3.0;
    double bad_start_window = 10.0;
    // Perception anomalies are implicated from this far before their start,
    // since the cameras see them before the robot reaches them.
    double view_reach = 0.0;
};

/// Farthest ground distance ahead of the robot at which any forward camera
/// reacts to an anomaly: intercept distance plus lookahead.
double view_reach(const std::vector<Camera>& cameras, double lookahead);

struct Classification {
    FailureMode mode = FailureMode::VisionKeypointError;
    std::vector<std::size_t> implicated;  // anomaly indices, in config order
};

/// Label by proximity of the injected anomalies to the stop point and to the
/// point where the last recovery started, with a fixed precedence.
Classification classify_intervention(double x_stop, double x_incident, const World& world,
                                     const ClassifierConfig& cfg);

}  // namespace rowsim
