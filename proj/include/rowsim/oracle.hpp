#pragma once

#include <cstdint>
#include <vector>

#include "rowsim/geometry.hpp"
#include "rowsim/mpc.hpp"
#include "rowsim/synth_camera.hpp"

namespace rowsim::oracle {

struct GridResult {
    double cost = 0.0;
    std::vector<ControlCommand> sequence;
    std::uint64_t evaluated = 0;
};

/// Exhaustive search over every sequence whose per-step (v, omega) lies on a
/// uniform grid of the box. Cost is evaluated by its own loop so it stays
/// independent of the solver's residual code. Exponential in the horizon;
/// meant for N <= 3.
GridResult grid_search(double heading, double lateral, const ControllerConfig& cfg,
                       int v_levels, int omega_levels);

struct RoundTripStats {
    int poses = 0;
    int vp_invisible = 0;
    int intercept_invisible = 0;
    double max_heading_error = 0.0;
    double max_lateral_error = 0.0;
};

/// Renders exact (continuous) keypoints for random in-lane poses and rolls and
/// inverts them with the perception geometry. Keypoints are not clipped to
/// the image so every pose exercises the inversion.
RoundTripStats perception_round_trip(const Camera& cam, int poses, double max_lateral,
                                     double max_heading, double max_roll, std::uint64_t seed);

}  // namespace rowsim::oracle
