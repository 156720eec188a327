#include "rowsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "rowsim/field_world.hpp"
#include "rowsim/perception.hpp"

namespace rowsim::oracle {
namespace {

double levels_value(double lo, double hi, int levels, int i) {
    if (levels == 1) return 0.5 * (lo + hi);
    return lo + (hi - lo) * static_cast<double>(i) / (levels - 1);
}

}  // namespace

namespace {

struct GridSearch {
    const ControllerConfig& cfg;
    const std::vector<ControlCommand>& choices;
    std::vector<int> idx;
    GridResult best;

    // Depth-first over the sequence tree; the state and partial cost of a
    // prefix are shared by all of its completions.
    void descend(int k, double y, double th, double partial) {
        const int n = cfg.horizon_steps;
        const bool last = k + 1 == n;
        const double wy = cfg.q_y + (last ? cfg.q_y_terminal : 0.0);
        const double wt = cfg.q_theta + (last ? cfg.q_theta_terminal : 0.0);
        const double s = std::sin(th) * cfg.dt;
        for (std::size_t c = 0; c < choices.size(); ++c) {
            const ControlCommand& u = choices[c];
            const double y1 = y + u.v * s;
            const double th1 = th + u.omega * cfg.dt;
            const double j = partial + wy * y1 * y1 + wt * th1 * th1 +
                             cfg.r_v * (u.v - cfg.v_ref) * (u.v - cfg.v_ref) +
                             cfg.r_omega * u.omega * u.omega;
            idx[static_cast<std::size_t>(k)] = static_cast<int>(c);
            if (!last) {
                descend(k + 1, y1, th1, j);
                continue;
            }
            ++best.evaluated;
            if (j < best.cost) {
                best.cost = j;
                for (int i = 0; i < n; ++i) {
                    best.sequence[static_cast<std::size_t>(i)] =
                        choices[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
                }
            }
        }
    }
};

}  // namespace

GridResult grid_search(double heading, double lateral, const ControllerConfig& cfg,
                       int v_levels, int omega_levels) {
    std::vector<ControlCommand> choices;
    choices.reserve(static_cast<std::size_t>(v_levels * omega_levels));
    for (int a = 0; a < v_levels; ++a) {
        for (int b = 0; b < omega_levels; ++b) {
            choices.push_back(ControlCommand{levels_value(cfg.v_min, cfg.v_max, v_levels, a),
                                             levels_value(-cfg.omega_max, cfg.omega_max,
                                                          omega_levels, b)});
        }
    }
    const auto n = static_cast<std::size_t>(cfg.horizon_steps);
    GridSearch search{cfg, choices, std::vector<int>(n, 0), GridResult{}};
    search.best.cost = std::numeric_limits<double>::infinity();
    search.best.sequence.resize(n);
    search.descend(0, lateral, heading, 0.0);
    return search.best;
}

RoundTripStats perception_round_trip(const Camera& cam, int poses, double max_lateral,
                                     double max_heading, double max_roll, std::uint64_t seed) {
    const World world = build_world(FieldSpec{}, RobotSpec{}, {}, seed);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double dir = cam.mount.facing == Facing::Forward ? 1.0 : -1.0;

    RoundTripStats stats;
    for (int i = 0; i < poses; ++i) {
        const Pose2D pose{50.0, max_lateral * unit(rng), max_heading * unit(rng)};
        const double roll = max_roll * unit(rng);

        const CameraPoint d = to_camera_frame(cam.mount, pose, roll, dir, 0.0, 0.0, true);
        const Pixel vp{cam.intrinsics.cx + cam.intrinsics.fx * d.x / d.z,
                       cam.intrinsics.cy + cam.intrinsics.fy * d.y / d.z};
        const TrueKeypoints kp = true_keypoints(world, pose, roll, cam);
        stats.vp_invisible += kp.visible[kVanishing] ? 0 : 1;
        stats.intercept_invisible += (kp.visible[kLeft] && kp.visible[kRight]) ? 0 : 1;

        const auto left = row_intercept(cam.intrinsics, cam.mount, pose, roll, kp.left_row_y);
        const auto right = row_intercept(cam.intrinsics, cam.mount, pose, roll, kp.right_row_y);
        const auto heading = heading_from_vp(vp, cam.intrinsics, cam.mount, roll);
        const auto truth = ground_truth_nav(world, pose);
        ++stats.poses;
        if (!heading || !left || !right || !truth) {
            stats.max_heading_error = std::numeric_limits<double>::infinity();
            stats.max_lateral_error = std::numeric_limits<double>::infinity();
            continue;
        }
        const LateralResult lat = lateral_from_intercepts(*left, *right, *heading, cam.intrinsics,
                                                          cam.mount, roll,
                                                          world.field().row_spacing);
        stats.max_heading_error =
            std::max(stats.max_heading_error, std::abs(*heading - truth->heading));
        stats.max_lateral_error =
            std::max(stats.max_lateral_error,
                     lat.ok() ? std::abs(lat.lateral - truth->lateral)
                              : std::numeric_limits<double>::infinity());
    }
    return stats;
}

}  // namespace rowsim::oracle
