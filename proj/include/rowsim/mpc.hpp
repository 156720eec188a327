#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rowsim/geometry.hpp"
#include "rowsim/perception.hpp"

namespace rowsim {

struct ControllerConfig {
    int horizon_steps = 20;
    double dt = 0.05;
    double q_y = 10.0;
    double q_theta = 1.0;
    double r_v = 1.0;
    double r_omega = 0.1;
    double q_y_terminal = 10.0;
    double q_theta_terminal = 1.0;
    double v_ref = 0.9;
    double v_min = 0.0;
    double v_max = 1.2;
    double omega_max = 1.0;
    int max_iters = 50;
    double tolerance = 1e-7;

    void validate() const;
    /// Same weights and limits, tracking a backward path at -speed.
    ControllerConfig reversed(double speed) const;
};

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Centerline waypoints in the centerline frame plus the robot's start state
/// (0, lateral, heading) in that frame.
struct ReferenceTrajectory {
    Pose2D start;
    std::vector<Waypoint> waypoints;
};

std::optional<ReferenceTrajectory> make_reference(const NavEstimate& nav,
                                                  const ControllerConfig& cfg);

/// States after each control, same discretization as step_robot without slip.
std::vector<Pose2D> rollout(const Pose2D& start, std::span<const ControlCommand> controls,
                            double dt);

/// Quadratic tracking cost of a control sequence against the reference.
double trajectory_cost(const ReferenceTrajectory& ref, std::span<const ControlCommand> controls,
                       const ControllerConfig& cfg);

struct SolveDiagnostics {
    int iterations = 0;
    double cost = 0.0;
    double baseline_cost = 0.0;
    bool converged = false;
    bool used_warm_start = false;
};

struct MpcSolution {
    ControlCommand command;
    std::vector<ControlCommand> sequence;
    SolveDiagnostics diagnostics;
};

/// Box-constrained projected Gauss-Newton on the horizon cost. Starts from the
/// cheaper of the constant (v_ref, 0) sequence and the warm start, and never
/// accepts a step that increases the cost. Throws std::invalid_argument on an
/// invalid estimate or non-finite input.
MpcSolution solve(const NavEstimate& nav, const ControllerConfig& cfg,
                  std::span<const ControlCommand> warm = {});

/// Receding-horizon wrapper that warm starts from the shifted previous plan.
class MpcController {
public:
    explicit MpcController(ControllerConfig cfg);

    const ControllerConfig& config() const { return cfg_; }
    MpcSolution step(const NavEstimate& nav);
    void reset() { previous_.clear(); }

private:
    ControllerConfig cfg_;
    std::vector<ControlCommand> previous_;
};

}  // namespace rowsim
