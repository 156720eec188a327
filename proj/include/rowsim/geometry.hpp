#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rowsim {

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Planar pose in the field frame. x runs along the rows, y is lateral
/// (positive to the left when facing +x), theta is CCW from +x.
struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    bool operator==(const Pose2D&) const = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Image coordinates in pixels; u to the right, v down.
struct Pixel {
    double u = 0.0;
    double v = 0.0;
};

struct ControlCommand {
    double v = 0.0;      // m/s
    double omega = 0.0;  // rad/s

    bool operator==(const ControlCommand&) const = default;
};

/// Forward-Euler unicycle step. Both the simulator and the MPC prediction
/// model go through this function so their discretizations cannot drift.
inline Pose2D unicycle_step(const Pose2D& p, double v, double omega, double dt) {
    return Pose2D{p.x + v * std::cos(p.theta) * dt,
                  p.y + v * std::sin(p.theta) * dt,
                  normalize_angle(p.theta + omega * dt)};
}

/// splitmix64 finalizer; used to derive independent per-frame seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace rowsim
