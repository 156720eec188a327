#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rowsim/geometry.hpp"

namespace rowsim {

enum class AnomalyKind { CornGap, Occlusion, Weeds, Bump, PlantingError, MudSlip, BadStart };
enum class Side { Left, Right, Both, None };

std::string_view to_string(AnomalyKind k);
std::string_view to_string(Side s);
/// Throws std::invalid_argument on an unknown name.
AnomalyKind anomaly_kind_from_string(std::string_view s);
Side side_from_string(std::string_view s);

struct FieldSpec {
    double row_spacing = 0.75;  // m
    double row_length = 200.0;  // m
    int n_lanes = 3;
    double plant_spacing = 0.15;     // m along a row
    double plant_jitter_std = 0.02;  // m, along-row only
    double plant_radius = 0.025;     // m
    double terrain_roll_amplitude = 0.05;   // rad
    double terrain_roll_wavelength = 40.0;  // m
    double headland = 10.0;  // m of open ground past each row end

    void validate() const;
};

struct RobotSpec {
    double width = 0.45;
    double length = 0.60;
    double v_row_follow = 0.9;
    double v_recovery = 0.4;
    double v_max = 1.2;
    double omega_max = 1.0;
    // Anomaly response knobs; not platform measurements.
    double bump_dtheta_max = 0.25;       // rad heading impulse at magnitude 1
    double bump_roll_spike = 0.10;       // rad extra roll while on a bump
    double bump_spike_length = 0.5;      // m of travel the roll spike lasts
    double contact_residual = 0.05;      // fraction of speed kept while pushing a plant
    double bad_start_lateral_max = 0.15; // m initial offset at magnitude 1
    double bad_start_heading_max = 0.60; // rad initial heading at magnitude 1

    void validate(const FieldSpec& field) const;
};

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::CornGap;
    int lane = 0;
    Side side = Side::None;
    double start_s = 0.0;   // m along the row
    double extent_s = 0.0;  // m
    double magnitude = 1.0;
    // PlantingError only: lateral position of the stray plants relative to
    // the lane centerline (0 = dead center).
    double lateral_offset = 0.0;

    void validate(const FieldSpec& field) const;
    bool covers(double x) const { return x >= start_s && x <= start_s + extent_s; }
};

struct Plant {
    double x = 0.0;
    double y = 0.0;
    double residual = 0.05;  // speed fraction kept while pushing against it
    bool planting_error = false;
};

/// Immutable after construction; safe to share across threads.
class World {
public:
    const FieldSpec& field() const { return field_; }
    const RobotSpec& robot() const { return robot_; }
    const std::vector<AnomalySpec>& anomalies() const { return anomalies_; }
    std::uint64_t seed() const { return seed_; }

    int first_lane() const;
    int last_lane() const;
    double lane_center(int lane) const { return lane * field_.row_spacing; }
    /// Lane whose centerline is nearest to y.
    int lane_of(double y) const;
    /// Row lines are indexed so that lane k is bounded by rows k (right) and k+1 (left).
    double row_y(int row) const { return (row - 0.5) * field_.row_spacing; }
    int first_row() const { return first_lane(); }
    int last_row() const { return last_lane() + 1; }

    /// Plants of one row line, sorted by x.
    std::span<const Plant> row_plants(int row) const;
    /// Stray in-lane plants from PlantingError anomalies, sorted by x.
    std::span<const Plant> stray_plants() const { return stray_; }
    /// +1 or -1 heading impulse direction for a Bump anomaly (by index).
    int bump_sign(std::size_t anomaly_index) const { return bump_signs_.at(anomaly_index); }

    friend World build_world(const FieldSpec&, const RobotSpec&, std::vector<AnomalySpec>,
                             std::uint64_t);

private:
    FieldSpec field_;
    RobotSpec robot_;
    std::vector<AnomalySpec> anomalies_;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<Plant>> rows_;
    std::vector<Plant> stray_;
    std::vector<int> bump_signs_;
};

/// Deterministic in (field, robot, anomalies, seed). Throws
/// std::invalid_argument on invalid specs or contradicting anomalies.
World build_world(const FieldSpec& field, const RobotSpec& robot,
                  std::vector<AnomalySpec> anomalies, std::uint64_t seed);

struct RobotState {
    Pose2D pose;
    double t = 0.0;
};

struct OdometrySample {
    double t = 0.0;
    double achieved_v = 0.0;
    double achieved_omega = 0.0;
    double commanded_v = 0.0;
    double commanded_omega = 0.0;
    bool clamped = false;
};

struct Contact {
    Plant plant;
    double forward = 0.0;  // plant center in the robot frame
    double lateral = 0.0;
};

struct ContactReport {
    std::vector<Contact> contacts;
    bool in_contact() const { return !contacts.empty(); }
    bool planting_error() const;
};

/// Robot footprint (width x length rectangle at pose) against every plant disc.
ContactReport collision_check(const World& world, const Pose2D& pose);

struct StepResult {
    RobotState state;
    OdometrySample odometry;
    ContactReport contact;  // evaluated at the pre-step pose
};

/// One Euler step. Commands outside the robot limits are clamped and the
/// sample is flagged. Slip, contact attenuation and bump impulses apply here.
StepResult step_robot(const World& world, const RobotState& state, const ControlCommand& cmd,
                      double dt);

struct NavTruth {
    double heading = 0.0;
    double lateral = 0.0;  // relative to the centerline of `lane`
    int lane = 0;
};

/// Exact heading and lateral offset relative to the nearest lane. Empty when
/// the pose has left the field (episode end).
std::optional<NavTruth> ground_truth_nav(const World& world, const Pose2D& pose);

/// Terrain roll plus any transient bump spike under the robot.
double roll_at(const World& world, const Pose2D& pose);

/// Slip fraction in [0,1] at the pose from MudSlip anomalies.
double slip_at(const World& world, const Pose2D& pose);

}  // namespace rowsim
