#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rowsim/field_world.hpp"
#include "rowsim/perception.hpp"

namespace rowsim {

enum class ModeKind { RowFollow, CrashRecovery, Intervention };
std::string_view to_string(ModeKind m);

struct Mode {
    ModeKind kind = ModeKind::RowFollow;
    std::string reason;  // set for Intervention
};

struct CrashDetectorConfig {
    double window = 1.0;           // s
    double speed_ratio_min = 0.2;  // achieved / commanded below this is a crash
    double min_commanded = 0.1;    // m/s

    void validate() const;
};

/// Commanded-vs-achieved speed test over the last `window` seconds of
/// odometry. Returns false until the history reaches back a full window.
bool detect_crash(std::span<const OdometrySample> history, const CrashDetectorConfig& cfg);

struct RecoveryConfig {
    double min_reverse_dist = 1.0;
    double max_reverse_dist = 5.0;
    double resume_heading_max = 0.15;
    int max_attempts_per_spot = 3;
    double spot_radius = 2.0;
    // Invalid front perception for longer than this also starts a recovery.
    bool invalid_dwell_enabled = true;
    double invalid_dwell = 1.0;

    void validate() const;
};

enum class CommandSource { FrontFused, Stop, Rear, None };

struct FsmInput {
    double t = 0.0;
    bool crash = false;
    NavEstimate front;  // fused front cameras
    NavEstimate rear;
    double odometer = 0.0;  // signed along-track distance integrated from odometry
};

struct FsmOutput {
    Mode mode;
    CommandSource source = CommandSource::FrontFused;
    bool transitioned = false;
};

class AutonomyFsm {
public:
    explicit AutonomyFsm(RecoveryConfig cfg);

    FsmOutput update(const FsmInput& in);

    const Mode& mode() const { return mode_; }
    /// Odometer reading where the current (or last) recovery started.
    double recovery_entry() const { return entry_odometer_; }
    int recoveries() const { return static_cast<int>(attempt_spots_.size()); }

private:
    FsmOutput enter_recovery(const FsmInput& in);
    FsmOutput intervene(std::string reason);

    RecoveryConfig cfg_;
    Mode mode_;
    std::optional<double> invalid_since_;
    double entry_odometer_ = 0.0;
    std::vector<double> attempt_spots_;
};

struct MonitorConfig {
    double contact_limit = 10.0;     // s of continuous contact
    double heading_limit = kPi / 3;  // rad
    double heading_sustain = 2.0;    // s

    void validate() const;
};

struct InterventionEvent {
    std::string reason;
    double t = 0.0;
    Pose2D pose;
};

/// Truth-side watchdog. Never feeds perception.
class InterventionMonitor {
public:
    InterventionMonitor(MonitorConfig cfg, int lane) : cfg_(cfg), lane_(lane) {}

    std::optional<InterventionEvent> update(const World& world, const Pose2D& pose,
                                            const ContactReport& contact, const Mode& mode,
                                            double t, double dt);

private:
    MonitorConfig cfg_;
    int lane_;
    double contact_time_ = 0.0;
    double heading_time_ = 0.0;
};

}  // namespace rowsim
