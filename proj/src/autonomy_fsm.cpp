#include "rowsim/autonomy_fsm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace rowsim {

std::string_view to_string(ModeKind m) {
    switch (m) {
        case ModeKind::RowFollow: return "RowFollow";
        case ModeKind::CrashRecovery: return "CrashRecovery";
        case ModeKind::Intervention: return "Intervention";
    }
    return "?";
}

void CrashDetectorConfig::validate() const {
    if (!(window > 0.0)) throw std::invalid_argument("crash_detector.window must be > 0");
    if (!(speed_ratio_min > 0.0 && speed_ratio_min < 1.0)) {
        throw std::invalid_argument("crash_detector.speed_ratio_min must be in (0,1)");
    }
    if (!(min_commanded >= 0.0)) {
        throw std::invalid_argument("crash_detector.min_commanded must be >= 0");
    }
}

bool detect_crash(std::span<const OdometrySample> history, const CrashDetectorConfig& cfg) {
    if (history.empty()) return false;
    const double t_end = history.back().t;
    const double t_start = t_end - cfg.window;
    // A sample at or before the window start proves the window is fully covered.
    if (history.front().t > t_start + 1e-9) return false;

    double commanded = 0.0;
    double achieved = 0.0;
    int n = 0;
    for (const auto& s : history) {
        if (s.t <= t_start + 1e-9) continue;
        commanded += std::abs(s.commanded_v);
        achieved += std::abs(s.achieved_v);
        ++n;
    }
    if (n == 0) return false;
    commanded /= n;
    achieved /= n;
    return commanded >= cfg.min_commanded && achieved / commanded < cfg.speed_ratio_min;
}

void RecoveryConfig::validate() const {
    if (!(min_reverse_dist >= 0.0 && min_reverse_dist <= max_reverse_dist)) {
        throw std::invalid_argument("recovery: need 0 <= min_reverse_dist <= max_reverse_dist");
    }
    if (!(resume_heading_max > 0.0)) {
        throw std::invalid_argument("recovery.resume_heading_max must be > 0");
    }
    if (max_attempts_per_spot < 1) {
        throw std::invalid_argument("recovery.max_attempts_per_spot must be >= 1");
    }
    if (!(spot_radius >= 0.0 && invalid_dwell >= 0.0)) {
        throw std::invalid_argument("recovery: spot_radius and invalid_dwell must be >= 0");
    }
}

void MonitorConfig::validate() const {
    if (!(contact_limit > 0.0 && heading_limit > 0.0 && heading_sustain >= 0.0)) {
        throw std::invalid_argument("monitor limits must be positive");
    }
}

AutonomyFsm::AutonomyFsm(RecoveryConfig cfg) : cfg_(cfg) { cfg_.validate(); }

FsmOutput AutonomyFsm::intervene(std::string reason) {
    mode_ = Mode{ModeKind::Intervention, std::move(reason)};
    return FsmOutput{mode_, CommandSource::None, true};
}

FsmOutput AutonomyFsm::enter_recovery(const FsmInput& in) {
    attempt_spots_.push_back(in.odometer);
    const auto here = std::count_if(attempt_spots_.begin(), attempt_spots_.end(), [&](double s) {
        return std::abs(s - in.odometer) <= cfg_.spot_radius;
    });
    if (here >= cfg_.max_attempts_per_spot) {
        return intervene("repeated crash");
    }
    mode_ = Mode{ModeKind::CrashRecovery, {}};
    entry_odometer_ = in.odometer;
    invalid_since_.reset();
    // One control period of (0,0) before reversing.
    return FsmOutput{mode_, CommandSource::Stop, true};
}

FsmOutput AutonomyFsm::update(const FsmInput& in) {
    switch (mode_.kind) {
        case ModeKind::Intervention:
            return FsmOutput{mode_, CommandSource::None, false};

        case ModeKind::RowFollow: {
            if (in.crash) {
                return enter_recovery(in);
            }
            if (in.front.valid) {
                invalid_since_.reset();
            } else if (cfg_.invalid_dwell_enabled) {
                if (!invalid_since_) invalid_since_ = in.t;
                if (in.t - *invalid_since_ > cfg_.invalid_dwell + 1e-9) {
                    return enter_recovery(in);
                }
            }
            return FsmOutput{mode_, CommandSource::FrontFused, false};
        }

        case ModeKind::CrashRecovery: {
            if (in.crash) {
                return intervene("stuck in recovery");
            }
            const double reversed = entry_odometer_ - in.odometer;
            const bool front_ready =
                in.front.valid && std::abs(in.front.heading) <= cfg_.resume_heading_max;
            if (reversed >= cfg_.min_reverse_dist && front_ready) {
                mode_ = Mode{ModeKind::RowFollow, {}};
                invalid_since_.reset();
                return FsmOutput{mode_, CommandSource::FrontFused, true};
            }
            if (reversed >= cfg_.max_reverse_dist) {
                return intervene("recovery exhausted");
            }
            return FsmOutput{mode_, CommandSource::Rear, false};
        }
    }
    return FsmOutput{mode_, CommandSource::None, false};
}

std::optional<InterventionEvent> InterventionMonitor::update(const World& world,
                                                             const Pose2D& pose,
                                                             const ContactReport& contact,
                                                             const Mode& mode, double t,
                                                             double dt) {
    if (mode.kind == ModeKind::Intervention) {
        return InterventionEvent{mode.reason, t, pose};
    }
    const auto truth = ground_truth_nav(world, pose);
    if (!truth) {
        return InterventionEvent{"left field", t, pose};
    }
    if (std::abs(pose.y - world.lane_center(lane_)) > world.field().row_spacing / 2.0) {
        return InterventionEvent{"departed lane", t, pose};
    }
    contact_time_ = contact.in_contact() ? contact_time_ + dt : 0.0;
    if (contact_time_ > cfg_.contact_limit) {
        return InterventionEvent{"stuck in contact", t, pose};
    }
    heading_time_ = std::abs(truth->heading) > cfg_.heading_limit ? heading_time_ + dt : 0.0;
    if (heading_time_ > cfg_.heading_sustain) {
        return InterventionEvent{"heading runaway", t, pose};
    }
    return std::nullopt;
}

}  // namespace rowsim
