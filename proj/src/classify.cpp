#include "rowsim/classify.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace rowsim {

std::string_view label(FailureMode m) {
    switch (m) {
        case FailureMode::VisionKeypointError: return "Vision Keypoint Error";
        case FailureMode::PhysicalRobotFailure: return "Physical Robot Failure";
        case FailureMode::CornGap: return "Corn gap";
        case FailureMode::BadStart: return "Bad start";
        case FailureMode::WeedsAndOcclusion: return "Weeds and Occlusion";
        case FailureMode::Bumps: return "Bumps";
        case FailureMode::PlantingError: return "Planting error";
    }
    return "?";
}

double view_reach(const std::vector<Camera>& cameras, double lookahead) {
    double reach = 0.0;
    for (const auto& cam : cameras) {
        if (cam.mount.facing != Facing::Forward) continue;
        // Ground distance of the image bottom row along the optical axis.
        const double v = cam.intrinsics.height - 1 - cam.intrinsics.cy;
        const double depression = cam.mount.pitch + std::atan2(v, cam.intrinsics.fy);
        if (depression <= 0.0) continue;
        const double ground = cam.mount.height / std::tan(depression);
        reach = std::max(reach, cam.mount.forward + ground + lookahead);
    }
    return reach;
}

namespace {

double interval_distance(double x, double lo, double hi) {
    if (x < lo) return lo - x;
    if (x > hi) return x - hi;
    return 0.0;
}

int rank(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::PlantingError: return 0;
        case AnomalyKind::CornGap: return 1;
        case AnomalyKind::Weeds:
        case AnomalyKind::Occlusion: return 2;
        case AnomalyKind::Bump: return 3;
        case AnomalyKind::MudSlip: return 4;
        case AnomalyKind::BadStart: return 5;
    }
    return 6;
}

FailureMode mode_of(AnomalyKind k) {
    switch (k) {
        case AnomalyKind::PlantingError: return FailureMode::PlantingError;
        case AnomalyKind::CornGap: return FailureMode::CornGap;
        case AnomalyKind::Weeds:
        case AnomalyKind::Occlusion: return FailureMode::WeedsAndOcclusion;
        case AnomalyKind::Bump: return FailureMode::Bumps;
        case AnomalyKind::MudSlip: return FailureMode::PhysicalRobotFailure;
        case AnomalyKind::BadStart: return FailureMode::BadStart;
    }
    return FailureMode::VisionKeypointError;
}

bool perceptual(AnomalyKind k) {
    return k == AnomalyKind::CornGap || k == AnomalyKind::Weeds || k == AnomalyKind::Occlusion;
}

}  // namespace

Classification classify_intervention(double x_stop, double x_incident, const World& world,
                                     const ClassifierConfig& cfg) {
    Classification out;
    int best = 6;
    const auto& anomalies = world.anomalies();
    for (std::size_t i = 0; i < anomalies.size(); ++i) {
        const auto& a = anomalies[i];
        if (a.lane != cfg.lane) continue;
        bool hit = false;
        if (a.kind == AnomalyKind::BadStart) {
            hit = std::min(x_stop, x_incident) <= cfg.bad_start_window;
        } else {
            const double lo = a.start_s - (perceptual(a.kind) ? cfg.view_reach : 0.0);
            const double hi = a.start_s + a.extent_s;
            hit = interval_distance(x_stop, lo, hi) <= cfg.radius ||
                  interval_distance(x_incident, lo, hi) <= cfg.radius;
        }
        if (!hit) continue;
        out.implicated.push_back(i);
        if (rank(a.kind) < best) {
            best = rank(a.kind);
            out.mode = mode_of(a.kind);
        }
    }
    return out;
}

}  // namespace rowsim
