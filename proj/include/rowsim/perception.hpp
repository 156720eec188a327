#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "rowsim/geometry.hpp"
#include "rowsim/synth_camera.hpp"

namespace rowsim {

struct ConfidenceConfig {
    double peak_min = 0.3;             // absolute peak threshold
    double uniqueness_min = 1.5;       // peak / best value outside the exclusion disc
    double exclusion_radius_px = 20.0; // image pixels
    // Parabolic sub-cell refinement of the argmax. Off: keypoints are plain argmax cells.
    bool subpixel = false;

    void validate() const;
};

struct KeypointDecode {
    Pixel px;
    float peak = 0.0F;
    float second = 0.0F;  // best score outside the exclusion disc
    bool peak_ok = false;
    bool unique_ok = false;

    bool passed() const { return peak_ok && unique_ok; }
};

struct KeypointSet {
    std::array<KeypointDecode, 3> k{};

    const KeypointDecode& vp() const { return k[kVanishing]; }
    const KeypointDecode& left() const { return k[kLeft]; }
    const KeypointDecode& right() const { return k[kRight]; }
};

/// Argmax per channel (ties go to the smallest row, then column) plus the
/// peak-threshold and uniqueness-ratio confidence check.
KeypointSet extract_keypoints(const HeatmapTriple& h, const ConfidenceConfig& cfg);

/// Undoes a camera roll: rotates the pixel by -roll about the principal
/// point in normalized image coordinates.
Pixel roll_correct(Pixel px, const CameraIntrinsics& intr, double roll);

/// Heading of the robot relative to the rows from the vanishing point.
/// Empty when the back-projected ray does not point along the row direction
/// the camera faces.
std::optional<double> heading_from_vp(Pixel vp, const CameraIntrinsics& intr,
                                      const CameraMount& mount, double roll);

enum class EstimateStage { Ok, Confidence, Heading, Lateral, RowWidth, NoValidInput };
std::string_view to_string(EstimateStage s);

struct LateralResult {
    double lateral = 0.0;
    double row_width = 0.0;
    EstimateStage status = EstimateStage::Ok;

    bool ok() const { return status == EstimateStage::Ok; }
};

/// Back-projects both intercepts to the ground and measures each row line's
/// signed offset perpendicular to the rows. Fails on rays at or above the
/// horizon and when the implied row width leaves
/// [width_min_factor, width_max_factor] x nominal_row_spacing.
LateralResult lateral_from_intercepts(Pixel left, Pixel right, double heading,
                                      const CameraIntrinsics& intr, const CameraMount& mount,
                                      double roll, double nominal_row_spacing,
                                      double width_min_factor = 0.5,
                                      double width_max_factor = 1.5);

struct NavEstimate {
    double heading = 0.0;    // rad
    double lateral = 0.0;    // m, positive left of the centerline
    double row_width = 0.0;  // m
    bool valid = false;
    EstimateStage stage = EstimateStage::NoValidInput;  // failing stage when invalid
    int camera = -1;                                    // -1 for fused estimates

    static NavEstimate make_valid(double heading, double lateral, double row_width,
                                  int camera = -1) {
        return NavEstimate{heading, lateral, row_width, true, EstimateStage::Ok, camera};
    }
    static NavEstimate make_invalid(EstimateStage why, int camera = -1) {
        NavEstimate e;
        e.stage = why;
        e.camera = camera;
        return e;
    }
};

struct EstimatorConfig {
    ConfidenceConfig confidence;
    bool roll_correction = true;
    double cx_error_px = 0.0;  // calibration error injected into the estimator only
    double nominal_row_spacing = 0.75;
    double width_min_factor = 0.5;
    double width_max_factor = 1.5;
};

/// extract -> roll correction -> heading -> lateral. Never throws; an
/// invalid estimate records the failing stage. `decoded` receives the
/// keypoints when non-null.
NavEstimate estimate(const HeatmapTriple& h, const Camera& cam, double roll,
                     const EstimatorConfig& cfg, int camera_id = -1,
                     KeypointSet* decoded = nullptr);

/// Simple average over the valid estimates.
NavEstimate fuse(std::span<const NavEstimate> estimates);

}  // namespace rowsim
