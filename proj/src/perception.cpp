#include "rowsim/perception.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rowsim {
namespace {

struct LevelRay {
    double fwd;
    double left;
    double up;
};

/// Pixel ray with roll removed, expressed in the yaw-aligned, level camera frame.
LevelRay level_ray(Pixel px, const CameraIntrinsics& intr, const CameraMount& mount,
                   double roll) {
    const Pixel p = roll_correct(px, intr, roll);
    const double x = (p.u - intr.cx) / intr.fx;
    const double y = (p.v - intr.cy) / intr.fy;
    const double cp = std::cos(mount.pitch);
    const double sp = std::sin(mount.pitch);
    return LevelRay{cp - sp * y, -x, -sp - cp * y};
}

double mount_yaw(const CameraMount& mount) {
    return mount.yaw_offset + (mount.facing == Facing::Rear ? kPi : 0.0);
}

double refine(float left, float center, float right) {
    const double denom = static_cast<double>(left) - 2.0 * center + right;
    if (denom >= 0.0) return 0.0;
    const double offset = 0.5 * (static_cast<double>(left) - right) / denom;
    return std::clamp(offset, -0.5, 0.5);
}

KeypointDecode decode_channel(const HeatmapTriple& h, int ch, const ConfidenceConfig& cfg) {
    KeypointDecode out;
    const auto& grid = h.channels[static_cast<std::size_t>(ch)];
    if (grid.empty()) return out;

    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] > grid[best]) best = i;
    }
    const int row = static_cast<int>(best / static_cast<std::size_t>(h.width));
    const int col = static_cast<int>(best % static_cast<std::size_t>(h.width));
    out.peak = grid[best];
    out.px = h.cell_center(row, col);

    if (cfg.subpixel) {
        if (col > 0 && col + 1 < h.width) {
            out.px.u += h.stride * refine(h.at(ch, row, col - 1), out.peak, h.at(ch, row, col + 1));
        }
        if (row > 0 && row + 1 < h.height) {
            out.px.v += h.stride * refine(h.at(ch, row - 1, col), out.peak, h.at(ch, row + 1, col));
        }
    }

    const double r_cells = cfg.exclusion_radius_px / h.stride;
    const double r2 = r_cells * r_cells;
    float second = 0.0F;
    for (int r = 0; r < h.height; ++r) {
        const double dr = r - row;
        const float* line = grid.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(h.width);
        if (dr * dr > r2) {
            for (int c = 0; c < h.width; ++c) second = std::max(second, line[c]);
            continue;
        }
        for (int c = 0; c < h.width; ++c) {
            const double dc = c - col;
            if (dr * dr + dc * dc > r2) second = std::max(second, line[c]);
        }
    }
    out.second = second;
    out.peak_ok = out.peak >= cfg.peak_min;
    out.unique_ok = second > 0.0F ? out.peak / second >= cfg.uniqueness_min : out.peak > 0.0F;
    return out;
}

}  // namespace

void ConfidenceConfig::validate() const {
    if (!(peak_min > 0.0)) throw std::invalid_argument("confidence.peak_min must be > 0");
    if (!(uniqueness_min > 1.0)) throw std::invalid_argument("confidence.uniqueness_min must be > 1");
    if (!(exclusion_radius_px >= 0.0)) {
        throw std::invalid_argument("confidence.exclusion_radius_px must be >= 0");
    }
}

std::string_view to_string(EstimateStage s) {
    switch (s) {
        case EstimateStage::Ok: return "ok";
        case EstimateStage::Confidence: return "confidence";
        case EstimateStage::Heading: return "heading";
        case EstimateStage::Lateral: return "lateral";
        case EstimateStage::RowWidth: return "row_width";
        case EstimateStage::NoValidInput: return "no_valid_input";
    }
    return "?";
}

KeypointSet extract_keypoints(const HeatmapTriple& h, const ConfidenceConfig& cfg) {
    KeypointSet set;
    for (int ch = 0; ch < 3; ++ch) {
        set.k[static_cast<std::size_t>(ch)] = decode_channel(h, ch, cfg);
    }
    return set;
}

Pixel roll_correct(Pixel px, const CameraIntrinsics& intr, double roll) {
    if (roll == 0.0) return px;
    const double x = (px.u - intr.cx) / intr.fx;
    const double y = (px.v - intr.cy) / intr.fy;
    const double c = std::cos(roll);
    const double s = std::sin(roll);
    return Pixel{intr.cx + intr.fx * (c * x + s * y), intr.cy + intr.fy * (-s * x + c * y)};
}

std::optional<double> heading_from_vp(Pixel vp, const CameraIntrinsics& intr,
                                      const CameraMount& mount, double roll) {
    const LevelRay ray = level_ray(vp, intr, mount, roll);
    const double yaw = mount_yaw(mount);
    double fwd = std::cos(yaw) * ray.fwd - std::sin(yaw) * ray.left;
    double left = std::sin(yaw) * ray.fwd + std::cos(yaw) * ray.left;
    if (mount.facing == Facing::Rear) {
        fwd = -fwd;
        left = -left;
    }
    if (!(fwd > 0.0)) {
        return std::nullopt;
    }
    // The row direction appears at -heading in the robot frame.
    return std::atan2(-left, fwd);
}

LateralResult lateral_from_intercepts(Pixel left, Pixel right, double heading,
                                      const CameraIntrinsics& intr, const CameraMount& mount,
                                      double roll, double nominal_row_spacing,
                                      double width_min_factor, double width_max_factor) {
    const double yaw = mount_yaw(mount);
    const double cy = std::cos(yaw);
    const double sy = std::sin(yaw);
    const double ch = std::cos(heading);
    const double sh = std::sin(heading);

    double offsets[2];
    const Pixel pts[2] = {left, right};
    for (int i = 0; i < 2; ++i) {
        const LevelRay ray = level_ray(pts[i], intr, mount, roll);
        if (!(ray.up < 0.0)) {
            return LateralResult{0.0, 0.0, EstimateStage::Lateral};
        }
        const double t = mount.height / -ray.up;
        const double gx = mount.forward + t * (cy * ray.fwd - sy * ray.left);
        const double gy = mount.lateral + t * (sy * ray.fwd + cy * ray.left);
        // Offset of the row line from the robot, measured across the rows.
        offsets[i] = sh * gx + ch * gy;
    }

    LateralResult out;
    out.lateral = -(offsets[0] + offsets[1]) / 2.0;
    out.row_width = std::abs(offsets[0] - offsets[1]);
    if (out.row_width < width_min_factor * nominal_row_spacing ||
        out.row_width > width_max_factor * nominal_row_spacing) {
        out.status = EstimateStage::RowWidth;
    }
    return out;
}

NavEstimate estimate(const HeatmapTriple& h, const Camera& cam, double roll,
                     const EstimatorConfig& cfg, int camera_id, KeypointSet* decoded) {
    CameraIntrinsics intr = cam.intrinsics;
    intr.cx += cfg.cx_error_px;
    const double used_roll = cfg.roll_correction ? roll : 0.0;

    const KeypointSet kps = extract_keypoints(h, cfg.confidence);
    if (decoded != nullptr) *decoded = kps;

    if (!kps.vp().passed()) {
        return NavEstimate::make_invalid(EstimateStage::Confidence, camera_id);
    }
    const auto heading = heading_from_vp(kps.vp().px, intr, cam.mount, used_roll);
    if (!heading) {
        return NavEstimate::make_invalid(EstimateStage::Heading, camera_id);
    }
    if (!kps.left().passed() || !kps.right().passed()) {
        return NavEstimate::make_invalid(EstimateStage::Confidence, camera_id);
    }
    const LateralResult lat =
        lateral_from_intercepts(kps.left().px, kps.right().px, *heading, intr, cam.mount,
                                used_roll, cfg.nominal_row_spacing, cfg.width_min_factor,
                                cfg.width_max_factor);
    if (!lat.ok()) {
        return NavEstimate::make_invalid(lat.status, camera_id);
    }
    return NavEstimate::make_valid(*heading, lat.lateral, lat.row_width, camera_id);
}

NavEstimate fuse(std::span<const NavEstimate> estimates) {
    double heading = 0.0;
    double lateral = 0.0;
    double width = 0.0;
    int n = 0;
    for (const auto& e : estimates) {
        if (!e.valid) continue;
        heading += e.heading;
        lateral += e.lateral;
        width += e.row_width;
        ++n;
    }
    if (n == 0) {
        return NavEstimate::make_invalid(EstimateStage::NoValidInput);
    }
    if (n == 1) {
        for (const auto& e : estimates) {
            if (e.valid) return e;
        }
    }
    return NavEstimate::make_valid(heading / n, lateral / n, width / n);
}

}  // namespace rowsim
