#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rowsim/field_world.hpp"
#include "rowsim/geometry.hpp"

namespace rowsim {

struct CameraIntrinsics {
    double fx = 600.0;
    double fy = 600.0;
    double cx = 320.0;
    double cy = 240.0;
    int width = 640;
    int height = 480;

    void validate() const;
};

enum class Facing { Forward, Rear };

struct CameraMount {
    double forward = 0.30;  // m ahead of the robot reference point
    double lateral = 0.0;   // m, positive left
    double height = 0.60;   // m above ground
    double pitch = -0.20;   // rad, downward positive
    double yaw_offset = 0.0;
    Facing facing = Facing::Forward;

    void validate() const;
};

struct Camera {
    std::string name;
    CameraIntrinsics intrinsics;
    CameraMount mount;
};

/// Three forward cameras (left, center, right at 0.15 m spacing) and one rear camera.
std::vector<Camera> default_cameras();

/// Point in the camera frame: X right, Y down, Z along the optical axis.
struct CameraPoint {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

/// World ground point (z = 0) or direction into the camera frame, including
/// the roll rotation about the optical axis.
CameraPoint to_camera_frame(const CameraMount& mount, const Pose2D& robot_pose, double roll,
                            double wx, double wy, double wz, bool is_direction = false);

/// Pinhole projection of a ground point. Empty means the point is behind the camera.
std::optional<Pixel> project_point(const CameraIntrinsics& intr, const CameraMount& mount,
                                   const Pose2D& robot_pose, double roll, Vec2 ground_pt);

/// Pixel where the image of the ground line y = row_y crosses the bottom
/// border (v = height - 1). Coordinates are not clipped to the image; empty
/// when the line does not reach the bottom border below the horizon.
std::optional<Pixel> row_intercept(const CameraIntrinsics& intr, const CameraMount& mount,
                                   const Pose2D& robot_pose, double roll, double row_y);

enum Channel : int { kVanishing = 0, kLeft = 1, kRight = 2 };

struct TrueKeypoints {
    std::array<Pixel, 3> px{};
    std::array<bool, 3> visible{};
    // Row line (field y) behind each intercept channel. Rear cameras see the
    // field's right row on the image left.
    double left_row_y = 0.0;
    double right_row_y = 0.0;

    const Pixel& vp() const { return px[kVanishing]; }
    const Pixel& left() const { return px[kLeft]; }
    const Pixel& right() const { return px[kRight]; }
};

TrueKeypoints true_keypoints(const World& world, const Pose2D& robot_pose, double roll,
                             const Camera& cam);

struct NoiseModel {
    double kp_sigma_px = 6.0;
    double kp_jitter_std_px = 0.0;
    double background_noise_std = 0.0;
    double distractor_rate = 0.0;
    // Heatmap cell size in image pixels; 1 renders at image resolution.
    int heatmap_stride = 4;

    void validate() const;
};

/// Anomaly-driven corruption of one camera frame.
struct FrameCorruption {
    // Per intercept channel (kLeft, kRight; index 0 unused).
    std::array<double, 3> gap_magnitude{};
    std::array<std::optional<Pixel>, 3> gap_competitor{};
    double occlusion = 0.0;
    double weeds = 0.0;

    bool gap_active(int channel) const { return gap_magnitude[channel] > 0.0; }
};

/// Which anomalies the camera currently sees. CornGap and Weeds are active
/// when their extent overlaps the ground stretch ahead of the intercept
/// point (lookahead metres); Occlusion when the camera itself sits inside
/// the extent.
FrameCorruption corruption_at(const World& world, const Pose2D& robot_pose, double roll,
                              const Camera& cam, double lookahead = 3.0);

struct HeatmapTriple {
    int width = 0;   // cells
    int height = 0;  // cells
    int stride = 1;  // image pixels per cell
    std::array<std::vector<float>, 3> channels;

    float at(int channel, int row, int col) const {
        return channels[static_cast<std::size_t>(channel)]
                       [static_cast<std::size_t>(row) * static_cast<std::size_t>(width) +
                        static_cast<std::size_t>(col)];
    }
    /// Image pixel at the center of a cell.
    Pixel cell_center(int row, int col) const {
        const double half = (stride - 1) / 2.0;
        return Pixel{col * stride + half, row * stride + half};
    }
};

/// Zero-filled heatmaps sized for the image at the given stride.
HeatmapTriple make_heatmaps(const CameraIntrinsics& intr, int stride);

/// Adds a Gaussian blob (sigma in image pixels) centered at an image pixel.
void add_blob(HeatmapTriple& h, int channel, Pixel center, double amplitude, double sigma_px);

HeatmapTriple render_heatmaps(const TrueKeypoints& truth, const NoiseModel& noise,
                              const FrameCorruption& corruption, const CameraIntrinsics& intr,
                              std::uint64_t seed);

/// Frame dump: 16-byte little-endian header (magic "RSHM", width, height,
/// channels as uint32) followed by channel-major, row-major float32 grids.
void write_heatmap_file(const std::filesystem::path& path, const HeatmapTriple& h);
HeatmapTriple read_heatmap_file(const std::filesystem::path& path);

}  // namespace rowsim
