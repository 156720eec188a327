#include "rowsim/synth_camera.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace rowsim {
namespace {

constexpr char kHeatmapMagic[4] = {'R', 'S', 'H', 'M'};

double camera_yaw(const CameraMount& mount, double theta) {
    return theta + mount.yaw_offset + (mount.facing == Facing::Rear ? kPi : 0.0);
}

Vec2 camera_position(const CameraMount& mount, const Pose2D& pose) {
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    return Vec2{pose.x + mount.forward * c - mount.lateral * s,
                pose.y + mount.forward * s + mount.lateral * c};
}

/// Ground point hit by the ray through an image pixel, in field coordinates.
std::optional<Vec2> ground_hit(const CameraIntrinsics& intr, const CameraMount& mount,
                               const Pose2D& pose, double roll, Pixel px) {
    const double rx = (px.u - intr.cx) / intr.fx;
    const double ry = (px.v - intr.cy) / intr.fy;
    const double cr = std::cos(roll);
    const double sr = std::sin(roll);
    const double x = cr * rx + sr * ry;
    const double y = -sr * rx + cr * ry;
    const double z = 1.0;
    const double cp = std::cos(mount.pitch);
    const double sp = std::sin(mount.pitch);
    const double fwd = cp * z - sp * y;
    const double left = -x;
    const double up = -sp * z - cp * y;
    if (up >= 0.0) {
        return std::nullopt;
    }
    const double t = mount.height / -up;
    const double yaw = camera_yaw(mount, pose.theta);
    const Vec2 origin = camera_position(mount, pose);
    return Vec2{origin.x + t * (std::cos(yaw) * fwd - std::sin(yaw) * left),
                origin.y + t * (std::sin(yaw) * fwd + std::cos(yaw) * left)};
}

bool in_image(const CameraIntrinsics& intr, Pixel p) {
    return p.u >= 0.0 && p.u <= intr.width - 1.0 && p.v >= 0.0 && p.v <= intr.height - 1.0;
}

bool intervals_overlap(double a0, double a1, double b0, double b1) {
    return std::max(a0, b0) <= std::min(a1, b1);
}

const std::vector<float>& noise_pool() {
    static const std::vector<float> pool = [] {
        std::vector<float> v(std::size_t{1} << 17);
        std::mt19937_64 rng(0x5EEDF00DULL);
        std::normal_distribution<float> n(0.0F, 1.0F);
        for (auto& x : v) x = n(rng);
        return v;
    }();
    return pool;
}

}  // namespace

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw std::invalid_argument("camera: fx, fy must be > 0");
    if (width <= 0 || height <= 0) throw std::invalid_argument("camera: image size must be > 0");
    if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height)) {
        throw std::invalid_argument("camera: principal point must lie inside the image");
    }
}

void CameraMount::validate() const {
    if (!(height > 0.0)) throw std::invalid_argument("camera mount: height must be > 0");
    if (!(std::abs(pitch) < kPi / 2.0)) {
        throw std::invalid_argument("camera mount: |pitch| must be < pi/2");
    }
}

void NoiseModel::validate() const {
    if (kp_sigma_px <= 0.0 || kp_jitter_std_px < 0.0 || background_noise_std < 0.0 ||
        distractor_rate < 0.0) {
        throw std::invalid_argument("noise: parameters must be >= 0 (sigma > 0)");
    }
    if (heatmap_stride < 1) throw std::invalid_argument("noise: heatmap_stride must be >= 1");
}

std::vector<Camera> default_cameras() {
    std::vector<Camera> cams;
    for (auto [name, lateral] : {std::pair{"front_left", 0.15}, std::pair{"front_center", 0.0},
                                 std::pair{"front_right", -0.15}}) {
        Camera c;
        c.name = name;
        c.mount.lateral = lateral;
        cams.push_back(c);
    }
    Camera rear;
    rear.name = "rear";
    rear.mount.forward = -0.30;
    rear.mount.facing = Facing::Rear;
    cams.push_back(rear);
    return cams;
}

CameraPoint to_camera_frame(const CameraMount& mount, const Pose2D& pose, double roll, double wx,
                            double wy, double wz, bool is_direction) {
    double dx = wx;
    double dy = wy;
    double dz = wz;
    if (!is_direction) {
        const Vec2 origin = camera_position(mount, pose);
        dx -= origin.x;
        dy -= origin.y;
        dz -= mount.height;
    }
    const double yaw = camera_yaw(mount, pose.theta);
    const double fwd = std::cos(yaw) * dx + std::sin(yaw) * dy;
    const double left = -std::sin(yaw) * dx + std::cos(yaw) * dy;
    const double up = dz;
    const double cp = std::cos(mount.pitch);
    const double sp = std::sin(mount.pitch);
    const double x = -left;
    const double y = -sp * fwd - cp * up;
    const double z = cp * fwd - sp * up;
    const double cr = std::cos(roll);
    const double sr = std::sin(roll);
    return CameraPoint{cr * x - sr * y, sr * x + cr * y, z};
}

std::optional<Pixel> project_point(const CameraIntrinsics& intr, const CameraMount& mount,
                                   const Pose2D& pose, double roll, Vec2 ground_pt) {
    const CameraPoint p = to_camera_frame(mount, pose, roll, ground_pt.x, ground_pt.y, 0.0);
    if (p.z <= 0.0) {
        return std::nullopt;
    }
    return Pixel{intr.cx + intr.fx * p.x / p.z, intr.cy + intr.fy * p.y / p.z};
}

std::optional<Pixel> row_intercept(const CameraIntrinsics& intr, const CameraMount& mount,
                                   const Pose2D& pose, double roll, double row_y) {
    // The image of a ground line is the trace of the plane through the camera
    // center containing the line: n . ray(u, v) = 0 with n = P0 x D.
    const CameraPoint p0 = to_camera_frame(mount, pose, roll, pose.x, row_y, 0.0);
    const CameraPoint d = to_camera_frame(mount, pose, roll, 1.0, 0.0, 0.0, true);
    const double nx = p0.y * d.z - p0.z * d.y;
    const double ny = p0.z * d.x - p0.x * d.z;
    const double nz = p0.x * d.y - p0.y * d.x;
    const double scale = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (scale == 0.0 || std::abs(nx) < 1e-12 * scale) {
        return std::nullopt;
    }
    const double v = intr.height - 1.0;
    const double u = intr.cx - intr.fx * (ny * (v - intr.cy) / intr.fy + nz) / nx;
    const Pixel px{u, v};
    if (!ground_hit(intr, mount, pose, roll, px)) {
        return std::nullopt;
    }
    return px;
}

TrueKeypoints true_keypoints(const World& world, const Pose2D& pose, double roll,
                             const Camera& cam) {
    const auto& intr = cam.intrinsics;
    TrueKeypoints kp;

    const double dir = cam.mount.facing == Facing::Forward ? 1.0 : -1.0;
    const CameraPoint d = to_camera_frame(cam.mount, pose, roll, dir, 0.0, 0.0, true);
    if (d.z > 0.0) {
        kp.px[kVanishing] = Pixel{intr.cx + intr.fx * d.x / d.z, intr.cy + intr.fy * d.y / d.z};
        kp.visible[kVanishing] = in_image(intr, kp.px[kVanishing]);
    }

    const double center = world.lane_center(world.lane_of(pose.y));
    const double half = world.field().row_spacing / 2.0;
    const bool rear = cam.mount.facing == Facing::Rear;
    kp.left_row_y = rear ? center - half : center + half;
    kp.right_row_y = rear ? center + half : center - half;

    for (auto [channel, row_y] : {std::pair{kLeft, kp.left_row_y}, std::pair{kRight, kp.right_row_y}}) {
        if (auto px = row_intercept(intr, cam.mount, pose, roll, row_y)) {
            kp.px[channel] = *px;
            kp.visible[channel] = in_image(intr, *px);
        }
    }
    return kp;
}

FrameCorruption corruption_at(const World& world, const Pose2D& pose, double roll,
                              const Camera& cam, double lookahead) {
    FrameCorruption out;
    const auto& intr = cam.intrinsics;
    const int lane = world.lane_of(pose.y);
    const double center = world.lane_center(lane);
    const double spacing = world.field().row_spacing;
    const bool rear = cam.mount.facing == Facing::Rear;
    const double dir = rear ? -1.0 : 1.0;

    auto view_interval = [&](double x0) {
        const double x1 = x0 + dir * lookahead;
        return std::pair{std::min(x0, x1), std::max(x0, x1)};
    };

    for (const auto& a : world.anomalies()) {
        if (a.lane != lane) continue;
        const double s0 = a.start_s;
        const double s1 = a.start_s + a.extent_s;
        switch (a.kind) {
            case AnomalyKind::CornGap: {
                for (int world_side : {+1, -1}) {
                    if (world_side > 0 && a.side == Side::Right) continue;
                    if (world_side < 0 && a.side == Side::Left) continue;
                    const double row_y = center + world_side * spacing / 2.0;
                    const auto px = row_intercept(intr, cam.mount, pose, roll, row_y);
                    if (!px) continue;
                    const auto hit = ground_hit(intr, cam.mount, pose, roll, *px);
                    if (!hit) continue;
                    const auto [v0, v1] = view_interval(hit->x);
                    if (!intervals_overlap(v0, v1, s0, s1)) continue;
                    const bool image_left = (world_side > 0) != rear;
                    const int channel = image_left ? kLeft : kRight;
                    if (a.magnitude > out.gap_magnitude[channel]) {
                        out.gap_magnitude[channel] = a.magnitude;
                        const double neighbor_y = row_y + world_side * spacing;
                        auto npx = row_intercept(intr, cam.mount, pose, roll, neighbor_y);
                        if (npx && in_image(intr, *npx)) {
                            out.gap_competitor[channel] = npx;
                        } else {
                            out.gap_competitor[channel].reset();
                        }
                    }
                }
                break;
            }
            case AnomalyKind::Occlusion: {
                const bool side_ok = a.side == Side::Both || a.side == Side::None ||
                                     (a.side == Side::Left && cam.mount.lateral > 0.0) ||
                                     (a.side == Side::Right && cam.mount.lateral < 0.0);
                const Vec2 origin = camera_position(cam.mount, pose);
                if (side_ok && a.covers(origin.x)) {
                    out.occlusion = std::max(out.occlusion, a.magnitude);
                }
                break;
            }
            case AnomalyKind::Weeds: {
                const Pixel bottom{intr.cx, intr.height - 1.0};
                if (const auto hit = ground_hit(intr, cam.mount, pose, roll, bottom)) {
                    const auto [v0, v1] = view_interval(hit->x);
                    if (intervals_overlap(v0, v1, s0, s1)) {
                        out.weeds = std::max(out.weeds, a.magnitude);
                    }
                }
                break;
            }
            default:
                break;
        }
    }
    return out;
}

HeatmapTriple make_heatmaps(const CameraIntrinsics& intr, int stride) {
    HeatmapTriple h;
    h.stride = stride;
    h.width = (intr.width + stride - 1) / stride;
    h.height = (intr.height + stride - 1) / stride;
    for (auto& c : h.channels) {
        c.assign(static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height), 0.0F);
    }
    return h;
}

void add_blob(HeatmapTriple& h, int channel, Pixel center, double amplitude, double sigma_px) {
    if (amplitude <= 0.0) return;
    const double reach = 3.5 * sigma_px;
    const double half = (h.stride - 1) / 2.0;
    const int c0 = std::max(0, static_cast<int>(std::ceil((center.u - reach - half) / h.stride)));
    const int c1 = std::min(h.width - 1, static_cast<int>(std::floor((center.u + reach - half) / h.stride)));
    const int r0 = std::max(0, static_cast<int>(std::ceil((center.v - reach - half) / h.stride)));
    const int r1 = std::min(h.height - 1, static_cast<int>(std::floor((center.v + reach - half) / h.stride)));
    const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
    auto& grid = h.channels[static_cast<std::size_t>(channel)];
    for (int r = r0; r <= r1; ++r) {
        const double dv = r * h.stride + half - center.v;
        for (int c = c0; c <= c1; ++c) {
            const double du = c * h.stride + half - center.u;
            grid[static_cast<std::size_t>(r) * static_cast<std::size_t>(h.width) +
                 static_cast<std::size_t>(c)] +=
                static_cast<float>(amplitude * std::exp(-(du * du + dv * dv) * inv));
        }
    }
}

HeatmapTriple render_heatmaps(const TrueKeypoints& truth, const NoiseModel& noise,
                              const FrameCorruption& corruption, const CameraIntrinsics& intr,
                              std::uint64_t seed) {
    HeatmapTriple h = make_heatmaps(intr, noise.heatmap_stride);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const double bg_std = noise.background_noise_std * (corruption.occlusion > 0.0 ? 2.0 : 1.0);
    if (bg_std > 0.0) {
        const auto& pool = noise_pool();
        for (auto& grid : h.channels) {
            std::size_t k = static_cast<std::size_t>(rng() % pool.size());
            for (auto& cell : grid) {
                cell = static_cast<float>(bg_std) * pool[k];
                if (++k == pool.size()) k = 0;
            }
        }
    }

    const double visible_gain = 1.0 - corruption.occlusion;
    for (int ch = 0; ch < 3; ++ch) {
        const double ju = noise.kp_jitter_std_px * gauss(rng);
        const double jv = noise.kp_jitter_std_px * gauss(rng);
        if (truth.visible[static_cast<std::size_t>(ch)]) {
            const double amp = visible_gain * (1.0 - corruption.gap_magnitude[static_cast<std::size_t>(ch)]);
            const Pixel p = truth.px[static_cast<std::size_t>(ch)];
            add_blob(h, ch, Pixel{p.u + ju, p.v + jv}, amp, noise.kp_sigma_px);
        }
        if (const auto& comp = corruption.gap_competitor[static_cast<std::size_t>(ch)]) {
            const double amp = visible_gain * corruption.gap_magnitude[static_cast<std::size_t>(ch)];
            add_blob(h, ch, Pixel{comp->u + ju, comp->v + jv}, amp, noise.kp_sigma_px);
        }
    }

    for (int ch = 0; ch < 3; ++ch) {
        double rate = noise.distractor_rate / 3.0;
        if (ch != kVanishing) rate *= 1.0 + 10.0 * corruption.weeds;
        if (rate <= 0.0) continue;
        std::poisson_distribution<int> count(rate);
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            const Pixel p{unit(rng) * intr.width, unit(rng) * intr.height};
            const double amp = visible_gain * (0.1 + 0.4 * unit(rng));
            add_blob(h, ch, p, amp, noise.kp_sigma_px);
        }
    }

    for (auto& grid : h.channels) {
        for (auto& cell : grid) {
            if (!(cell > 0.0F)) cell = 0.0F;
        }
    }
    return h;
}

void write_heatmap_file(const std::filesystem::path& path, const HeatmapTriple& h) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    const std::uint32_t header[3] = {static_cast<std::uint32_t>(h.width),
                                     static_cast<std::uint32_t>(h.height), 3U};
    out.write(kHeatmapMagic, 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    for (const auto& grid : h.channels) {
        out.write(reinterpret_cast<const char*>(grid.data()),
                  static_cast<std::streamsize>(grid.size() * sizeof(float)));
    }
    if (!out) {
        throw std::runtime_error("write failed: " + path.string());
    }
}

HeatmapTriple read_heatmap_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    char magic[4];
    std::uint32_t header[3];
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in || std::memcmp(magic, kHeatmapMagic, 4) != 0 || header[2] != 3U) {
        throw std::runtime_error("not a heatmap file: " + path.string());
    }
    HeatmapTriple h;
    h.width = static_cast<int>(header[0]);
    h.height = static_cast<int>(header[1]);
    for (auto& grid : h.channels) {
        grid.resize(static_cast<std::size_t>(h.width) * static_cast<std::size_t>(h.height));
        in.read(reinterpret_cast<char*>(grid.data()),
                static_cast<std::streamsize>(grid.size() * sizeof(float)));
    }
    if (!in) {
        throw std::runtime_error("truncated heatmap file: " + path.string());
    }
    return h;
}

}  // namespace rowsim
