#include "rowsim/field_world.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace rowsim {
namespace {

constexpr std::array<std::pair<AnomalyKind, std::string_view>, 7> kKindNames{{
    {AnomalyKind::CornGap, "CornGap"},
    {AnomalyKind::Occlusion, "Occlusion"},
    {AnomalyKind::Weeds, "Weeds"},
    {AnomalyKind::Bump, "Bump"},
    {AnomalyKind::PlantingError, "PlantingError"},
    {AnomalyKind::MudSlip, "MudSlip"},
    {AnomalyKind::BadStart, "BadStart"},
}};

constexpr std::array<std::pair<Side, std::string_view>, 4> kSideNames{{
    {Side::Left, "Left"},
    {Side::Right, "Right"},
    {Side::Both, "Both"},
    {Side::None, "N/A"},
}};

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool sides_overlap(Side a, Side b) {
    auto expand = [](Side s) {
        return std::pair{s == Side::Left || s == Side::Both || s == Side::None,
                         s == Side::Right || s == Side::Both || s == Side::None};
    };
    auto [al, ar] = expand(a);
    auto [bl, br] = expand(b);
    return (al && bl) || (ar && br);
}

Side planting_side(const AnomalySpec& a) {
    if (a.lateral_offset > 0.0) return Side::Left;
    if (a.lateral_offset < 0.0) return Side::Right;
    return Side::Both;
}

}  // namespace

std::string_view to_string(AnomalyKind k) {
    for (const auto& [kind, name] : kKindNames) {
        if (kind == k) return name;
    }
    return "?";
}

std::string_view to_string(Side s) {
    for (const auto& [side, name] : kSideNames) {
        if (side == s) return name;
    }
    return "?";
}

AnomalyKind anomaly_kind_from_string(std::string_view s) {
    for (const auto& [kind, name] : kKindNames) {
        if (name == s) return kind;
    }
    throw std::invalid_argument("unknown anomaly kind '" + std::string(s) + "'");
}

Side side_from_string(std::string_view s) {
    if (s == "None" || s == "NA") return Side::None;
    for (const auto& [side, name] : kSideNames) {
        if (name == s) return side;
    }
    throw std::invalid_argument("unknown side '" + std::string(s) + "'");
}

void FieldSpec::validate() const {
    require(row_spacing > 0.0, "field.row_spacing must be > 0");
    require(row_length > 0.0, "field.row_length must be > 0");
    require(n_lanes >= 3, "field.n_lanes must be >= 3");
    require(plant_spacing > 0.0, "field.plant_spacing must be > 0");
    require(plant_jitter_std >= 0.0, "field.plant_jitter_std must be >= 0");
    require(plant_radius >= 0.0 && plant_radius < row_spacing / 2.0,
            "field.plant_radius must be in [0, row_spacing/2)");
    require(terrain_roll_wavelength > 0.0, "field.terrain_roll_wavelength must be > 0");
    require(headland >= 0.0, "field.headland must be >= 0");
}

void RobotSpec::validate(const FieldSpec& field) const {
    require(width > 0.0 && width < field.row_spacing, "robot.width must be in (0, row_spacing)");
    require(length > 0.0, "robot.length must be > 0");
    require(v_row_follow > 0.0 && v_recovery > 0.0, "robot speeds must be > 0");
    require(v_max > 0.0 && omega_max > 0.0, "robot limits must be > 0");
    require(v_row_follow <= v_max && v_recovery <= v_max, "robot speeds must not exceed v_max");
    require(contact_residual >= 0.0 && contact_residual <= 1.0,
            "robot.contact_residual must be in [0,1]");
}

void AnomalySpec::validate(const FieldSpec& field) const {
    const std::string tag = "anomaly " + std::string(to_string(kind)) + ": ";
    require(magnitude >= 0.0 && magnitude <= 1.0, tag + "magnitude must be in [0,1]");
    require(start_s >= 0.0 && extent_s >= 0.0, tag + "start_s and extent_s must be >= 0");
    require(start_s + extent_s <= field.row_length, tag + "extent runs past the row end");
    const int first = -(field.n_lanes - 1) / 2;
    require(lane >= first && lane < first + field.n_lanes, tag + "lane out of range");
    if (kind == AnomalyKind::BadStart) {
        require(extent_s == 0.0, tag + "BadStart has no spatial extent");
    }
    if (kind == AnomalyKind::PlantingError) {
        require(std::abs(lateral_offset) < field.row_spacing / 2.0,
                tag + "lateral_offset must stay inside the lane");
    }
}

bool ContactReport::planting_error() const {
    return std::any_of(contacts.begin(), contacts.end(),
                       [](const Contact& c) { return c.plant.planting_error; });
}

int World::first_lane() const { return -(field_.n_lanes - 1) / 2; }
int World::last_lane() const { return first_lane() + field_.n_lanes - 1; }

int World::lane_of(double y) const {
    const int lane = static_cast<int>(std::lround(y / field_.row_spacing));
    return std::clamp(lane, first_lane(), last_lane());
}

std::span<const Plant> World::row_plants(int row) const {
    if (row < first_row() || row > last_row()) {
        return {};
    }
    return rows_[static_cast<std::size_t>(row - first_row())];
}

World build_world(const FieldSpec& field, const RobotSpec& robot,
                  std::vector<AnomalySpec> anomalies, std::uint64_t seed) {
    field.validate();
    robot.validate(field);
    for (const auto& a : anomalies) {
        a.validate(field);
    }
    for (const auto& gap : anomalies) {
        if (gap.kind != AnomalyKind::CornGap) continue;
        for (const auto& pe : anomalies) {
            if (pe.kind != AnomalyKind::PlantingError) continue;
            if (gap.lane == pe.lane && gap.start_s == pe.start_s && gap.extent_s == pe.extent_s &&
                sides_overlap(gap.side, planting_side(pe))) {
                throw std::invalid_argument(
                    "CornGap and PlantingError contradict on the same span and side");
            }
        }
    }

    World w;
    w.field_ = field;
    w.robot_ = robot;
    w.seed_ = seed;

    const int n_rows = w.last_row() - w.first_row() + 1;
    const auto n_plants = static_cast<std::size_t>(std::floor(field.row_length / field.plant_spacing)) + 1;
    w.rows_.resize(static_cast<std::size_t>(n_rows));
    for (int row = w.first_row(); row <= w.last_row(); ++row) {
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(row - w.first_row())));
        std::normal_distribution<double> jitter(0.0, 1.0);
        auto& plants = w.rows_[static_cast<std::size_t>(row - w.first_row())];
        plants.reserve(n_plants);
        for (std::size_t k = 0; k < n_plants; ++k) {
            const double nominal = static_cast<double>(k) * field.plant_spacing;
            const double x = std::clamp(nominal + field.plant_jitter_std * jitter(rng), 0.0,
                                        field.row_length);
            plants.push_back(Plant{x, w.row_y(row), robot.contact_residual, false});
        }
    }

    for (const auto& a : anomalies) {
        if (a.kind != AnomalyKind::CornGap) continue;
        std::vector<int> gap_rows;
        if (a.side != Side::Right) gap_rows.push_back(a.lane + 1);
        if (a.side != Side::Left) gap_rows.push_back(a.lane);
        for (int row : gap_rows) {
            auto& plants = w.rows_[static_cast<std::size_t>(row - w.first_row())];
            std::erase_if(plants, [&](const Plant& p) { return a.covers(p.x); });
        }
    }
    for (auto& plants : w.rows_) {
        std::stable_sort(plants.begin(), plants.end(),
                         [](const Plant& a, const Plant& b) { return a.x < b.x; });
    }

    for (const auto& a : anomalies) {
        if (a.kind != AnomalyKind::PlantingError) continue;
        const double residual = robot.contact_residual * (1.0 - a.magnitude);
        const double y = w.lane_center(a.lane) + a.lateral_offset;
        for (double x = a.start_s; x <= a.start_s + a.extent_s + 1e-9; x += field.plant_spacing) {
            w.stray_.push_back(Plant{x, y, residual, true});
        }
    }
    std::stable_sort(w.stray_.begin(), w.stray_.end(),
                     [](const Plant& a, const Plant& b) { return a.x < b.x; });

    w.bump_signs_.reserve(anomalies.size());
    for (std::size_t i = 0; i < anomalies.size(); ++i) {
        switch (anomalies[i].side) {
            case Side::Left: w.bump_signs_.push_back(1); break;
            case Side::Right: w.bump_signs_.push_back(-1); break;
            default: w.bump_signs_.push_back((mix_seed(seed, 1000 + i) & 1U) ? 1 : -1); break;
        }
    }
    w.anomalies_ = std::move(anomalies);
    return w;
}

namespace {

void collect_contacts(std::span<const Plant> plants, const Pose2D& pose, double half_len,
                      double half_wid, double radius, ContactReport& out) {
    const double reach = std::hypot(half_len, half_wid) + radius;
    auto first = std::lower_bound(plants.begin(), plants.end(), pose.x - reach,
                                  [](const Plant& p, double x) { return p.x < x; });
    const double c = std::cos(pose.theta);
    const double s = std::sin(pose.theta);
    for (auto it = first; it != plants.end() && it->x <= pose.x + reach; ++it) {
        const double dx = it->x - pose.x;
        const double dy = it->y - pose.y;
        const double fwd = c * dx + s * dy;
        const double lat = -s * dx + c * dy;
        const double qx = std::clamp(fwd, -half_len, half_len);
        const double qy = std::clamp(lat, -half_wid, half_wid);
        const double d2 = (fwd - qx) * (fwd - qx) + (lat - qy) * (lat - qy);
        if (d2 <= radius * radius) {
            out.contacts.push_back(Contact{*it, fwd, lat});
        }
    }
}

}  // namespace

ContactReport collision_check(const World& world, const Pose2D& pose) {
    ContactReport report;
    const auto& field = world.field();
    const auto& robot = world.robot();
    const double half_len = robot.length / 2.0;
    const double half_wid = robot.width / 2.0;
    const double reach = std::hypot(half_len, half_wid) + field.plant_radius;
    for (int row = world.first_row(); row <= world.last_row(); ++row) {
        if (std::abs(world.row_y(row) - pose.y) > reach) continue;
        collect_contacts(world.row_plants(row), pose, half_len, half_wid, field.plant_radius,
                         report);
    }
    collect_contacts(world.stray_plants(), pose, half_len, half_wid, field.plant_radius, report);
    return report;
}

double slip_at(const World& world, const Pose2D& pose) {
    const int lane = world.lane_of(pose.y);
    double slip = 0.0;
    for (const auto& a : world.anomalies()) {
        if (a.kind == AnomalyKind::MudSlip && a.lane == lane && a.covers(pose.x)) {
            slip = std::max(slip, a.magnitude);
        }
    }
    return slip;
}

StepResult step_robot(const World& world, const RobotState& state, const ControlCommand& cmd,
                      double dt) {
    if (!(dt > 0.0 && dt <= 0.2)) {
        throw std::invalid_argument("step_robot: dt must be in (0, 0.2]");
    }
    const auto& robot = world.robot();
    const double v = std::clamp(cmd.v, -robot.v_max, robot.v_max);
    const double omega = std::clamp(cmd.omega, -robot.omega_max, robot.omega_max);

    StepResult out;
    out.odometry.clamped = (v != cmd.v) || (omega != cmd.omega);
    out.contact = collision_check(world, state.pose);

    const double mobility = 1.0 - slip_at(world, state.pose);
    double residual = 1.0;
    for (const auto& c : out.contact.contacts) {
        // Only plants on the side the robot is driving toward push back.
        if (c.forward * v > 0.0) {
            residual = std::min(residual, c.plant.residual);
        }
    }
    const double v_eff = v * mobility * residual;
    const double omega_eff = omega * mobility;

    Pose2D next = unicycle_step(state.pose, v_eff, omega_eff, dt);

    const int lane = world.lane_of(state.pose.y);
    const auto& anomalies = world.anomalies();
    for (std::size_t i = 0; i < anomalies.size(); ++i) {
        const auto& a = anomalies[i];
        if (a.kind != AnomalyKind::Bump || a.lane != lane) continue;
        const bool crossed = (state.pose.x < a.start_s && next.x >= a.start_s) ||
                             (state.pose.x >= a.start_s && next.x < a.start_s);
        if (crossed) {
            next.theta = normalize_angle(next.theta + world.bump_sign(i) * a.magnitude *
                                                          robot.bump_dtheta_max);
        }
    }

    out.state.pose = next;
    out.state.t = state.t + dt;
    out.odometry.t = out.state.t;
    out.odometry.achieved_v = v_eff;
    out.odometry.achieved_omega = omega_eff;
    out.odometry.commanded_v = cmd.v;
    out.odometry.commanded_omega = cmd.omega;
    return out;
}

std::optional<NavTruth> ground_truth_nav(const World& world, const Pose2D& pose) {
    const auto& field = world.field();
    const bool inside_x = pose.x >= -field.headland && pose.x <= field.row_length + field.headland;
    const bool inside_y = pose.y >= world.row_y(world.first_row()) &&
                          pose.y <= world.row_y(world.last_row());
    if (!inside_x || !inside_y || !std::isfinite(pose.theta)) {
        return std::nullopt;
    }
    NavTruth truth;
    truth.lane = world.lane_of(pose.y);
    truth.heading = normalize_angle(pose.theta);
    truth.lateral = pose.y - world.lane_center(truth.lane);
    return truth;
}

double roll_at(const World& world, const Pose2D& pose) {
    const auto& field = world.field();
    double roll = field.terrain_roll_amplitude *
                  std::sin(2.0 * kPi * pose.x / field.terrain_roll_wavelength);
    const int lane = world.lane_of(pose.y);
    const auto& anomalies = world.anomalies();
    for (std::size_t i = 0; i < anomalies.size(); ++i) {
        const auto& a = anomalies[i];
        if (a.kind != AnomalyKind::Bump || a.lane != lane) continue;
        const double span = std::max(a.extent_s, world.robot().bump_spike_length);
        if (pose.x >= a.start_s && pose.x <= a.start_s + span) {
            roll += world.bump_sign(i) * a.magnitude * world.robot().bump_roll_spike;
        }
    }
    return roll;
}

}  // namespace rowsim
