#include "rowsim/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rowsim {
namespace {

using json = nlohmann::ordered_json;

class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            throw std::invalid_argument(path_ + ": expected an object");
        }
    }

    template <typename T>
    Section& get(const char* key, T& out) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) {
            try {
                out = it->template get<T>();
            } catch (const json::exception& e) {
                throw std::invalid_argument(path_ + "." + key + ": " + e.what());
            }
        }
        return *this;
    }

    template <typename F>
    Section& get_with(const char* key, F&& parse) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) {
            try {
                parse(*it, path_ + "." + key);
            } catch (const json::exception& e) {
                throw std::invalid_argument(path_ + "." + key + ": " + e.what());
            }
        }
        return *this;
    }

    void done() const {
        for (const auto& [k, v] : j_.items()) {
            if (!seen_.contains(k)) {
                throw std::invalid_argument(path_ + ": unknown key '" + k + "'");
            }
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

Facing facing_from_string(const std::string& s, const std::string& path) {
    if (s == "Forward") return Facing::Forward;
    if (s == "Rear") return Facing::Rear;
    throw std::invalid_argument(path + ": facing must be Forward or Rear");
}

void read_camera(const json& j, const std::string& path, Camera& cam) {
    Section s(j, path);
    s.get("name", cam.name);
    s.get_with("intrinsics", [&](const json& ji, const std::string& p) {
        Section(ji, p)
            .get("fx", cam.intrinsics.fx)
            .get("fy", cam.intrinsics.fy)
            .get("cx", cam.intrinsics.cx)
            .get("cy", cam.intrinsics.cy)
            .get("width", cam.intrinsics.width)
            .get("height", cam.intrinsics.height)
            .done();
    });
    s.get_with("mount", [&](const json& jm, const std::string& p) {
        std::string facing = cam.mount.facing == Facing::Rear ? "Rear" : "Forward";
        Section(jm, p)
            .get("forward", cam.mount.forward)
            .get("lateral", cam.mount.lateral)
            .get("height", cam.mount.height)
            .get("pitch", cam.mount.pitch)
            .get("yaw_offset", cam.mount.yaw_offset)
            .get("facing", facing)
            .done();
        cam.mount.facing = facing_from_string(facing, p + ".facing");
    });
    s.done();
}

void read_anomaly(const json& j, const std::string& path, AnomalySpec& a) {
    std::string kind;
    std::string side = "N/A";
    Section s(j, path);
    s.get("kind", kind)
        .get("lane", a.lane)
        .get("side", side)
        .get("start_s", a.start_s)
        .get("extent_s", a.extent_s)
        .get("magnitude", a.magnitude)
        .get("lateral_offset", a.lateral_offset)
        .done();
    if (kind.empty()) throw std::invalid_argument(path + ": missing kind");
    try {
        a.kind = anomaly_kind_from_string(kind);
        a.side = side_from_string(side);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

EpisodeConfig from_json(const json& root) {
    EpisodeConfig c;
    Section top(root, "config");
    top.get_with("field", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("row_spacing", c.field.row_spacing)
            .get("row_length", c.field.row_length)
            .get("n_lanes", c.field.n_lanes)
            .get("plant_spacing", c.field.plant_spacing)
            .get("plant_jitter_std", c.field.plant_jitter_std)
            .get("plant_radius", c.field.plant_radius)
            .get("terrain_roll_amplitude", c.field.terrain_roll_amplitude)
            .get("terrain_roll_wavelength", c.field.terrain_roll_wavelength)
            .get("headland", c.field.headland)
            .done();
    });
    top.get_with("robot", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("width", c.robot.width)
            .get("length", c.robot.length)
            .get("v_row_follow", c.robot.v_row_follow)
            .get("v_recovery", c.robot.v_recovery)
            .get("v_max", c.robot.v_max)
            .get("omega_max", c.robot.omega_max)
            .get("bump_dtheta_max", c.robot.bump_dtheta_max)
            .get("bump_roll_spike", c.robot.bump_roll_spike)
            .get("bump_spike_length", c.robot.bump_spike_length)
            .get("contact_residual", c.robot.contact_residual)
            .get("bad_start_lateral_max", c.robot.bad_start_lateral_max)
            .get("bad_start_heading_max", c.robot.bad_start_heading_max)
            .done();
    });
    top.get_with("cameras", [&](const json& j, const std::string& p) {
        if (!j.is_array()) throw std::invalid_argument(p + ": expected an array");
        c.cameras.clear();
        for (std::size_t i = 0; i < j.size(); ++i) {
            Camera cam;
            read_camera(j[i], p + "[" + std::to_string(i) + "]", cam);
            c.cameras.push_back(cam);
        }
    });
    top.get_with("noise", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("kp_sigma_px", c.noise.kp_sigma_px)
            .get("kp_jitter_std_px", c.noise.kp_jitter_std_px)
            .get("background_noise_std", c.noise.background_noise_std)
            .get("distractor_rate", c.noise.distractor_rate)
            .get("heatmap_stride", c.noise.heatmap_stride)
            .done();
    });
    top.get_with("confidence", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("peak_min", c.confidence.peak_min)
            .get("uniqueness_min", c.confidence.uniqueness_min)
            .get("exclusion_radius_px", c.confidence.exclusion_radius_px)
            .get("subpixel", c.confidence.subpixel)
            .done();
    });
    top.get_with("controller", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("horizon_steps", c.controller.horizon_steps)
            .get("dt", c.controller.dt)
            .get("q_y", c.controller.q_y)
            .get("q_theta", c.controller.q_theta)
            .get("r_v", c.controller.r_v)
            .get("r_omega", c.controller.r_omega)
            .get("q_y_terminal", c.controller.q_y_terminal)
            .get("q_theta_terminal", c.controller.q_theta_terminal)
            .get("v_ref", c.controller.v_ref)
            .get("v_min", c.controller.v_min)
            .get("v_max", c.controller.v_max)
            .get("omega_max", c.controller.omega_max)
            .get("max_iters", c.controller.max_iters)
            .get("tolerance", c.controller.tolerance)
            .done();
    });
    top.get_with("fsm", [&](const json& j, const std::string& p) {
        Section fsm(j, p);
        fsm.get_with("crash_detector", [&](const json& jc, const std::string& pc) {
            Section(jc, pc)
                .get("window", c.crash_detector.window)
                .get("speed_ratio_min", c.crash_detector.speed_ratio_min)
                .get("min_commanded", c.crash_detector.min_commanded)
                .done();
        });
        fsm.get_with("recovery", [&](const json& jr, const std::string& pr) {
            Section(jr, pr)
                .get("min_reverse_dist", c.recovery.min_reverse_dist)
                .get("max_reverse_dist", c.recovery.max_reverse_dist)
                .get("resume_heading_max", c.recovery.resume_heading_max)
                .get("max_attempts_per_spot", c.recovery.max_attempts_per_spot)
                .get("spot_radius", c.recovery.spot_radius)
                .get("invalid_dwell_enabled", c.recovery.invalid_dwell_enabled)
                .get("invalid_dwell", c.recovery.invalid_dwell)
                .done();
        });
        fsm.get_with("monitor", [&](const json& jm, const std::string& pm) {
            Section(jm, pm)
                .get("contact_limit", c.monitor.contact_limit)
                .get("heading_limit", c.monitor.heading_limit)
                .get("heading_sustain", c.monitor.heading_sustain)
                .done();
        });
        fsm.done();
    });
    top.get_with("anomalies", [&](const json& j, const std::string& p) {
        if (!j.is_array()) throw std::invalid_argument(p + ": expected an array");
        c.anomalies.clear();
        for (std::size_t i = 0; i < j.size(); ++i) {
            AnomalySpec a;
            read_anomaly(j[i], p + "[" + std::to_string(i) + "]", a);
            c.anomalies.push_back(a);
        }
    });
    top.get_with("perception_toggles", [&](const json& j, const std::string& p) {
        Section(j, p)
            .get("roll_correction", c.perception_toggles.roll_correction)
            .get("calibration_error_cx_px", c.perception_toggles.calibration_error_cx_px)
            .done();
    });
    top.get_with("start", [&](const json& j, const std::string& p) {
        Section(j, p).get("x", c.start.x).get("y", c.start.y).get("theta", c.start.theta).done();
    });
    top.get("seed", c.seed)
        .get("lane", c.lane)
        .get("sim_dt", c.sim_dt)
        .get("control_period", c.control_period)
        .get("max_sim_time", c.max_sim_time)
        .get("gap_lookahead", c.gap_lookahead)
        .get("classification_radius", c.classification_radius)
        .get("bad_start_window", c.bad_start_window)
        .done();
    c.validate();
    return c;
}

json camera_json(const Camera& cam) {
    json j;
    j["name"] = cam.name;
    j["intrinsics"] = {{"fx", cam.intrinsics.fx}, {"fy", cam.intrinsics.fy},
                       {"cx", cam.intrinsics.cx}, {"cy", cam.intrinsics.cy},
                       {"width", cam.intrinsics.width}, {"height", cam.intrinsics.height}};
    j["mount"] = {{"forward", cam.mount.forward},
                  {"lateral", cam.mount.lateral},
                  {"height", cam.mount.height},
                  {"pitch", cam.mount.pitch},
                  {"yaw_offset", cam.mount.yaw_offset},
                  {"facing", cam.mount.facing == Facing::Rear ? "Rear" : "Forward"}};
    return j;
}

}  // namespace

void EpisodeConfig::validate() const {
    field.validate();
    robot.validate(field);
    noise.validate();
    confidence.validate();
    controller.validate();
    crash_detector.validate();
    recovery.validate();
    monitor.validate();
    if (cameras.empty()) throw std::invalid_argument("cameras: at least one camera is required");
    bool any_front = false;
    for (const auto& cam : cameras) {
        cam.intrinsics.validate();
        cam.mount.validate();
        any_front = any_front || cam.mount.facing == Facing::Forward;
    }
    if (!any_front) throw std::invalid_argument("cameras: need at least one Forward camera");
    for (const auto& a : anomalies) a.validate(field);
    const int first = -(field.n_lanes - 1) / 2;
    if (lane < first || lane >= first + field.n_lanes) {
        throw std::invalid_argument("lane out of range for field.n_lanes");
    }
    if (!(sim_dt > 0.0 && sim_dt <= 0.2)) throw std::invalid_argument("sim_dt must be in (0, 0.2]");
    const double ratio = control_period / sim_dt;
    if (!(control_period >= sim_dt) || std::abs(ratio - std::round(ratio)) > 1e-9) {
        throw std::invalid_argument("control_period must be a positive multiple of sim_dt");
    }
    if (max_sim_time < 0.0) throw std::invalid_argument("max_sim_time must be >= 0");
    if (gap_lookahead < 0.0 || classification_radius < 0.0 || bad_start_window < 0.0) {
        throw std::invalid_argument("gap_lookahead, classification_radius, bad_start_window must be >= 0");
    }
    if (controller.v_ref > robot.v_max || controller.v_max > robot.v_max + 1e-12) {
        throw std::invalid_argument("controller speed limits exceed robot.v_max");
    }
}

double EpisodeConfig::effective_max_sim_time() const {
    if (max_sim_time > 0.0) return max_sim_time;
    return 2.0 * field.row_length / robot.v_row_follow + 60.0;
}

EstimatorConfig EpisodeConfig::estimator() const {
    EstimatorConfig e;
    e.confidence = confidence;
    e.roll_correction = perception_toggles.roll_correction;
    e.cx_error_px = perception_toggles.calibration_error_cx_px;
    e.nominal_row_spacing = field.row_spacing;
    return e;
}

EpisodeConfig parse_config(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    return from_json(root);
}

EpisodeConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot read config " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path.string() + ": " + e.what());
    }
}

std::string dump_config(const EpisodeConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["lane"] = c.lane;
    j["sim_dt"] = c.sim_dt;
    j["control_period"] = c.control_period;
    j["max_sim_time"] = c.max_sim_time;
    j["gap_lookahead"] = c.gap_lookahead;
    j["classification_radius"] = c.classification_radius;
    j["bad_start_window"] = c.bad_start_window;
    j["start"] = {{"x", c.start.x}, {"y", c.start.y}, {"theta", c.start.theta}};
    j["field"] = {{"row_spacing", c.field.row_spacing},
                  {"row_length", c.field.row_length},
                  {"n_lanes", c.field.n_lanes},
                  {"plant_spacing", c.field.plant_spacing},
                  {"plant_jitter_std", c.field.plant_jitter_std},
                  {"plant_radius", c.field.plant_radius},
                  {"terrain_roll_amplitude", c.field.terrain_roll_amplitude},
                  {"terrain_roll_wavelength", c.field.terrain_roll_wavelength},
                  {"headland", c.field.headland}};
    j["robot"] = {{"width", c.robot.width},
                  {"length", c.robot.length},
                  {"v_row_follow", c.robot.v_row_follow},
                  {"v_recovery", c.robot.v_recovery},
                  {"v_max", c.robot.v_max},
                  {"omega_max", c.robot.omega_max},
                  {"bump_dtheta_max", c.robot.bump_dtheta_max},
                  {"bump_roll_spike", c.robot.bump_roll_spike},
                  {"bump_spike_length", c.robot.bump_spike_length},
                  {"contact_residual", c.robot.contact_residual},
                  {"bad_start_lateral_max", c.robot.bad_start_lateral_max},
                  {"bad_start_heading_max", c.robot.bad_start_heading_max}};
    j["cameras"] = json::array();
    for (const auto& cam : c.cameras) j["cameras"].push_back(camera_json(cam));
    j["noise"] = {{"kp_sigma_px", c.noise.kp_sigma_px},
                  {"kp_jitter_std_px", c.noise.kp_jitter_std_px},
                  {"background_noise_std", c.noise.background_noise_std},
                  {"distractor_rate", c.noise.distractor_rate},
                  {"heatmap_stride", c.noise.heatmap_stride}};
    j["confidence"] = {{"peak_min", c.confidence.peak_min},
                       {"uniqueness_min", c.confidence.uniqueness_min},
                       {"exclusion_radius_px", c.confidence.exclusion_radius_px},
                       {"subpixel", c.confidence.subpixel}};
    j["controller"] = {{"horizon_steps", c.controller.horizon_steps},
                       {"dt", c.controller.dt},
                       {"q_y", c.controller.q_y},
                       {"q_theta", c.controller.q_theta},
                       {"r_v", c.controller.r_v},
                       {"r_omega", c.controller.r_omega},
                       {"q_y_terminal", c.controller.q_y_terminal},
                       {"q_theta_terminal", c.controller.q_theta_terminal},
                       {"v_ref", c.controller.v_ref},
                       {"v_min", c.controller.v_min},
                       {"v_max", c.controller.v_max},
                       {"omega_max", c.controller.omega_max},
                       {"max_iters", c.controller.max_iters},
                       {"tolerance", c.controller.tolerance}};
    j["fsm"] = {
        {"crash_detector",
         {{"window", c.crash_detector.window},
          {"speed_ratio_min", c.crash_detector.speed_ratio_min},
          {"min_commanded", c.crash_detector.min_commanded}}},
        {"recovery",
         {{"min_reverse_dist", c.recovery.min_reverse_dist},
          {"max_reverse_dist", c.recovery.max_reverse_dist},
          {"resume_heading_max", c.recovery.resume_heading_max},
          {"max_attempts_per_spot", c.recovery.max_attempts_per_spot},
          {"spot_radius", c.recovery.spot_radius},
          {"invalid_dwell_enabled", c.recovery.invalid_dwell_enabled},
          {"invalid_dwell", c.recovery.invalid_dwell}}},
        {"monitor",
         {{"contact_limit", c.monitor.contact_limit},
          {"heading_limit", c.monitor.heading_limit},
          {"heading_sustain", c.monitor.heading_sustain}}}};
    j["perception_toggles"] = {
        {"roll_correction", c.perception_toggles.roll_correction},
        {"calibration_error_cx_px", c.perception_toggles.calibration_error_cx_px}};
    j["anomalies"] = json::array();
    for (const auto& a : c.anomalies) {
        j["anomalies"].push_back({{"kind", std::string(to_string(a.kind))},
                                  {"lane", a.lane},
                                  {"side", std::string(to_string(a.side))},
                                  {"start_s", a.start_s},
                                  {"extent_s", a.extent_s},
                                  {"magnitude", a.magnitude},
                                  {"lateral_offset", a.lateral_offset}});
    }
    return j.dump(2) + "\n";
}

}  // namespace rowsim
