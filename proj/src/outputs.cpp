#include "rowsim/outputs.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rowsim {
namespace {

using json = nlohmann::ordered_json;

std::string fixed3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// Rounded so logs stay readable and platform-stable.
double r6(double v) { return std::round(v * 1e6) / 1e6; }

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

json estimate_json(const NavEstimate& e) {
    if (!e.valid) return {{"valid", false}, {"stage", std::string(to_string(e.stage))}};
    return {{"valid", true}, {"heading", r6(e.heading)}, {"lateral", r6(e.lateral)},
            {"row_width", r6(e.row_width)}};
}

std::string_view source_name(CommandSource s) {
    switch (s) {
        case CommandSource::FrontFused: return "front";
        case CommandSource::Stop: return "stop";
        case CommandSource::Rear: return "rear";
        case CommandSource::None: return "none";
    }
    return "?";
}

}  // namespace

std::string interventions_csv(const std::vector<EpisodeLog>& logs) {
    std::string out = std::string(kInterventionsHeader) + "\n";
    for (const auto& log : logs) {
        if (!log.intervention) continue;
        const auto& r = *log.intervention;
        std::string anomalies;
        for (std::size_t i = 0; i < r.anomalies.size(); ++i) {
            anomalies += (i ? ";" : "") + r.anomalies[i];
        }
        out += std::to_string(r.episode) + "," + fixed3(r.x_stop) + "," + fixed3(r.distance) +
               "," + r.reason + "," + std::string(label(r.mode)) + "," + anomalies + "\n";
    }
    return out;
}

std::string summary_json(const SummaryStats& s, const std::vector<EpisodeLog>& logs) {
    json j;
    j["episodes"] = logs.size();
    int completed = 0;
    int timeouts = 0;
    for (const auto& l : logs) {
        completed += l.status == TerminalStatus::RowCompleted ? 1 : 0;
        timeouts += l.status == TerminalStatus::Timeout ? 1 : 0;
    }
    j["rows_completed"] = completed;
    j["timeouts"] = timeouts;
    j["total_distance"] = r6(s.total_distance);
    j["n_interventions"] = s.n_interventions;
    j["mean_distance_between_interventions"] = r6(s.mean_distance_between_interventions);
    j["mean_defined"] = s.mean_defined;
    j["max_run"] = r6(s.max_run);
    json runs = json::array();
    for (double r : s.runs) runs.push_back(r6(r));
    j["runs"] = runs;
    json hist = json::array();
    for (const auto& [bucket, count] : s.histogram) {
        hist.push_back({{"lo", bucket * kHistogramBucket},
                        {"hi", (bucket + 1) * kHistogramBucket},
                        {"count", count}});
    }
    j["histogram"] = hist;
    json modes = json::object();
    for (int m = 0; m < kFailureModeCount; ++m) {
        modes[std::string(label(static_cast<FailureMode>(m)))] =
            s.mode_counts[static_cast<std::size_t>(m)];
    }
    j["mode_counts"] = modes;
    return j.dump(2) + "\n";
}

std::string episode_jsonl(const EpisodeLog& log) {
    std::ostringstream out;
    out << json{{"type", "header"}, {"episode", log.episode}, {"seed", log.seed}}.dump() << "\n";
    for (const auto& t : log.ticks) {
        json cams = json::array();
        for (const auto& c : t.cameras) {
            if (!c.used) {
                cams.push_back(nullptr);
                continue;
            }
            cams.push_back({{"valid", c.valid}, {"stage", std::string(to_string(c.stage))}});
        }
        json rec{{"type", "tick"},
                 {"t", r6(t.t)},
                 {"pose", {r6(t.pose.x), r6(t.pose.y), r6(t.pose.theta)}},
                 {"roll", r6(t.roll)},
                 {"fused", estimate_json(t.fused)},
                 {"cameras", cams},
                 {"mode", std::string(to_string(t.mode))},
                 {"source", std::string(source_name(t.source))},
                 {"command", {r6(t.command.v), r6(t.command.omega)}},
                 {"odometry", {r6(t.odometry.achieved_v), r6(t.odometry.achieved_omega)}},
                 {"contact", t.in_contact}};
        if (t.mode == ModeKind::CrashRecovery) rec["rear"] = estimate_json(t.rear);
        if (t.solved) {
            rec["solver"] = {{"iterations", t.diagnostics.iterations},
                             {"cost", r6(t.diagnostics.cost)},
                             {"converged", t.diagnostics.converged}};
        }
        out << rec.dump() << "\n";
    }
    json end{{"type", "end"},
             {"status", std::string(to_string(log.status))},
             {"t", r6(log.t_end)},
             {"distance", r6(log.distance)},
             {"recoveries", log.recoveries}};
    json modes = json::array();
    for (ModeKind m : log.modes) modes.push_back(std::string(to_string(m)));
    end["modes"] = modes;
    if (log.intervention) {
        end["reason"] = log.intervention->reason;
        end["mode_label"] = std::string(label(log.intervention->mode));
    }
    out << end.dump() << "\n";
    return out.str();
}

void emit_outputs(const std::filesystem::path& out_dir, const SummaryStats& stats,
                  const std::vector<EpisodeLog>& logs, const OutputOptions& opts) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
    write_file(out_dir / "interventions.csv", interventions_csv(logs));
    write_file(out_dir / "summary.json", summary_json(stats, logs));
    if (!opts.episode_logs) return;
    const auto dir = out_dir / "episodes";
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
    for (const auto& log : logs) {
        char name[32];
        std::snprintf(name, sizeof name, "ep%04d.jsonl", log.episode);
        write_file(dir / name, episode_jsonl(log));
    }
}

}  // namespace rowsim
