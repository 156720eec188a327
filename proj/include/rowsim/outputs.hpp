#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rowsim/aggregate.hpp"
#include "rowsim/episode.hpp"

namespace rowsim {

inline constexpr const char* kInterventionsHeader =
    "episode,x_stop,distance,reason,mode_label,anomalies";

std::string interventions_csv(const std::vector<EpisodeLog>& logs);
std::string summary_json(const SummaryStats& stats, const std::vector<EpisodeLog>& logs);

/// JSON lines: one "header" record, one "tick" record per control tick, one
/// "end" record.
std::string episode_jsonl(const EpisodeLog& log);

struct OutputOptions {
    bool episode_logs = true;
};

/// Writes interventions.csv, summary.json and episodes/epNNNN.jsonl under
/// out_dir. Throws std::runtime_error naming the path on I/O failure.
void emit_outputs(const std::filesystem::path& out_dir, const SummaryStats& stats,
                  const std::vector<EpisodeLog>& logs, const OutputOptions& opts = {});

}  // namespace rowsim
