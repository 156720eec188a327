#pragma once

#include <array>
#include <map>
#include <vector>

#include "rowsim/classify.hpp"
#include "rowsim/episode.hpp"

namespace rowsim {

inline constexpr double kHistogramBucket = 250.0;  // m

struct SummaryStats {
    double total_distance = 0.0;
    int n_interventions = 0;
    // With no intervention the mean is reported as the total distance and
    // the flag is cleared.
    double mean_distance_between_interventions = 0.0;
    bool mean_defined = false;
    double max_run = 0.0;
    std::vector<double> runs;             // run lengths; the last one may be open
    std::map<int, int> histogram;         // bucket index -> count
    std::array<int, kFailureModeCount> mode_counts{};
};

/// Stats from run lengths that all ended in an intervention, plus an optional
/// trailing run that did not (open_tail >= 0).
SummaryStats aggregate_runs(const std::vector<double>& closed_runs, double open_tail = -1.0,
                            const std::vector<FailureMode>& modes = {});

/// Chains sequential episodes into autonomous runs: a completed row does not
/// break a run, an intervention does.
SummaryStats aggregate(const std::vector<EpisodeLog>& logs);

}  // namespace rowsim
