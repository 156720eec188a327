#include "rowsim/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace rowsim {

SummaryStats aggregate_runs(const std::vector<double>& closed_runs, double open_tail,
                            const std::vector<FailureMode>& modes) {
    SummaryStats s;
    s.runs = closed_runs;
    if (open_tail > 0.0) s.runs.push_back(open_tail);
    s.n_interventions = static_cast<int>(closed_runs.size());
    for (double r : s.runs) {
        s.total_distance += r;
        s.max_run = std::max(s.max_run, r);
        ++s.histogram[static_cast<int>(std::floor(r / kHistogramBucket))];
    }
    if (s.n_interventions > 0) {
        s.mean_distance_between_interventions = s.total_distance / s.n_interventions;
        s.mean_defined = true;
    } else {
        s.mean_distance_between_interventions = s.total_distance;
    }
    for (FailureMode m : modes) ++s.mode_counts[static_cast<std::size_t>(m)];
    return s;
}

SummaryStats aggregate(const std::vector<EpisodeLog>& logs) {
    std::vector<double> closed;
    std::vector<FailureMode> modes;
    double current = 0.0;
    for (const auto& log : logs) {
        current += log.distance;
        if (log.intervention) {
            closed.push_back(current);
            modes.push_back(log.intervention->mode);
            current = 0.0;
        }
    }
    return aggregate_runs(closed, current, modes);
}

}  // namespace rowsim
