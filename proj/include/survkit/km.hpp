#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "survkit/dataset.hpp"

namespace survkit {

// Product-limit estimate, defined at observed event times only.
// se_greenwood is NaN from the point the curve reaches exactly 0 (Greenwood's
// formula is undefined there); ci bands are complementary log-log, clamped.
struct KMCurve {
    std::vector<double> event_times;   // strictly increasing
    std::vector<double> survival;      // nonincreasing, in [0,1]
    std::vector<int> at_risk;          // n_i just before each event time
    std::vector<int> deaths;           // d_i at each event time
    std::vector<double> se_greenwood;
    std::vector<double> ci_lower;
    std::vector<double> ci_upper;
    double max_observed_time = 0.0;    // last event or censoring time
    std::size_t n = 0;
    std::size_t n_events = 0;
};

struct SurvivalValue {
    double value = 1.0;
    bool extrapolated = false;  // t beyond the last observed time
};

KMCurve km_fit(const std::vector<double>& time, const std::vector<int>& event);
KMCurve km_fit(const SampleSet& samples);

// Right-continuous step evaluation; S(t) = 1 before the first event.
SurvivalValue survival_at(const KMCurve& curve, double t);

// Per-group curves, ordered by label. Each entry equals km_fit on the
// group's subset.
std::vector<std::pair<std::string, KMCurve>> km_stratified(
    const std::vector<double>& time, const std::vector<int>& event,
    const std::vector<std::string>& group_labels);

struct LogRankGroup {
    std::string label;
    std::size_t n = 0;
    double observed = 0.0;
    double expected = 0.0;
};

struct LogRankResult {
    double chi_square = 0.0;
    int degrees_of_freedom = 0;  // groups - 1
    double p_value = 1.0;
    std::vector<LogRankGroup> groups;  // ordered by label
};

// Score test comparing survival across groups: observed minus expected event
// counts at each event time, normalized by the hypergeometric covariance.
LogRankResult logrank_test(const std::vector<double>& time, const std::vector<int>& event,
                           const std::vector<std::string>& group_labels);

// Export: CSV with columns time,at_risk,deaths,survival,se,ci_lower,ci_upper
// (se empty where undefined) and a JSON mirror with the same keys.
std::string km_to_csv(const KMCurve& curve);
std::string km_to_json(const KMCurve& curve);

}  // namespace survkit
