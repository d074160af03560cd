#pragma once

#include <string>
#include <vector>

#include "survkit/cox.hpp"
#include "survkit/km.hpp"
#include "survkit/logodds.hpp"

namespace survkit::figures {

// All figures are standalone SVG 1.1 documents built directly from the data;
// output is byte-deterministic for identical input.

struct KmSeries {
    std::string label;
    KMCurve curve;
    std::vector<double> times;  // raw observation times, for the risk table
};

std::string km_panel(const std::vector<KmSeries>& series, const std::string& title,
                     const std::string& subtitle = "");

std::string forest_plot(const HazardRatioTable& table, const std::string& title);

std::string log_odds_histogram(const LogOddsHistogram& hist, const std::string& title);

}  // namespace survkit::figures
