#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "survkit/cox.hpp"
#include "survkit/dataset.hpp"

namespace survkit::pipeline {

inline constexpr const char* kVersion = "0.1.0";

// stable exit-code contract
inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;       // input / schema / configuration
inline constexpr int kExitDegenerate = 3;   // empty or degenerate data
inline constexpr int kExitNotConverged = 4; // convergence failure
inline constexpr int kExitMismatch = 5;     // model / patient mismatch

struct RunConfig {
    std::string input_path;
    EventPolicy policy = EventPolicy::overall;
    std::vector<std::string> covariates;  // defaults to the full schema set
    TiesMethod ties = TiesMethod::efron;
    double horizon_months = 60.0;
    std::string out_dir = ".";
    bool figures = true;
    bool strict = false;
    int bins = 20;
    double ridge = 0.0;

    const std::vector<std::string>& covariate_spec() const;
};

// Command bodies; throw survkit errors on failure. run() wraps any of them
// with the exit-code mapping used by the CLI.
void cmd_summarize(const RunConfig& config);
void cmd_km(const RunConfig& config, const std::string& strata_variable,
            std::optional<double> cut_point);
void cmd_cox(const RunConfig& config);
void cmd_compare(const RunConfig& config, const std::vector<std::string>& families);
void cmd_score(const RunConfig& config, const std::string& model_file);
void cmd_synth(const std::string& spec_file, const std::string& out_dir);

int run(const std::function<void()>& body);

}  // namespace survkit::pipeline
