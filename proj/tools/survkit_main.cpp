#include <CLI11.hpp>
#include <optional>
#include <string>
#include <vector>

#include "survkit/pipeline.hpp"

namespace sp = survkit::pipeline;

int main(int argc, char** argv) {
    CLI::App app{"survkit: censored time-to-event analysis for clinical cohorts"};
    app.require_subcommand(1);

    sp::RunConfig config;
    std::string policy = "overall";
    std::string ties = "efron";
    std::vector<std::string> covariates;
    bool no_figures = false;

    auto add_common = [&](CLI::App* cmd, bool needs_input = true) {
        auto* opt = cmd->add_option("--input", config.input_path, "cohort CSV file");
        if (needs_input) opt->required();
        cmd->add_option("--policy", policy, "event policy: overall | cause-specific")
            ->check(CLI::IsMember({"overall", "cause-specific"}));
        cmd->add_option("--out-dir", config.out_dir, "output directory (default .)");
        cmd->add_flag("--no-figures", no_figures, "skip SVG emission");
        cmd->add_flag("--strict", config.strict, "strict parsing: reject rows with missing cells");
    };

    auto* summarize = app.add_subcommand("summarize", "Table-1-style cohort summary");
    add_common(summarize);

    auto* km = app.add_subcommand("km", "Kaplan-Meier curves and log-rank test");
    add_common(km);
    std::string strata;
    std::optional<double> cut;
    double cut_value = 0.0;
    km->add_option("--strata", strata, "stratification variable")->required();
    auto* cut_opt = km->add_option("--cut", cut_value, "cut point for numeric strata");

    auto* cox = app.add_subcommand("cox", "Cox proportional-hazards regression");
    add_common(cox);
    cox->add_option("--covariates", covariates, "comma-separated covariate list")
        ->delimiter(',');
    cox->add_option("--ties", ties, "ties method: efron | breslow")
        ->check(CLI::IsMember({"efron", "breslow"}));

    auto* compare = app.add_subcommand("compare", "parametric + Cox model comparison by AIC/BIC");
    add_common(compare);
    compare->add_option("--covariates", covariates, "comma-separated covariate list")
        ->delimiter(',');
    compare->add_option("--ties", ties, "ties method for the Cox entry")
        ->check(CLI::IsMember({"efron", "breslow"}));
    std::vector<std::string> families;
    compare->add_option("--families", families,
                        "restrict to these families (exponential,weibull,loglogistic)")
        ->delimiter(',');

    auto* score = app.add_subcommand("score", "score patients with a fitted model");
    add_common(score);
    std::string model_file;
    score->add_option("--model", model_file,
                      "model JSON (cox or logistic export); omitted: fit the log-odds "
                      "model on --input first");
    score->add_option("--covariates", covariates, "covariates for an in-run log-odds fit")
        ->delimiter(',');
    score->add_option("--horizon", config.horizon_months,
                      "horizon in months for the log-odds model (default 60)");
    score->add_option("--bins", config.bins, "histogram bin count (default 20)");
    score->add_option("--ridge", config.ridge, "ridge penalty, separation rescue only");

    auto* synth = app.add_subcommand("synth", "generate a synthetic cohort with known truth");
    std::string spec_file;
    std::string synth_out = ".";
    synth->add_option("--spec", spec_file, "synth spec JSON")->required();
    synth->add_option("--out-dir", synth_out, "output directory (default .)");

    CLI11_PARSE(app, argc, argv);

    config.policy = survkit::parse_event_policy(policy);
    config.ties = survkit::parse_ties_method(ties);
    config.covariates = covariates;
    config.figures = !no_figures;

    return sp::run([&] {
        if (summarize->parsed()) {
            sp::cmd_summarize(config);
        } else if (km->parsed()) {
            if (cut_opt->count() > 0) cut = cut_value;
            sp::cmd_km(config, strata, cut);
        } else if (cox->parsed()) {
            sp::cmd_cox(config);
        } else if (compare->parsed()) {
            sp::cmd_compare(config, families);
        } else if (score->parsed()) {
            sp::cmd_score(config, model_file);
        } else if (synth->parsed()) {
            sp::cmd_synth(spec_file, synth_out);
        }
    });
}
