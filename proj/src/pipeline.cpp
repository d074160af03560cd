#include "survkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "survkit/errors.hpp"
#include "survkit/eval.hpp"
#include "survkit/figures.hpp"
#include "survkit/km.hpp"
#include "survkit/logodds.hpp"
#include "survkit/numfmt.hpp"
#include "survkit/parametric.hpp"
#include "survkit/synth.hpp"

#include <nlohmann/json.hpp>

namespace survkit::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kDefaultCovariates(kCovariateNames.begin(),
                                                  kCovariateNames.end());

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open input file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Collects output files and warnings; writes run_manifest.json on finish.
// Only basenames are recorded so runs into different directories stay
// byte-identical.
struct Emitter {
    fs::path dir;
    std::string command;
    json flags = json::object();
    std::vector<std::string> outputs;
    std::vector<std::string> warnings;

    Emitter(const std::string& out_dir, std::string cmd) : dir(out_dir), command(std::move(cmd)) {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw SchemaError("cannot create output directory: " + out_dir);
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw SchemaError("cannot write output file: " + (dir / name).string());
        out << content;
        outputs.push_back(name);
    }

    void warn(const std::string& message) { warnings.push_back(message); }

    void finish() {
        json manifest;
        manifest["command"] = command;
        manifest["version"] = kVersion;
        manifest["flags"] = flags;
        manifest["outputs"] = outputs;
        manifest["warnings"] = warnings;
        write("run_manifest.json", manifest.dump(2) + "\n");
    }
};

std::vector<PatientRecord> load_records(const RunConfig& config, Emitter& emit) {
    ParseResult parsed = parse_cohort(read_file(config.input_path), {config.strict});
    emit.flags["input"] = fs::path(config.input_path).filename().string();
    emit.flags["policy"] = to_string(config.policy);
    emit.flags["strict"] = config.strict;
    if (!parsed.rejected.empty())
        emit.warn(std::to_string(parsed.rejected.size()) + " row(s) rejected at parse");
    return std::move(parsed.records);
}

std::string slugify(const std::string& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        // comparison operators in cut labels must survive slugging, or the
        // two strata collide on one filename
        if (c == '<' && i + 1 < s.size() && s[i + 1] == '=') {
            out += "_le_";
            ++i;
        } else if (c == '>') {
            out += "_gt_";
        } else if (std::isalnum(static_cast<unsigned char>(c))) {
            out += static_cast<char>(std::tolower(c));
        } else if (!out.empty() && out.back() != '_') {
            out += '_';
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    std::string collapsed;
    for (char c : out) {
        if (c == '_' && !collapsed.empty() && collapsed.back() == '_') continue;
        collapsed += c;
    }
    return collapsed;
}

json summary_to_json(const CohortSummary& summary) {
    json j;
    j["cohort_size"] = summary.cohort_size;
    auto groups = json::array();
    for (const auto& g : summary.groups)
        groups.push_back({{"outcome", to_string(g.outcome)}, {"n", g.n}});
    j["groups"] = groups;
    auto empty = json::array();
    for (Outcome o : summary.empty_groups) empty.push_back(to_string(o));
    j["empty_groups"] = empty;
    auto rows = json::array();
    for (const auto& r : summary.rows) {
        json row;
        row["variable"] = r.variable;
        row["kind"] = r.continuous ? "continuous" : "binary";
        row["test"] = r.test;
        row["p_value"] = std::isnan(r.p_value) ? json(nullptr) : json(r.p_value);
        auto per_group = json::array();
        for (std::size_t g = 0; g < summary.groups.size(); ++g) {
            json cell;
            cell["n_missing"] = r.n_missing[g];
            if (r.continuous) {
                cell["median"] = std::isnan(r.median[g]) ? json(nullptr) : json(r.median[g]);
                cell["q1"] = std::isnan(r.q1[g]) ? json(nullptr) : json(r.q1[g]);
                cell["q3"] = std::isnan(r.q3[g]) ? json(nullptr) : json(r.q3[g]);
            } else {
                cell["proportion"] =
                    std::isnan(r.proportion[g]) ? json(nullptr) : json(r.proportion[g]);
            }
            per_group.push_back(cell);
        }
        row["per_group"] = per_group;
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

std::string summary_to_csv(const CohortSummary& summary) {
    std::string out = "variable";
    for (const auto& g : summary.groups) {
        out += ',';
        out += to_string(g.outcome);
        out += " (n = " + std::to_string(g.n) + ")";
    }
    out += ",p_value\n";
    auto pct = [](double p) {
        std::string s = num_fixed(p * 100.0, 1);
        if (s.size() > 2 && s.compare(s.size() - 2, 2, ".0") == 0) s.erase(s.size() - 2);
        return s + "%";
    };
    for (const auto& r : summary.rows) {
        out += r.variable;
        for (std::size_t g = 0; g < summary.groups.size(); ++g) {
            out += ',';
            if (r.continuous) {
                if (!std::isnan(r.median[g]))
                    out += num_compact(r.median[g]) + " (" + num_compact(r.q1[g]) + " - " +
                           num_compact(r.q3[g]) + ")";
            } else {
                if (!std::isnan(r.proportion[g])) out += pct(r.proportion[g]);
            }
        }
        out += ',';
        out += std::isnan(r.p_value) ? "" : pvalue_to_string(r.p_value);
        out += '\n';
    }
    return out;
}

json logrank_to_json(const LogRankResult& lr) {
    json j;
    j["chi_square"] = lr.chi_square;
    j["degrees_of_freedom"] = lr.degrees_of_freedom;
    j["p_value"] = lr.p_value;
    auto groups = json::array();
    for (const auto& g : lr.groups)
        groups.push_back({{"label", g.label},
                          {"n", g.n},
                          {"observed", g.observed},
                          {"expected", g.expected}});
    j["groups"] = groups;
    return j;
}

json gof_to_json(const GofReport& gof) {
    auto test = [](const GofTest& t) {
        return json{{"statistic", t.statistic}, {"df", t.df}, {"p_value", t.p_value}};
    };
    json j;
    j["likelihood_ratio"] = test(gof.likelihood_ratio);
    j["wald"] = test(gof.wald);
    if (gof.score) j["score"] = test(*gof.score);
    else j["score"] = {{"unavailable", gof.score_note}};
    return j;
}

}  // namespace

const std::vector<std::string>& RunConfig::covariate_spec() const {
    return covariates.empty() ? kDefaultCovariates : covariates;
}

void cmd_summarize(const RunConfig& config) {
    Emitter emit(config.out_dir, "summarize");
    auto records = load_records(config, emit);
    if (records.empty()) throw DegenerateDataError("empty cohort: no valid records");
    CohortSummary summary = summarize(records);
    emit.write("summary.csv", summary_to_csv(summary));
    emit.write("summary.json", summary_to_json(summary).dump(2) + "\n");
    for (Outcome o : summary.empty_groups)
        emit.warn(std::string("outcome group absent: ") + to_string(o));
    emit.finish();
}

void cmd_km(const RunConfig& config, const std::string& strata_variable,
            std::optional<double> cut_point) {
    Emitter emit(config.out_dir, "km");
    emit.flags["strata"] = strata_variable;
    if (cut_point) emit.flags["cut"] = *cut_point;

    const bool is_surgery = strata_variable == "surgery";
    if (!is_surgery &&
        std::find(kCovariateNames.begin(), kCovariateNames.end(), strata_variable) ==
            kCovariateNames.end())
        throw ConfigError("unknown strata variable: " + strata_variable);
    const bool numeric = strata_variable == "age_years" || strata_variable == "tumor_size_mm";
    if (numeric && !cut_point)
        throw ConfigError("strata variable " + strata_variable + " requires --cut");

    auto records = load_records(config, emit);
    if (records.empty()) throw DegenerateDataError("empty cohort: no valid records");

    // label per record; records missing the strata variable are excluded
    std::vector<double> time;
    std::vector<int> event;
    std::vector<std::string> labels;
    SampleSet all = apply_event_policy(records, config.policy);
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string label;
        const auto& r = records[i];
        if (is_surgery) {
            if (!r.surgery) { ++skipped; continue; }
            label = std::string("surgery=") + to_string(*r.surgery);
        } else if (numeric) {
            const auto& v = strata_variable == "age_years" ? r.age_years : r.tumor_size_mm;
            if (!v) { ++skipped; continue; }
            label = *v <= *cut_point ? strata_variable + "<=" + num_compact(*cut_point)
                                     : strata_variable + ">" + num_compact(*cut_point);
        } else {
            DesignMatrix dm = design_matrix({r}, {strata_variable});
            if (dm.rows.empty()) { ++skipped; continue; }
            label = strata_variable + "=" + (dm.X(0, 0) != 0.0 ? "1" : "0");
        }
        time.push_back(all.time[i]);
        event.push_back(all.event[i]);
        labels.push_back(std::move(label));
    }
    if (skipped) emit.warn(std::to_string(skipped) + " record(s) missing " + strata_variable);
    if (time.empty()) throw DegenerateDataError("no records carry " + strata_variable);

    auto curves = km_stratified(time, event, labels);
    std::vector<figures::KmSeries> series;
    for (const auto& [label, curve] : curves) {
        emit.write("km_" + slugify(label) + ".csv", km_to_csv(curve));
        emit.write("km_" + slugify(label) + ".json", km_to_json(curve));
        figures::KmSeries s;
        s.label = label;
        s.curve = curve;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == label) s.times.push_back(time[i]);
        series.push_back(std::move(s));
    }

    std::string subtitle;
    if (curves.size() >= 2) {
        LogRankResult lr = logrank_test(time, event, labels);
        emit.write("logrank.json", logrank_to_json(lr).dump(2) + "\n");
        subtitle = "log-rank chi-square " + num_fixed(lr.chi_square, 2) + " (df " +
                   std::to_string(lr.degrees_of_freedom) + "), p " +
                   pvalue_to_string(lr.p_value);
    } else {
        json skip;
        skip["skipped"] = "single stratum; log-rank requires >= 2 groups";
        emit.write("logrank.json", skip.dump(2) + "\n");
        emit.warn("log-rank skipped: single stratum");
    }

    if (config.figures)
        emit.write("km.svg",
                   figures::km_panel(series, "Survival by " + strata_variable, subtitle));
    emit.finish();
}

void cmd_cox(const RunConfig& config) {
    Emitter emit(config.out_dir, "cox");
    emit.flags["ties"] = to_string(config.ties);
    emit.flags["covariates"] = config.covariate_spec();

    auto records = load_records(config, emit);
    if (records.empty()) throw DegenerateDataError("empty cohort: no valid records");

    SampleSet samples = make_samples(records, config.policy, config.covariate_spec());
    if (samples.n() < records.size())
        emit.warn(std::to_string(records.size() - samples.n()) +
                  " record(s) dropped: incomplete covariates");
    if (samples.n_events() < 2)
        throw DegenerateDataError("need >= 2 events after policy application");

    CoxOptions options;
    options.ties = config.ties;
    CoxFit fit = cox_fit(samples, options);
    emit.write("cox_fit.json", cox_fit_to_json(fit));
    if (!fit.converged) {
        emit.finish();
        throw NotConvergedError("cox fit did not converge after " +
                                std::to_string(fit.iterations) + " iterations");
    }

    HazardRatioTable table = hazard_ratios(fit);
    emit.write("hazard_ratios.csv", hazard_ratios_to_csv(table));
    emit.write("gof.json", gof_to_json(gof_tests(fit, samples)).dump(2) + "\n");
    if (config.figures)
        emit.write("forest.svg", figures::forest_plot(table, "Hazard ratios"));
    emit.finish();
}

void cmd_compare(const RunConfig& config, const std::vector<std::string>& families) {
    Emitter emit(config.out_dir, "compare");
    emit.flags["covariates"] = config.covariate_spec();

    auto records = load_records(config, emit);
    if (records.empty()) throw DegenerateDataError("empty cohort: no valid records");

    SampleSet samples = make_samples(records, config.policy, config.covariate_spec());
    if (samples.n() == 0) throw DegenerateDataError("no complete-case records");

    std::vector<Family> wanted;
    if (families.empty()) {
        wanted = {Family::exponential, Family::weibull, Family::loglogistic};
    } else {
        for (const auto& f : families) wanted.push_back(parse_family(f));
    }
    emit.flags["families"] = [&] {
        std::vector<std::string> names;
        for (Family f : wanted) names.emplace_back(to_string(f));
        return names;
    }();

    std::vector<ModelEntry> entries;
    for (Family family : wanted) {
        ParametricFit fit = fit_parametric(samples, family);
        emit.write(std::string("parametric_") + to_string(family) + ".json",
                   parametric_fit_to_json(fit));
        if (!fit.converged)
            emit.warn(std::string(to_string(family)) + " fit did not converge");
        entries.push_back({to_string(family), fit.loglik, fit.k(), fit.n});
    }

    if (samples.covariates.cols() > 0 && samples.n_events() >= 2) {
        // the Cox entry uses the partial likelihood and is labeled as such:
        // comparing it against full likelihoods is indicative only
        CoxOptions options;
        options.ties = config.ties;
        try {
            CoxFit fit = cox_fit(samples, options);
            if (fit.converged) {
                entries.push_back({"cox (partial)", fit.loglik_full,
                                   static_cast<int>(fit.beta.size()), fit.n});
            } else {
                emit.warn("cox fit did not converge; excluded from the comparison");
            }
        } catch (const Error& e) {
            emit.warn(std::string("cox fit failed: ") + e.what());
        }
    }

    emit.write("model_comparison.csv", ranking_to_csv(compare_models(entries)));
    emit.finish();
}

void cmd_score(const RunConfig& config, const std::string& model_file) {
    Emitter emit(config.out_dir, "score");
    auto records = load_records(config, emit);

    // no model file: fit the log-odds model on this cohort, then score it
    std::string kind;
    CoxFit cox_model;
    LogisticFit logistic_model;
    if (model_file.empty()) {
        if (records.empty()) throw DegenerateDataError("empty cohort: no valid records");
        LogisticOptions options;
        options.ridge = config.ridge;
        logistic_model = fit_log_odds_model(records, config.policy, config.covariate_spec(),
                                            config.horizon_months, options);
        emit.write("logistic_fit.json", logistic_fit_to_json(logistic_model));
        if (!logistic_model.converged)
            throw NotConvergedError("log-odds fit did not converge");
        kind = "logistic";
        emit.flags["model"] = "fitted in-run";
        emit.flags["horizon_months"] = config.horizon_months;
    } else {
        std::string text = read_file(model_file);
        json j;
        try {
            j = json::parse(text);
        } catch (const json::exception& e) {
            throw SchemaError(std::string("model file: invalid JSON: ") + e.what());
        }
        kind = j.value("kind", std::string());
        if (kind.empty()) kind = j.contains("intercept") ? "logistic" : "cox";
        if (kind == "cox") cox_model = cox_fit_from_json(text);
        else if (kind == "logistic") logistic_model = logistic_fit_from_json(text);
        else throw SchemaError("model file: unknown kind: " + kind);
        emit.flags["model"] = fs::path(model_file).filename().string();
    }

    const auto& names = kind == "cox" ? cox_model.covariate_names
                                      : logistic_model.covariate_names;
    // every model covariate must exist in the patient schema
    std::string missing;
    for (const auto& nm : names) {
        if (std::find(kCovariateNames.begin(), kCovariateNames.end(), nm) ==
            kCovariateNames.end()) {
            if (!missing.empty()) missing += ", ";
            missing += nm;
        }
    }
    if (!missing.empty())
        throw ModelMismatchError("model covariates absent from the patient schema: " + missing);

    DesignMatrix dm = design_matrix(records, names);
    if (dm.rows.size() < records.size())
        emit.warn(std::to_string(records.size() - dm.rows.size()) +
                  " record(s) skipped: incomplete covariates");

    std::string csv;
    if (kind == "cox") {
        csv = "id,linear_predictor,relative_hazard\n";
        for (std::size_t r = 0; r < dm.rows.size(); ++r) {
            RiskPrediction pred =
                predict_risk(cox_model, dm.X.row(static_cast<Eigen::Index>(r)).transpose());
            csv += records[dm.rows[r]].id;
            csv += ',';
            csv += num_to_string(pred.linear_predictor);
            csv += ',';
            csv += num_to_string(pred.relative_hazard);
            csv += '\n';
        }
        emit.write("scores.csv", csv);
    } else {
        std::optional<BinarizeResult> bin;
        if (!records.empty())
            bin = binarize_outcome(records, logistic_model.horizon_months, config.policy);
        csv = "id,log_odds,probability,label_used\n";
        for (std::size_t r = 0; r < dm.rows.size(); ++r) {
            LogOddsScore s = log_odds_score(
                logistic_model, dm.X.row(static_cast<Eigen::Index>(r)).transpose());
            std::size_t rec = dm.rows[r];
            csv += records[rec].id;
            csv += ',';
            csv += num_to_string(s.log_odds);
            csv += ',';
            csv += num_to_string(s.probability);
            csv += ',';
            if (bin && bin->included[rec]) csv += std::to_string(bin->labels[rec]);
            csv += '\n';
        }
        emit.write("scores.csv", csv);
        if (!records.empty()) {
            LogOddsHistogram hist =
                log_odds_distribution(logistic_model, records, config.policy, config.bins);
            emit.write("log_odds_hist.csv", histogram_to_csv(hist));
            if (config.figures)
                emit.write("log_odds_hist.svg",
                           figures::log_odds_histogram(hist, "Distribution of log odds of survival"));
        }
    }
    emit.finish();
}

void cmd_synth(const std::string& spec_file, const std::string& out_dir) {
    Emitter emit(out_dir, "synth");
    synth::SynthSpec spec = synth::spec_from_json(read_file(spec_file));
    emit.flags["spec"] = fs::path(spec_file).filename().string();
    emit.flags["seed"] = spec.seed;
    auto records = synth::generate_cohort(spec);
    emit.write("cohort.csv", encode_cohort(records));
    emit.write("truth.json", synth::spec_to_json(spec));
    emit.finish();
}

int run(const std::function<void()>& body) {
    try {
        body();
        return kExitOk;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const DegenerateDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerate;
    } catch (const NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNotConverged;
    } catch (const ModelMismatchError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace survkit::pipeline
