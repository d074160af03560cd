#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "survkit/cox.hpp"
#include "survkit/dataset.hpp"
#include "survkit/eval.hpp"
#include "survkit/km.hpp"
#include "survkit/logodds.hpp"
#include "survkit/parametric.hpp"
#include "survkit/stats.hpp"
#include "survkit/synth.hpp"

namespace py = pybind11;
using namespace survkit;

namespace {

SampleSet build_samples(const std::vector<double>& time, const std::vector<int>& event,
                        const Eigen::MatrixXd& covariates,
                        const std::vector<std::string>& names) {
    SampleSet s;
    s.time = time;
    s.event = event;
    s.covariates = covariates;
    s.covariate_names = names;
    s.source_rows.resize(time.size());
    for (std::size_t i = 0; i < time.size(); ++i) s.source_rows[i] = i;
    return s;
}

}  // namespace

PYBIND11_MODULE(_survkit, m) {
    m.doc() = "survival analysis core: Kaplan-Meier, Cox regression, parametric "
              "fits, concordance, log-odds models, synthetic cohorts";

    py::class_<KMCurve>(m, "KMCurve")
        .def_readonly("event_times", &KMCurve::event_times)
        .def_readonly("survival", &KMCurve::survival)
        .def_readonly("at_risk", &KMCurve::at_risk)
        .def_readonly("deaths", &KMCurve::deaths)
        .def_readonly("se_greenwood", &KMCurve::se_greenwood)
        .def_readonly("ci_lower", &KMCurve::ci_lower)
        .def_readonly("ci_upper", &KMCurve::ci_upper)
        .def_readonly("max_observed_time", &KMCurve::max_observed_time)
        .def_readonly("n", &KMCurve::n)
        .def_readonly("n_events", &KMCurve::n_events);

    m.def(
        "km_fit",
        [](const std::vector<double>& time, const std::vector<int>& event) {
            return km_fit(time, event);
        },
        py::arg("time"), py::arg("event"));

    m.def(
        "survival_at",
        [](const KMCurve& curve, double t) {
            SurvivalValue v = survival_at(curve, t);
            return py::make_tuple(v.value, v.extrapolated);
        },
        py::arg("curve"), py::arg("t"), "returns (value, extrapolated)");

    m.def(
        "logrank_test",
        [](const std::vector<double>& time, const std::vector<int>& event,
           const std::vector<std::string>& labels) {
            LogRankResult r = logrank_test(time, event, labels);
            py::dict d;
            d["chi_square"] = r.chi_square;
            d["degrees_of_freedom"] = r.degrees_of_freedom;
            d["p_value"] = r.p_value;
            py::list groups;
            for (const auto& g : r.groups) {
                py::dict gd;
                gd["label"] = g.label;
                gd["n"] = g.n;
                gd["observed"] = g.observed;
                gd["expected"] = g.expected;
                groups.append(gd);
            }
            d["groups"] = groups;
            return d;
        },
        py::arg("time"), py::arg("event"), py::arg("labels"));

    py::class_<CoxFit>(m, "CoxFit")
        .def_readonly("beta", &CoxFit::beta)
        .def_readonly("covariance", &CoxFit::covariance)
        .def_readonly("loglik_null", &CoxFit::loglik_null)
        .def_readonly("loglik_full", &CoxFit::loglik_full)
        .def_readonly("n", &CoxFit::n)
        .def_readonly("n_events", &CoxFit::n_events)
        .def_readonly("iterations", &CoxFit::iterations)
        .def_readonly("converged", &CoxFit::converged)
        .def_readonly("covariate_names", &CoxFit::covariate_names)
        .def("to_json", &cox_fit_to_json);

    m.def(
        "cox_fit",
        [](const std::vector<double>& time, const std::vector<int>& event,
           const Eigen::MatrixXd& covariates, const std::vector<std::string>& names,
           const std::string& ties) {
            CoxOptions options;
            options.ties = parse_ties_method(ties);
            return cox_fit(build_samples(time, event, covariates, names), options);
        },
        py::arg("time"), py::arg("event"), py::arg("covariates"), py::arg("names"),
        py::arg("ties") = "efron");

    m.def(
        "partial_loglik",
        [](const std::vector<double>& time, const std::vector<int>& event,
           const Eigen::MatrixXd& covariates, const Eigen::VectorXd& beta,
           const std::string& ties) {
            std::vector<std::string> names(static_cast<std::size_t>(covariates.cols()));
            PartialLikValue v = partial_loglik(build_samples(time, event, covariates, names),
                                               beta, parse_ties_method(ties));
            return py::make_tuple(v.value, v.gradient, v.hessian);
        },
        py::arg("time"), py::arg("event"), py::arg("covariates"), py::arg("beta"),
        py::arg("ties") = "efron", "returns (value, gradient, hessian)");

    m.def("hazard_ratios", [](const CoxFit& fit) {
        py::list rows;
        for (const auto& r : hazard_ratios(fit)) {
            py::dict d;
            d["variable"] = r.variable;
            d["coefficient"] = r.coefficient;
            d["hazard_ratio"] = r.hazard_ratio;
            d["se"] = r.se;
            d["p_value"] = r.p_value;
            d["ci_lower"] = r.ci_lower;
            d["ci_upper"] = r.ci_upper;
            rows.append(d);
        }
        return rows;
    });

    m.def(
        "predict_risk",
        [](const CoxFit& fit, const Eigen::VectorXd& x) {
            RiskPrediction p = predict_risk(fit, x);
            return py::make_tuple(p.linear_predictor, p.relative_hazard);
        },
        py::arg("fit"), py::arg("covariates"), "returns (linear_predictor, relative_hazard)");

    m.def(
        "breslow_baseline",
        [](const CoxFit& fit, const std::vector<double>& time, const std::vector<int>& event,
           const Eigen::MatrixXd& covariates) {
            std::vector<std::string> names(static_cast<std::size_t>(covariates.cols()));
            BaselineHazard b =
                breslow_baseline(fit, build_samples(time, event, covariates, names));
            return py::make_tuple(b.time, b.cumhaz);
        },
        py::arg("fit"), py::arg("time"), py::arg("event"), py::arg("covariates"),
        "returns (time, cumulative_hazard)");

    m.def(
        "gof_tests",
        [](const CoxFit& fit, const std::vector<double>& time, const std::vector<int>& event,
           const Eigen::MatrixXd& covariates) {
            std::vector<std::string> names = fit.covariate_names;
            GofReport g = gof_tests(fit, build_samples(time, event, covariates, names));
            py::dict d;
            auto test = [](const GofTest& t) {
                py::dict td;
                td["statistic"] = t.statistic;
                td["df"] = t.df;
                td["p_value"] = t.p_value;
                return td;
            };
            d["likelihood_ratio"] = test(g.likelihood_ratio);
            d["wald"] = test(g.wald);
            if (g.score) d["score"] = test(*g.score);
            else d["score"] = py::none();
            return d;
        },
        py::arg("fit"), py::arg("time"), py::arg("event"), py::arg("covariates"));

    m.def(
        "survival_function",
        [](const std::string& family, double scale, double shape, double t) {
            return survival_function(parse_family(family), {scale, shape}, t);
        },
        py::arg("family"), py::arg("scale"), py::arg("shape"), py::arg("t"));

    m.def(
        "fit_parametric",
        [](const std::vector<double>& time, const std::vector<int>& event,
           const std::string& family) {
            Eigen::MatrixXd empty(time.size(), 0);
            ParametricFit f = fit_parametric(build_samples(time, event, empty, {}),
                                             parse_family(family));
            py::dict d;
            d["family"] = to_string(f.family);
            d["lambda"] = f.params.lambda;
            d["gamma"] = f.params.gamma;
            d["loglik"] = f.loglik;
            d["aic"] = f.aic;
            d["bic"] = f.bic;
            d["converged"] = f.converged;
            d["n"] = f.n;
            d["n_events"] = f.n_events;
            return d;
        },
        py::arg("time"), py::arg("event"), py::arg("family"));

    m.def(
        "information_criteria",
        [](double loglik, int k, double n) {
            auto [aic, bic] = information_criteria(loglik, k, n);
            return py::make_tuple(aic, bic);
        },
        py::arg("loglik"), py::arg("k"), py::arg("n"), "returns (aic, bic)");

    m.def(
        "concordance_index",
        [](const std::vector<double>& time, const std::vector<int>& event,
           const std::vector<double>& scores) {
            ConcordanceResult r = concordance_index(time, event, scores);
            py::dict d;
            d["c_index"] = r.c_index;
            d["concordant"] = r.concordant;
            d["discordant"] = r.discordant;
            d["tied_risk"] = r.tied_risk;
            d["comparable_pairs"] = r.comparable_pairs;
            return d;
        },
        py::arg("time"), py::arg("event"), py::arg("risk_scores"));

    m.def(
        "compare_models",
        [](const std::vector<std::tuple<std::string, double, int, std::size_t>>& entries) {
            std::vector<ModelEntry> list;
            for (const auto& [label, loglik, k, n] : entries) list.push_back({label, loglik, k, n});
            py::list rows;
            for (const auto& r : compare_models(list)) {
                py::dict d;
                d["label"] = r.label;
                d["loglik"] = r.loglik;
                d["k"] = r.k;
                d["aic"] = r.aic;
                d["bic"] = r.bic;
                d["delta_aic"] = r.delta_aic;
                d["rank"] = r.rank;
                d["bic_rank"] = r.bic_rank;
                rows.append(d);
            }
            return rows;
        },
        py::arg("entries"), "entries: list of (label, loglik, k, n)");

    py::class_<LogisticFit>(m, "LogisticFit")
        .def_readonly("intercept", &LogisticFit::intercept)
        .def_readonly("beta", &LogisticFit::beta)
        .def_readonly("covariance", &LogisticFit::covariance)
        .def_readonly("loglik", &LogisticFit::loglik)
        .def_readonly("n_used", &LogisticFit::n_used)
        .def_readonly("horizon_months", &LogisticFit::horizon_months)
        .def_readonly("converged", &LogisticFit::converged)
        .def_readonly("covariate_names", &LogisticFit::covariate_names)
        .def("to_json", &logistic_fit_to_json);

    m.def(
        "logistic_fit",
        [](const Eigen::MatrixXd& features, const std::vector<int>& labels,
           const std::vector<std::string>& names, double ridge) {
            LogisticOptions options;
            options.ridge = ridge;
            return logistic_fit(features, labels, names, options);
        },
        py::arg("features"), py::arg("labels"), py::arg("names"), py::arg("ridge") = 0.0);

    m.def(
        "log_odds_score",
        [](const LogisticFit& fit, const Eigen::VectorXd& x) {
            LogOddsScore s = log_odds_score(fit, x);
            return py::make_tuple(s.log_odds, s.probability);
        },
        py::arg("fit"), py::arg("covariates"), "returns (log_odds, probability)");

    m.def(
        "generate_samples",
        [](const std::string& spec_json) {
            SampleSet s = synth::generate_samples(synth::spec_from_json(spec_json));
            return py::make_tuple(s.time, s.event, s.covariates, s.covariate_names);
        },
        py::arg("spec_json"), "returns (time, event, covariates, names)");

    m.def(
        "generate_cohort_csv",
        [](const std::string& spec_json) {
            auto spec = synth::spec_from_json(spec_json);
            return encode_cohort(synth::generate_cohort(spec));
        },
        py::arg("spec_json"));

    m.def(
        "load_cohort",
        [](const std::string& csv_text, const std::string& policy,
           const std::vector<std::string>& covariates, bool strict) {
            ParseResult parsed = parse_cohort(csv_text, {strict});
            std::vector<std::string> names =
                covariates.empty()
                    ? std::vector<std::string>(kCovariateNames.begin(), kCovariateNames.end())
                    : covariates;
            SampleSet s =
                make_samples(parsed.records, parse_event_policy(policy), names);
            py::dict d;
            d["time"] = s.time;
            d["event"] = s.event;
            d["covariates"] = s.covariates;
            d["names"] = s.covariate_names;
            py::list ids;
            for (std::size_t idx : s.source_rows) ids.append(parsed.records[idx].id);
            d["ids"] = ids;
            d["n_rejected"] = parsed.rejected.size();
            return d;
        },
        py::arg("csv_text"), py::arg("policy") = "overall",
        py::arg("covariates") = std::vector<std::string>{}, py::arg("strict") = false,
        "parse a cohort CSV and return analysis-ready arrays");

    m.def("chi_square_sf", &stats::chi_square_sf, py::arg("x"), py::arg("df"));
    m.def("normal_sf", &stats::normal_sf, py::arg("z"));

    m.attr("__version__") = "0.1.0";
}
