#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "survkit/dataset.hpp"

namespace survkit {

enum class TiesMethod { efron, breslow };

TiesMethod parse_ties_method(std::string_view name);
const char* to_string(TiesMethod m);

// Log partial likelihood with analytic first and second derivatives.
// hessian is the Hessian of the log likelihood (negative semi-definite).
struct PartialLikValue {
    double value = 0.0;
    Eigen::VectorXd gradient;
    Eigen::MatrixXd hessian;
};

// Efron and Breslow tie corrections; identical when event times are distinct.
PartialLikValue partial_loglik(const SampleSet& samples, const Eigen::VectorXd& beta,
                               TiesMethod ties);

struct CoxOptions {
    TiesMethod ties = TiesMethod::efron;
    double grad_tol = 1e-9;       // gradient max-norm at convergence
    double loglik_tol = 1e-12;    // fallback: relative log-likelihood change
    int max_iter = 100;
    int max_halvings = 20;
    double divergence_bound = 50.0;  // |beta| limit on the standardized scale
};

struct CoxFit {
    Eigen::VectorXd beta;          // original covariate scale
    Eigen::MatrixXd covariance;    // inverse observed information, original scale
    double loglik_null = 0.0;
    double loglik_full = 0.0;
    std::size_t n = 0;
    std::size_t n_events = 0;
    int iterations = 0;
    bool converged = false;
    TiesMethod ties_method = TiesMethod::efron;
    std::vector<std::string> covariate_names;
};

// Newton-Raphson from beta = 0 with step-halving. Covariates are centered
// and scaled internally for conditioning; beta and covariance are reported
// on the original scale.
CoxFit cox_fit(const SampleSet& samples, const CoxOptions& options = {});

struct HazardRatioRow {
    std::string variable;
    double coefficient = 0.0;
    double hazard_ratio = 1.0;  // exp(coefficient)
    double se = 0.0;
    double z = 0.0;
    double p_value = 1.0;       // two-sided Wald
    double ci_lower = 1.0;      // exp(coef -/+ 1.96 se), HR scale
    double ci_upper = 1.0;
};

using HazardRatioTable = std::vector<HazardRatioRow>;

HazardRatioTable hazard_ratios(const CoxFit& fit);

// Breslow estimator of the cumulative baseline hazard; reduces to the
// Nelson-Aalen increments d_i/n_i at beta = 0.
struct BaselineHazard {
    std::vector<double> time;      // distinct event times
    std::vector<double> cumhaz;    // nondecreasing
};

BaselineHazard breslow_baseline(const CoxFit& fit, const SampleSet& samples);

struct GofTest {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

struct GofReport {
    GofTest likelihood_ratio;
    GofTest wald;
    std::optional<GofTest> score;  // absent when the information at 0 is singular
    std::string score_note;
};

GofReport gof_tests(const CoxFit& fit, const SampleSet& samples);

struct RiskPrediction {
    double linear_predictor = 0.0;
    double relative_hazard = 1.0;  // exp(linear_predictor)
};

RiskPrediction predict_risk(const CoxFit& fit, const Eigen::VectorXd& covariates);

std::string cox_fit_to_json(const CoxFit& fit);
CoxFit cox_fit_from_json(const std::string& text);
std::string hazard_ratios_to_csv(const HazardRatioTable& table);

}  // namespace survkit
