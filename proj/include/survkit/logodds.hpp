#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string>
#include <vector>

#include "survkit/dataset.hpp"

namespace survkit {

// Horizon binarization: 1 = survived to the horizon, 0 = event before it.
// Subjects censored before the horizon are indeterminate and excluded.
struct BinarizeResult {
    std::vector<int> labels;        // one per record; meaningful where included
    std::vector<bool> included;
    std::size_t n_included = 0;
    std::size_t n_excluded_censored = 0;
};

BinarizeResult binarize_outcome(const std::vector<PatientRecord>& records,
                                double horizon_months, EventPolicy policy);

// Log-likelihood of a logistic model and its gradient over (intercept, beta).
struct LogisticLik {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

LogisticLik logistic_loglik(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            double intercept, const Eigen::VectorXd& beta);

struct LogisticOptions {
    double grad_tol = 1e-9;
    double loglik_tol = 1e-12;
    int max_iter = 100;
    int max_halvings = 20;
    double divergence_bound = 50.0;  // standardized scale
    double ridge = 0.0;              // separation rescue only; reported when nonzero
};

struct LogisticFit {
    double intercept = 0.0;
    Eigen::VectorXd beta;
    Eigen::MatrixXd covariance;      // (p+1)x(p+1), intercept first
    double loglik = 0.0;
    std::size_t n_used = 0;
    double horizon_months = 0.0;
    bool converged = false;
    int iterations = 0;
    std::vector<std::string> covariate_names;
    double ridge = 0.0;
};

// Maximum likelihood by iteratively reweighted least squares with
// step-halving; features standardized internally, estimates reported on the
// original scale.
LogisticFit logistic_fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                         const std::vector<std::string>& names,
                         const LogisticOptions& options = {});

// binarize + design matrix + logistic_fit on complete cases.
LogisticFit fit_log_odds_model(const std::vector<PatientRecord>& records, EventPolicy policy,
                               const std::vector<std::string>& covariate_spec,
                               double horizon_months, const LogisticOptions& options = {});

struct LogOddsScore {
    double log_odds = 0.0;
    double probability = 0.5;  // of survival to the horizon
};

LogOddsScore log_odds_score(const LogisticFit& fit, const Eigen::VectorXd& covariates);

struct LogOddsHistogram {
    std::vector<double> bin_edges;      // counts.size() + 1 edges
    std::vector<std::size_t> counts;
    double mean = 0.0;
    double sd = 0.0;
    std::size_t n_scored = 0;
    std::size_t n_excluded = 0;
};

// Scores every record that is included at the fit's horizon and has the
// fit's covariates; equal-width bins over [min, max] of the scores.
LogOddsHistogram log_odds_distribution(const LogisticFit& fit,
                                       const std::vector<PatientRecord>& records,
                                       EventPolicy policy, int bins);

std::string logistic_fit_to_json(const LogisticFit& fit);
LogisticFit logistic_fit_from_json(const std::string& text);
std::string histogram_to_csv(const LogOddsHistogram& hist);

}  // namespace survkit
