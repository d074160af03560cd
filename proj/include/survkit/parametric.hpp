#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <utility>

#include "survkit/dataset.hpp"

namespace survkit {

enum class Family { exponential, weibull, loglogistic };

Family parse_family(std::string_view name);
const char* to_string(Family f);

// lambda: scale, gamma: shape; exponential ignores gamma (fixed at 1).
struct ParametricParams {
    double lambda = 1.0;
    double gamma = 1.0;
};

// S(t): Weibull exp(-(t/lambda)^gamma), log-logistic 1/(1+(t/lambda)^gamma),
// exponential = Weibull with gamma = 1.
double survival_function(Family family, const ParametricParams& params, double t);
double density_function(Family family, const ParametricParams& params, double t);
double hazard_function(Family family, const ParametricParams& params, double t);

// Censored log-likelihood sum(events) log f + sum(censored) log S and its
// gradient in theta = (log lambda[, log gamma]).
struct CensoredLik {
    double value = 0.0;
    Eigen::VectorXd gradient;
};

CensoredLik censored_loglik(Family family, const std::vector<double>& time,
                            const std::vector<int>& event, const Eigen::VectorXd& theta);

struct ParametricFit {
    Family family = Family::exponential;
    ParametricParams params;
    double loglik = 0.0;
    double aic = 0.0;
    double bic = 0.0;
    bool converged = false;
    int iterations = 0;
    std::size_t n = 0;
    std::size_t n_events = 0;

    int k() const { return family == Family::exponential ? 1 : 2; }
};

struct ParametricOptions {
    double grad_tol = 1e-9;
    double loglik_tol = 1e-12;
    int max_iter = 100;
    int max_halvings = 20;
};

// Newton in (log lambda, log gamma) from lambda = median(time), gamma = 1.
ParametricFit fit_parametric(const SampleSet& samples, Family family,
                             const ParametricOptions& options = {});

// aic = 2k - 2 loglik, bic = log(n) k - 2 loglik (natural log).
std::pair<double, double> information_criteria(double loglik, int k, double n);

std::string parametric_fit_to_json(const ParametricFit& fit);

}  // namespace survkit
