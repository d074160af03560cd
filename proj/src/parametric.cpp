#include "survkit/parametric.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "survkit/errors.hpp"
#include "survkit/stats.hpp"

#include <nlohmann/json.hpp>

namespace survkit {

Family parse_family(std::string_view name) {
    if (name == "exponential") return Family::exponential;
    if (name == "weibull") return Family::weibull;
    if (name == "loglogistic" || name == "log-logistic") return Family::loglogistic;
    throw ConfigError("unknown family: " + std::string(name));
}

const char* to_string(Family f) {
    switch (f) {
        case Family::exponential: return "exponential";
        case Family::weibull: return "weibull";
        case Family::loglogistic: return "loglogistic";
    }
    return "?";
}

namespace {

void check_params(const ParametricParams& p) {
    if (!(p.lambda > 0.0) || !(p.gamma > 0.0))
        throw std::domain_error("parametric: scale and shape must be positive");
}

// logistic(x) = 1/(1+exp(-x)), overflow-safe
double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1+exp(x)), overflow-safe
double softplus(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

double survival_function(Family family, const ParametricParams& params, double t) {
    check_params(params);
    if (t < 0.0) throw std::domain_error("survival_function: t must be nonnegative");
    if (t == 0.0) return 1.0;
    double gamma = family == Family::exponential ? 1.0 : params.gamma;
    double gw = gamma * (std::log(t) - std::log(params.lambda));
    switch (family) {
        case Family::exponential:
        case Family::weibull:
            return std::exp(-std::exp(gw));
        case Family::loglogistic:
            return logistic(-gw);  // 1/(1+(t/lambda)^gamma)
    }
    return 0.0;
}

double density_function(Family family, const ParametricParams& params, double t) {
    check_params(params);
    if (t < 0.0) throw std::domain_error("density_function: t must be nonnegative");
    if (t == 0.0) {
        double gamma = family == Family::exponential ? 1.0 : params.gamma;
        if (gamma > 1.0) return 0.0;
        if (gamma == 1.0) return 1.0 / params.lambda;
        return std::numeric_limits<double>::infinity();
    }
    double gamma = family == Family::exponential ? 1.0 : params.gamma;
    double w = std::log(t) - std::log(params.lambda);
    double gw = gamma * w;
    double log_prefix = std::log(gamma / params.lambda) + (gamma - 1.0) * w;
    switch (family) {
        case Family::exponential:
        case Family::weibull:
            return std::exp(log_prefix - std::exp(gw));
        case Family::loglogistic:
            return std::exp(log_prefix - 2.0 * softplus(gw));
    }
    return 0.0;
}

double hazard_function(Family family, const ParametricParams& params, double t) {
    double s = survival_function(family, params, t);
    if (s <= 0.0) return std::numeric_limits<double>::infinity();
    return density_function(family, params, t) / s;
}

CensoredLik censored_loglik(Family family, const std::vector<double>& time,
                            const std::vector<int>& event, const Eigen::VectorXd& theta) {
    if (time.size() != event.size())
        throw std::invalid_argument("censored_loglik: time/event length mismatch");
    const int dim = family == Family::exponential ? 1 : 2;
    if (theta.size() != dim)
        throw std::invalid_argument("censored_loglik: theta dimension mismatch");

    const double a = theta[0];                       // log lambda
    const double gamma = dim == 2 ? std::exp(theta[1]) : 1.0;

    CensoredLik out;
    out.gradient = Eigen::VectorXd::Zero(dim);

    for (std::size_t i = 0; i < time.size(); ++i) {
        const double t = time[i];
        if (!(t > 0.0)) throw std::invalid_argument("censored_loglik: times must be positive");
        const double w = std::log(t) - a;
        const double gw = gamma * w;

        if (family == Family::loglogistic) {
            const double q = logistic(gw);       // z/(1+z)
            const double log1pz = softplus(gw);  // log(1+z)
            if (event[i]) {
                out.value += theta[1] - a + (gamma - 1.0) * w - 2.0 * log1pz;
                out.gradient[0] += gamma * (2.0 * q - 1.0);
                out.gradient[1] += 1.0 + gw * (1.0 - 2.0 * q);
            } else {
                out.value += -log1pz;
                out.gradient[0] += gamma * q;
                out.gradient[1] += -gw * q;
            }
        } else {
            const double z = std::exp(gw);       // (t/lambda)^gamma
            if (event[i]) {
                out.value += (dim == 2 ? theta[1] : 0.0) - a + (gamma - 1.0) * w - z;
                out.gradient[0] += gamma * (z - 1.0);
                if (dim == 2) out.gradient[1] += 1.0 + gw * (1.0 - z);
            } else {
                out.value += -z;
                out.gradient[0] += gamma * z;
                if (dim == 2) out.gradient[1] += -gw * z;
            }
        }
    }
    return out;
}

std::pair<double, double> information_criteria(double loglik, int k, double n) {
    if (k < 0) throw std::invalid_argument("information_criteria: k must be nonnegative");
    if (!(n >= 1.0)) throw std::invalid_argument("information_criteria: n must be >= 1");
    double aic = 2.0 * k - 2.0 * loglik;
    double bic = std::log(n) * k - 2.0 * loglik;
    return {aic, bic};
}

ParametricFit fit_parametric(const SampleSet& samples, Family family,
                             const ParametricOptions& options) {
    const std::size_t n = samples.n();
    if (n == 0) throw DegenerateDataError("fit_parametric: no samples");
    const std::size_t n_events = samples.n_events();
    if (n_events < 2) throw DegenerateDataError("fit_parametric: need >= 2 events");

    const int dim = family == Family::exponential ? 1 : 2;
    Eigen::VectorXd theta(dim);
    theta[0] = std::log(stats::median(samples.time));
    if (dim == 2) theta[1] = 0.0;

    CensoredLik cur = censored_loglik(family, samples.time, samples.event, theta);

    // Newton with a finite-difference Hessian of the analytic gradient
    auto numeric_hessian = [&](const Eigen::VectorXd& th) {
        Eigen::MatrixXd h(dim, dim);
        for (int j = 0; j < dim; ++j) {
            double step = 1e-6 * std::max(1.0, std::fabs(th[j]));
            Eigen::VectorXd hi = th, lo = th;
            hi[j] += step;
            lo[j] -= step;
            Eigen::VectorXd ghi = censored_loglik(family, samples.time, samples.event, hi).gradient;
            Eigen::VectorXd glo = censored_loglik(family, samples.time, samples.event, lo).gradient;
            h.col(j) = (ghi - glo) / (2.0 * step);
        }
        return Eigen::MatrixXd((h + h.transpose()) / 2.0);
    };

    bool converged = false;
    int iterations = 0;
    while (iterations < options.max_iter) {
        if (cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol) {
            converged = true;
            break;
        }
        ++iterations;

        Eigen::MatrixXd info = -numeric_hessian(theta);
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd step = ldlt.solve(cur.gradient);
        if (ldlt.info() != Eigen::Success || !step.allFinite())
            throw NotConvergedError("fit_parametric: singular information matrix");

        double old_value = cur.value;
        Eigen::VectorXd candidate;
        CensoredLik next;
        int halvings = 0;
        while (true) {
            candidate = theta + step;
            next = censored_loglik(family, samples.time, samples.event, candidate);
            if ((std::isfinite(next.value) && next.value >= old_value) ||
                halvings >= options.max_halvings)
                break;
            step *= 0.5;
            ++halvings;
        }
        if (!std::isfinite(next.value) || next.value < old_value) {
            if (std::isfinite(next.value) &&
                std::fabs(next.value - old_value) <=
                    options.loglik_tol * std::fabs(old_value))
                converged = true;
            break;
        }

        theta = candidate;
        cur = next;
        if (old_value != 0.0 &&
            std::fabs(cur.value - old_value) < options.loglik_tol * std::fabs(old_value)) {
            converged = true;
            break;
        }
    }
    if (!converged && cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol)
        converged = true;

    ParametricFit fit;
    fit.family = family;
    fit.params.lambda = std::exp(theta[0]);
    fit.params.gamma = dim == 2 ? std::exp(theta[1]) : 1.0;
    fit.loglik = cur.value;
    auto [aic, bic] = information_criteria(cur.value, dim, static_cast<double>(n));
    fit.aic = aic;
    fit.bic = bic;
    fit.converged = converged;
    fit.iterations = iterations;
    fit.n = n;
    fit.n_events = n_events;
    return fit;
}

std::string parametric_fit_to_json(const ParametricFit& fit) {
    nlohmann::json j;
    j["family"] = to_string(fit.family);
    nlohmann::json params;
    params["lambda"] = fit.params.lambda;
    if (fit.family != Family::exponential) params["gamma"] = fit.params.gamma;
    j["params"] = params;
    j["loglik"] = fit.loglik;
    j["aic"] = fit.aic;
    j["bic"] = fit.bic;
    j["converged"] = fit.converged;
    j["n"] = fit.n;
    j["n_events"] = fit.n_events;
    return j.dump(2) + "\n";
}

}  // namespace survkit
