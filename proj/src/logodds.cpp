#include "survkit/logodds.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "survkit/errors.hpp"
#include "survkit/numfmt.hpp"

#include <nlohmann/json.hpp>

namespace survkit {

namespace {

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1+exp(x)) without overflow
double softplus(double x) {
    if (x > 30.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

}  // namespace

BinarizeResult binarize_outcome(const std::vector<PatientRecord>& records,
                                double horizon_months, EventPolicy policy) {
    if (!(horizon_months > 0.0))
        throw std::domain_error("binarize_outcome: horizon must be positive");

    SampleSet s = apply_event_policy(records, policy);
    BinarizeResult out;
    out.labels.resize(records.size(), 0);
    out.included.resize(records.size(), false);
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (s.time[i] >= horizon_months) {
            out.labels[i] = 1;  // survived to the horizon (event later or censored later)
            out.included[i] = true;
            ++out.n_included;
        } else if (s.event[i]) {
            out.labels[i] = 0;  // event before the horizon
            out.included[i] = true;
            ++out.n_included;
        } else {
            ++out.n_excluded_censored;  // censored before the horizon: indeterminate
        }
    }
    if (out.n_included == 0)
        throw DegenerateDataError("binarize_outcome: no subject is determinate at the horizon");
    return out;
}

LogisticLik logistic_loglik(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                            double intercept, const Eigen::VectorXd& beta) {
    const auto n = features.rows();
    const auto p = features.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw std::invalid_argument("logistic_loglik: label length mismatch");
    if (beta.size() != p) throw std::invalid_argument("logistic_loglik: beta length mismatch");

    Eigen::VectorXd eta = (features * beta).array() + intercept;
    LogisticLik out;
    out.gradient = Eigen::VectorXd::Zero(p + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        double y = labels[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
        out.value += y * eta[i] - softplus(eta[i]);
        double resid = y - logistic(eta[i]);
        out.gradient[0] += resid;
        out.gradient.tail(p) += resid * features.row(i).transpose();
    }
    return out;
}

LogisticFit logistic_fit(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                         const std::vector<std::string>& names,
                         const LogisticOptions& options) {
    const auto n = features.rows();
    const auto p = features.cols();
    if (static_cast<std::size_t>(n) != labels.size())
        throw std::invalid_argument("logistic_fit: label length mismatch");
    if (names.size() != static_cast<std::size_t>(p))
        throw std::invalid_argument("logistic_fit: names/columns mismatch");

    std::size_t ones = 0;
    for (int l : labels) ones += l ? 1 : 0;
    if (ones == 0 || ones == labels.size())
        throw DegenerateDataError("logistic_fit: need at least one subject of each label");

    // standardize columns; constant columns are rejected
    Eigen::MatrixXd X = features;
    Eigen::VectorXd mean = X.colwise().mean();
    Eigen::VectorXd scale(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        X.col(j).array() -= mean[j];
        double sd = n > 1 ? std::sqrt(X.col(j).squaredNorm() / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 0.0))
            throw DegenerateDataError("logistic_fit: constant feature column: " +
                                      names[static_cast<std::size_t>(j)]);
        scale[j] = sd;
        X.col(j) /= sd;
    }

    // theta = (intercept, beta) on the standardized scale
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(p + 1);
    const double ridge = options.ridge;

    auto penalized = [&](const Eigen::VectorXd& th) {
        LogisticLik lik = logistic_loglik(X, labels, th[0], th.tail(p));
        if (ridge > 0.0) {
            lik.value -= 0.5 * ridge * th.tail(p).squaredNorm();
            lik.gradient.tail(p) -= ridge * th.tail(p);
        }
        return lik;
    };

    LogisticLik cur = penalized(theta);
    bool converged = false;
    int iterations = 0;
    while (iterations < options.max_iter) {
        if (cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol) {
            converged = true;
            break;
        }
        ++iterations;

        // observed information: A^T W A (+ ridge), A = [1 X], W = p(1-p)
        Eigen::VectorXd eta = (X * theta.tail(p)).array() + theta[0];
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (Eigen::Index i = 0; i < n; ++i) {
            double mu = logistic(eta[i]);
            double w = mu * (1.0 - mu);
            Eigen::VectorXd a(p + 1);
            a[0] = 1.0;
            a.tail(p) = X.row(i).transpose();
            info += w * a * a.transpose();
        }
        if (ridge > 0.0) info.bottomRightCorner(p, p).diagonal().array() += ridge;

        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd step = ldlt.solve(cur.gradient);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            std::string cols;
            for (const auto& nm : names) {
                if (!cols.empty()) cols += ", ";
                cols += nm;
            }
            throw NotConvergedError("logistic_fit: singular weighted normal equations; columns: " +
                                    cols);
        }

        double old_value = cur.value;
        Eigen::VectorXd candidate;
        LogisticLik next;
        int halvings = 0;
        while (true) {
            candidate = theta + step;
            next = penalized(candidate);
            if (next.value >= old_value || halvings >= options.max_halvings) break;
            step *= 0.5;
            ++halvings;
        }
        if (next.value < old_value) {
            if (std::fabs(next.value - old_value) <=
                options.loglik_tol * std::fabs(old_value))
                converged = true;
            break;
        }

        theta = candidate;
        cur = next;

        if (theta.lpNorm<Eigen::Infinity>() > options.divergence_bound)
            throw NotConvergedError("logistic_fit: coefficient diverging (perfect separation)");

        if (old_value != 0.0 &&
            std::fabs(cur.value - old_value) < options.loglik_tol * std::fabs(old_value)) {
            converged = true;
            break;
        }
    }
    if (!converged && cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol)
        converged = true;

    // covariance on the standardized scale
    Eigen::VectorXd eta = (X * theta.tail(p)).array() + theta[0];
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p + 1, p + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        double mu = logistic(eta[i]);
        double w = mu * (1.0 - mu);
        Eigen::VectorXd a(p + 1);
        a[0] = 1.0;
        a.tail(p) = X.row(i).transpose();
        info += w * a * a.transpose();
    }
    if (ridge > 0.0) info.bottomRightCorner(p, p).diagonal().array() += ridge;
    Eigen::MatrixXd cov_std = Eigen::LDLT<Eigen::MatrixXd>(info).solve(
        Eigen::MatrixXd::Identity(p + 1, p + 1));

    // back-transform: beta_j = beta_std_j / s_j,
    // intercept = intercept_std - sum beta_std_j mu_j / s_j
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p + 1, p + 1);
    jac(0, 0) = 1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
        jac(0, j + 1) = -mean[j] / scale[j];
        jac(j + 1, j + 1) = 1.0 / scale[j];
    }

    LogisticFit fit;
    fit.beta = theta.tail(p).array() / scale.array();
    fit.intercept = theta[0] - (theta.tail(p).array() * mean.array() / scale.array()).sum();
    fit.covariance = jac * cov_std * jac.transpose();
    fit.covariance = (fit.covariance + fit.covariance.transpose()) / 2.0;
    // loglik reported unpenalized at the optimum
    fit.loglik = logistic_loglik(X, labels, theta[0], theta.tail(p)).value;
    fit.n_used = static_cast<std::size_t>(n);
    fit.converged = converged;
    fit.iterations = iterations;
    fit.covariate_names = names;
    fit.ridge = ridge;
    return fit;
}

LogisticFit fit_log_odds_model(const std::vector<PatientRecord>& records, EventPolicy policy,
                               const std::vector<std::string>& covariate_spec,
                               double horizon_months, const LogisticOptions& options) {
    BinarizeResult bin = binarize_outcome(records, horizon_months, policy);
    DesignMatrix dm = design_matrix(records, covariate_spec);

    // intersection: determinate at the horizon AND complete covariates
    std::vector<Eigen::Index> keep;
    for (std::size_t r = 0; r < dm.rows.size(); ++r)
        if (bin.included[dm.rows[r]]) keep.push_back(static_cast<Eigen::Index>(r));
    if (keep.empty())
        throw DegenerateDataError("fit_log_odds_model: no usable subjects");

    Eigen::MatrixXd X(static_cast<Eigen::Index>(keep.size()), dm.X.cols());
    std::vector<int> y(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
        X.row(static_cast<Eigen::Index>(i)) = dm.X.row(keep[i]);
        y[i] = bin.labels[dm.rows[static_cast<std::size_t>(keep[i])]];
    }

    LogisticFit fit = logistic_fit(X, y, covariate_spec, options);
    fit.horizon_months = horizon_months;
    return fit;
}

LogOddsScore log_odds_score(const LogisticFit& fit, const Eigen::VectorXd& covariates) {
    if (covariates.size() != fit.beta.size())
        throw std::invalid_argument("log_odds_score: covariate length mismatch");
    LogOddsScore out;
    out.log_odds = fit.intercept + fit.beta.dot(covariates);
    out.probability = logistic(out.log_odds);
    return out;
}

LogOddsHistogram log_odds_distribution(const LogisticFit& fit,
                                       const std::vector<PatientRecord>& records,
                                       EventPolicy policy, int bins) {
    if (bins < 1) throw std::invalid_argument("log_odds_distribution: bins must be >= 1");
    BinarizeResult bin = binarize_outcome(records, fit.horizon_months, policy);
    DesignMatrix dm = design_matrix(records, fit.covariate_names);

    std::vector<double> scores;
    for (std::size_t r = 0; r < dm.rows.size(); ++r) {
        if (!bin.included[dm.rows[r]]) continue;
        scores.push_back(
            log_odds_score(fit, dm.X.row(static_cast<Eigen::Index>(r)).transpose()).log_odds);
    }
    if (scores.empty())
        throw DegenerateDataError("log_odds_distribution: no scorable subjects");

    LogOddsHistogram hist;
    hist.n_scored = scores.size();
    hist.n_excluded = records.size() - scores.size();
    double sum = 0.0;
    for (double s : scores) sum += s;
    hist.mean = sum / static_cast<double>(scores.size());
    double ss = 0.0;
    for (double s : scores) ss += (s - hist.mean) * (s - hist.mean);
    hist.sd = std::sqrt(ss / static_cast<double>(scores.size()));

    double lo = *std::min_element(scores.begin(), scores.end());
    double hi = *std::max_element(scores.begin(), scores.end());
    if (lo == hi) {
        // all scores identical: a single unit-width bin holds everything
        hist.bin_edges = {lo - 0.5, lo + 0.5};
        hist.counts = {scores.size()};
        return hist;
    }
    double width = (hi - lo) / static_cast<double>(bins);
    hist.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int b = 0; b <= bins; ++b) hist.bin_edges.push_back(lo + width * b);
    for (double s : scores) {
        auto idx = static_cast<std::ptrdiff_t>((s - lo) / width);
        if (idx >= bins) idx = bins - 1;  // right edge closes the last bin
        if (idx < 0) idx = 0;
        hist.counts[static_cast<std::size_t>(idx)] += 1;
    }
    return hist;
}

std::string logistic_fit_to_json(const LogisticFit& fit) {
    nlohmann::json j;
    j["kind"] = "logistic";
    j["intercept"] = fit.intercept;
    j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
    auto cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    j["loglik"] = fit.loglik;
    j["n_used"] = fit.n_used;
    j["horizon_months"] = fit.horizon_months;
    j["converged"] = fit.converged;
    j["covariate_names"] = fit.covariate_names;
    j["ridge"] = fit.ridge;
    return j.dump(2) + "\n";
}

LogisticFit logistic_fit_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("logistic model file: invalid JSON: ") + e.what());
    }
    try {
        LogisticFit fit;
        fit.intercept = j.at("intercept").get<double>();
        auto beta = j.at("beta").get<std::vector<double>>();
        fit.beta = Eigen::Map<Eigen::VectorXd>(beta.data(),
                                               static_cast<Eigen::Index>(beta.size()));
        if (j.contains("covariance")) {
            auto cov = j.at("covariance");
            fit.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                                  static_cast<Eigen::Index>(cov.size()));
            for (std::size_t r = 0; r < cov.size(); ++r)
                for (std::size_t c = 0; c < cov[r].size(); ++c)
                    fit.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                        cov[r][c].get<double>();
        }
        fit.loglik = j.value("loglik", 0.0);
        fit.n_used = j.value("n_used", std::size_t{0});
        fit.horizon_months = j.value("horizon_months", 60.0);
        fit.converged = j.value("converged", true);
        fit.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
        fit.ridge = j.value("ridge", 0.0);
        if (fit.covariate_names.size() != static_cast<std::size_t>(fit.beta.size()))
            throw SchemaError("logistic model file: beta/names length mismatch");
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("logistic model file: ") + e.what());
    }
}

std::string histogram_to_csv(const LogOddsHistogram& hist) {
    std::string out = "bin_lower,bin_upper,count\n";
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        out += num_to_string(hist.bin_edges[i]);
        out += ',';
        out += num_to_string(hist.bin_edges[i + 1]);
        out += ',';
        out += std::to_string(hist.counts[i]);
        out += '\n';
    }
    return out;
}

}  // namespace survkit
