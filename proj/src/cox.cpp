#include "survkit/cox.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "survkit/errors.hpp"
#include "survkit/numfmt.hpp"
#include "survkit/stats.hpp"

#include <nlohmann/json.hpp>

namespace survkit {

TiesMethod parse_ties_method(std::string_view name) {
    if (name == "efron") return TiesMethod::efron;
    if (name == "breslow") return TiesMethod::breslow;
    throw ConfigError("unknown ties method: " + std::string(name));
}

const char* to_string(TiesMethod m) { return m == TiesMethod::efron ? "efron" : "breslow"; }

namespace {

void check_samples(const SampleSet& samples, const Eigen::VectorXd& beta) {
    if (samples.n() == 0) throw DegenerateDataError("cox: no samples");
    if (samples.covariates.rows() != static_cast<Eigen::Index>(samples.n()))
        throw std::invalid_argument("cox: covariate row count mismatch");
    if (beta.size() != samples.covariates.cols())
        throw std::invalid_argument("cox: beta length does not match covariate count");
    if (samples.n_events() == 0)
        throw DegenerateDataError("cox: zero events, partial likelihood undefined");
}

std::vector<std::size_t> time_order(const std::vector<double>& time) {
    std::vector<std::size_t> order(time.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });
    return order;
}

}  // namespace

PartialLikValue partial_loglik(const SampleSet& samples, const Eigen::VectorXd& beta,
                               TiesMethod ties) {
    check_samples(samples, beta);
    const auto p = samples.covariates.cols();
    const std::size_t n = samples.n();
    const auto& X = samples.covariates;

    // eta shifted by its max: the partial likelihood is invariant under a
    // common shift, and exp() stays in range.
    Eigen::VectorXd eta = X * beta;
    double shift = n > 0 ? eta.maxCoeff() : 0.0;
    eta.array() -= shift;
    Eigen::VectorXd risk = eta.array().exp();

    PartialLikValue out;
    out.value = 0.0;
    out.gradient = Eigen::VectorXd::Zero(p);
    out.hessian = Eigen::MatrixXd::Zero(p, p);

    auto order = time_order(samples.time);

    // walk times descending, accumulating risk-set sums
    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);

    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(n) - 1;
    while (i >= 0) {
        const double t = samples.time[order[static_cast<std::size_t>(i)]];
        // everyone tied at t (events and censorings) enters the risk set
        double d = 0.0;
        double s0_d = 0.0;
        Eigen::VectorXd s1_d = Eigen::VectorXd::Zero(p);
        Eigen::MatrixXd s2_d = Eigen::MatrixXd::Zero(p, p);
        double eta_events = 0.0;
        Eigen::VectorXd x_events = Eigen::VectorXd::Zero(p);

        std::ptrdiff_t j = i;
        while (j >= 0 && samples.time[order[static_cast<std::size_t>(j)]] == t) {
            const std::size_t idx = order[static_cast<std::size_t>(j)];
            const double r = risk[static_cast<Eigen::Index>(idx)];
            const auto x = X.row(static_cast<Eigen::Index>(idx)).transpose();
            s0 += r;
            s1 += r * x;
            s2 += r * x * x.transpose();
            if (samples.event[idx]) {
                d += 1.0;
                s0_d += r;
                s1_d += r * x;
                s2_d += r * x * x.transpose();
                eta_events += eta[static_cast<Eigen::Index>(idx)];
                x_events += x;
            }
            --j;
        }

        if (d > 0.0) {
            out.value += eta_events;
            out.gradient += x_events;
            const int dd = static_cast<int>(d);
            for (int l = 0; l < dd; ++l) {
                // Breslow uses the full risk-set sums for every tied event;
                // Efron removes an increasing fraction of the tied deaths.
                double frac = ties == TiesMethod::efron ? static_cast<double>(l) / d : 0.0;
                double denom = s0 - frac * s0_d;
                Eigen::VectorXd mean = (s1 - frac * s1_d) / denom;
                Eigen::MatrixXd second = (s2 - frac * s2_d) / denom;
                out.value -= std::log(denom);
                out.gradient -= mean;
                out.hessian -= second - mean * mean.transpose();
            }
        }
        i = j;
    }
    return out;
}

namespace {

struct Standardization {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
};

// Center and scale columns; zero-variance and exactly collinear columns are
// rejected here, naming the offenders.
Standardization standardize(SampleSet& samples) {
    const auto n = static_cast<Eigen::Index>(samples.n());
    const auto p = samples.covariates.cols();
    Standardization st;
    st.mean = samples.covariates.colwise().mean();
    st.scale.resize(p);
    for (Eigen::Index j = 0; j < p; ++j) {
        samples.covariates.col(j).array() -= st.mean[j];
        double ss = samples.covariates.col(j).squaredNorm();
        double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 0.0))
            throw DegenerateDataError("cox: constant covariate column: " +
                                      samples.covariate_names[static_cast<std::size_t>(j)]);
        st.scale[j] = sd;
        samples.covariates.col(j) /= sd;
    }
    if (p > 1) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(samples.covariates);
        qr.setThreshold(1e-10);
        if (qr.rank() < p) {
            std::string names;
            auto perm = qr.colsPermutation().indices();
            for (Eigen::Index j = qr.rank(); j < p; ++j) {
                if (!names.empty()) names += ", ";
                names += samples.covariate_names[static_cast<std::size_t>(perm[j])];
            }
            throw DegenerateDataError("cox: collinear covariate column(s): " + names);
        }
    }
    return st;
}

}  // namespace

CoxFit cox_fit(const SampleSet& samples, const CoxOptions& options) {
    const auto p = samples.covariates.cols();
    if (p == 0) throw std::invalid_argument("cox_fit: no covariates");
    if (samples.n_events() < 2)
        throw DegenerateDataError("cox_fit: need >= 2 events");
    if (samples.covariate_names.size() != static_cast<std::size_t>(p))
        throw std::invalid_argument("cox_fit: covariate names/columns mismatch");

    SampleSet work = samples;
    Standardization st = standardize(work);

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
    PartialLikValue cur = partial_loglik(work, beta, options.ties);
    const double loglik_null = cur.value;

    bool converged = false;
    int iterations = 0;
    while (iterations < options.max_iter) {
        if (cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol) {
            converged = true;
            break;
        }
        ++iterations;

        Eigen::MatrixXd info = -cur.hessian;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd step = ldlt.solve(cur.gradient);
        if (ldlt.info() != Eigen::Success || !step.allFinite()) {
            throw NotConvergedError(
                "cox_fit: singular information matrix; covariates: " +
                [&] {
                    std::string s;
                    for (const auto& nm : samples.covariate_names) {
                        if (!s.empty()) s += ", ";
                        s += nm;
                    }
                    return s;
                }());
        }

        // step-halving keeps the ascent monotone
        double old_value = cur.value;
        Eigen::VectorXd candidate;
        PartialLikValue next;
        int halvings = 0;
        while (true) {
            candidate = beta + step;
            next = partial_loglik(work, candidate, options.ties);
            if (next.value >= old_value || halvings >= options.max_halvings) break;
            step *= 0.5;
            ++halvings;
        }
        if (next.value < old_value) {
            // no ascent left; a move below the log-likelihood resolution is
            // the flat-optimum case the relative-change criterion covers
            if (std::fabs(next.value - old_value) <=
                options.loglik_tol * std::fabs(old_value))
                converged = true;
            break;
        }

        beta = candidate;
        cur = next;

        if (beta.lpNorm<Eigen::Infinity>() > options.divergence_bound)
            throw NotConvergedError(
                "cox_fit: coefficient diverging (monotone likelihood / perfect separation)");

        if (old_value != 0.0 &&
            std::fabs(cur.value - old_value) < options.loglik_tol * std::fabs(old_value)) {
            converged = true;
            break;
        }
    }
    if (!converged && cur.gradient.lpNorm<Eigen::Infinity>() < options.grad_tol)
        converged = true;

    Eigen::MatrixXd info = -cur.hessian;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    Eigen::MatrixXd cov_std = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

    CoxFit fit;
    fit.beta = beta.array() / st.scale.array();
    // cov_orig[j,k] = cov_std[j,k] / (s_j s_k)
    fit.covariance = cov_std.array() /
                     (st.scale * st.scale.transpose()).array();
    fit.covariance = (fit.covariance + fit.covariance.transpose()) / 2.0;  // symmetrize
    fit.loglik_null = loglik_null;
    fit.loglik_full = cur.value;
    fit.n = samples.n();
    fit.n_events = samples.n_events();
    fit.iterations = iterations;
    fit.converged = converged;
    fit.ties_method = options.ties;
    fit.covariate_names = samples.covariate_names;
    return fit;
}

HazardRatioTable hazard_ratios(const CoxFit& fit) {
    if (!fit.converged)
        throw NotConvergedError("hazard_ratios: fit did not converge");
    HazardRatioTable table;
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j) {
        HazardRatioRow row;
        row.variable = fit.covariate_names[static_cast<std::size_t>(j)];
        row.coefficient = fit.beta[j];
        row.hazard_ratio = std::exp(fit.beta[j]);
        row.se = std::sqrt(std::max(0.0, fit.covariance(j, j)));
        row.z = row.se > 0.0 ? row.coefficient / row.se
                             : std::numeric_limits<double>::quiet_NaN();
        row.p_value = row.se > 0.0 ? stats::normal_two_sided_p(row.z)
                                   : std::numeric_limits<double>::quiet_NaN();
        row.ci_lower = std::exp(row.coefficient - 1.96 * row.se);
        row.ci_upper = std::exp(row.coefficient + 1.96 * row.se);
        table.push_back(std::move(row));
    }
    return table;
}

BaselineHazard breslow_baseline(const CoxFit& fit, const SampleSet& samples) {
    if (!fit.converged)
        throw NotConvergedError("breslow_baseline: fit did not converge");
    if (samples.covariates.cols() != fit.beta.size())
        throw std::invalid_argument("breslow_baseline: covariate count mismatch");

    const std::size_t n = samples.n();
    Eigen::VectorXd risk = (samples.covariates * fit.beta).array().exp();

    auto order = time_order(samples.time);
    BaselineHazard bh;
    double cum = 0.0;
    double s0 = 0.0;
    std::ptrdiff_t i = static_cast<std::ptrdiff_t>(n) - 1;
    while (i >= 0) {
        const double t = samples.time[order[static_cast<std::size_t>(i)]];
        double d = 0.0;
        std::ptrdiff_t j = i;
        while (j >= 0 && samples.time[order[static_cast<std::size_t>(j)]] == t) {
            const std::size_t idx = order[static_cast<std::size_t>(j)];
            s0 += risk[static_cast<Eigen::Index>(idx)];
            if (samples.event[idx]) d += 1.0;
            --j;
        }
        if (d > 0.0) {
            bh.time.push_back(t);
            bh.cumhaz.push_back(d / s0);  // increment; prefix-summed below
        }
        i = j;
    }
    // events were visited in descending time order
    std::reverse(bh.time.begin(), bh.time.end());
    std::reverse(bh.cumhaz.begin(), bh.cumhaz.end());
    for (std::size_t k = 0; k < bh.cumhaz.size(); ++k) {
        cum += bh.cumhaz[k];
        bh.cumhaz[k] = cum;
    }
    return bh;
}

GofReport gof_tests(const CoxFit& fit, const SampleSet& samples) {
    if (!fit.converged) throw NotConvergedError("gof_tests: fit did not converge");
    const auto p = fit.beta.size();
    const int df = static_cast<int>(p);

    GofReport report;
    report.likelihood_ratio.statistic = std::max(0.0, 2.0 * (fit.loglik_full - fit.loglik_null));
    report.likelihood_ratio.df = df;
    report.likelihood_ratio.p_value =
        stats::chi_square_sf(report.likelihood_ratio.statistic, df);

    Eigen::LDLT<Eigen::MatrixXd> cov_ldlt(fit.covariance);
    Eigen::VectorXd w = cov_ldlt.solve(fit.beta);
    report.wald.statistic = std::max(0.0, fit.beta.dot(w));
    report.wald.df = df;
    report.wald.p_value = stats::chi_square_sf(report.wald.statistic, df);

    // score test at beta = 0, computed on the standardized scale (the
    // statistic is invariant under per-column affine reparameterization)
    SampleSet work = samples;
    try {
        standardize(work);
        PartialLikValue at0 =
            partial_loglik(work, Eigen::VectorXd::Zero(p), fit.ties_method);
        Eigen::MatrixXd info = -at0.hessian;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd sol = ldlt.solve(at0.gradient);
        if (ldlt.info() != Eigen::Success || !sol.allFinite())
            throw DegenerateDataError("singular information at beta = 0");
        GofTest score;
        score.statistic = std::max(0.0, at0.gradient.dot(sol));
        score.df = df;
        score.p_value = stats::chi_square_sf(score.statistic, df);
        report.score = score;
    } catch (const Error& e) {
        report.score_note = std::string("score test unavailable: ") + e.what();
    }
    return report;
}

RiskPrediction predict_risk(const CoxFit& fit, const Eigen::VectorXd& covariates) {
    if (covariates.size() != fit.beta.size())
        throw std::invalid_argument("predict_risk: covariate length mismatch");
    RiskPrediction out;
    out.linear_predictor = fit.beta.dot(covariates);
    out.relative_hazard = std::exp(out.linear_predictor);
    return out;
}

std::string cox_fit_to_json(const CoxFit& fit) {
    nlohmann::json j;
    j["kind"] = "cox";
    j["beta"] = std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size());
    auto cov = nlohmann::json::array();
    for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;
    j["loglik_null"] = fit.loglik_null;
    j["loglik_full"] = fit.loglik_full;
    j["n"] = fit.n;
    j["n_events"] = fit.n_events;
    j["ties_method"] = to_string(fit.ties_method);
    j["converged"] = fit.converged;
    j["covariate_names"] = fit.covariate_names;
    return j.dump(2) + "\n";
}

CoxFit cox_fit_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("cox model file: invalid JSON: ") + e.what());
    }
    try {
        CoxFit fit;
        auto beta = j.at("beta").get<std::vector<double>>();
        fit.beta = Eigen::Map<Eigen::VectorXd>(beta.data(),
                                               static_cast<Eigen::Index>(beta.size()));
        auto cov = j.at("covariance");
        fit.covariance.resize(static_cast<Eigen::Index>(cov.size()),
                              static_cast<Eigen::Index>(cov.size()));
        for (std::size_t r = 0; r < cov.size(); ++r)
            for (std::size_t c = 0; c < cov[r].size(); ++c)
                fit.covariance(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    cov[r][c].get<double>();
        fit.loglik_null = j.at("loglik_null").get<double>();
        fit.loglik_full = j.at("loglik_full").get<double>();
        fit.n = j.at("n").get<std::size_t>();
        fit.n_events = j.at("n_events").get<std::size_t>();
        fit.ties_method = parse_ties_method(j.at("ties_method").get<std::string>());
        fit.converged = j.at("converged").get<bool>();
        fit.covariate_names = j.at("covariate_names").get<std::vector<std::string>>();
        if (fit.covariate_names.size() != static_cast<std::size_t>(fit.beta.size()))
            throw SchemaError("cox model file: beta/names length mismatch");
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("cox model file: ") + e.what());
    }
}

std::string hazard_ratios_to_csv(const HazardRatioTable& table) {
    std::string out = "variable,coefficient,hazard_ratio,p_value,ci_lower,ci_upper\n";
    for (const auto& row : table) {
        out += row.variable;
        out += ',';
        out += num_fixed(row.coefficient, 3);
        out += ',';
        out += num_fixed(row.hazard_ratio, 3);
        out += ',';
        out += pvalue_to_string(row.p_value);
        out += ',';
        out += num_fixed(row.ci_lower, 3);
        out += ',';
        out += num_fixed(row.ci_upper, 3);
        out += '\n';
    }
    return out;
}

}  // namespace survkit
