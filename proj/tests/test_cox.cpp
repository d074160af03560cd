#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "survkit/cox.hpp"
#include "survkit/errors.hpp"
#include "survkit/synth.hpp"

using namespace survkit;

namespace {

SampleSet make_set(std::vector<double> time, std::vector<int> event, Eigen::MatrixXd x,
                   std::vector<std::string> names) {
    SampleSet s;
    s.time = std::move(time);
    s.event = std::move(event);
    s.covariates = std::move(x);
    s.covariate_names = std::move(names);
    s.source_rows.resize(s.time.size());
    std::iota(s.source_rows.begin(), s.source_rows.end(), 0);
    return s;
}

// independent oracle: the log partial likelihood at beta = 0 by direct
// risk-set enumeration. Breslow keeps the full risk-set size for every tied
// event; Efron shrinks it by one per tied death.
double loglik_at_zero_oracle(const SampleSet& s, TiesMethod ties) {
    double value = 0.0;
    for (std::size_t i = 0; i < s.n(); ++i) {
        if (!s.event[i]) continue;
        double t = s.time[i];
        double riskset = 0.0, tied_before = 0.0;
        for (std::size_t j = 0; j < s.n(); ++j)
            if (s.time[j] >= t) riskset += 1.0;
        if (ties == TiesMethod::efron) {
            // rank of this event among the deaths tied at t (input order)
            for (std::size_t j = 0; j < i; ++j)
                if (s.time[j] == t && s.event[j]) tied_before += 1.0;
        }
        value -= std::log(riskset - tied_before);
    }
    return value;
}

SampleSet random_set(std::uint64_t seed, std::size_t n, Eigen::Index p, bool integer_times) {
    synth::SplitMix64 rng{seed};
    std::vector<double> time;
    std::vector<int> event;
    Eigen::MatrixXd x(n, p);
    for (std::size_t i = 0; i < n; ++i) {
        double t = -std::log(rng.next_u01()) * 8.0;
        if (integer_times) t = std::floor(t) + 1.0;
        time.push_back(t);
        event.push_back(rng.next_u01() < 0.7 ? 1 : 0);
        for (Eigen::Index j = 0; j < p; ++j)
            x(static_cast<Eigen::Index>(i), j) =
                j == 0 ? (rng.next_u01() < 0.5 ? 1.0 : 0.0) : rng.next_u01() * 4.0 - 2.0;
    }
    std::vector<std::string> names;
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j));
    return make_set(std::move(time), std::move(event), std::move(x), std::move(names));
}

SampleSet recovery_cohort_criterion4() {
    synth::SynthSpec spec;
    spec.n = 2000;
    spec.seed = 42;
    spec.baseline_family = Family::exponential;
    spec.baseline.lambda = 1.0;
    spec.censoring.kind = synth::Censoring::Kind::exponential;
    spec.censoring.param = 0.45;
    spec.covariates = {
        {"x_bin", synth::CovariateGen::Kind::bernoulli, 0.5, 0.0, 1.0, 0.5},
        {"x_unif", synth::CovariateGen::Kind::uniform, 0.0, 0.0, 2.0, -0.3},
    };
    return synth::generate_samples(spec);
}

}  // namespace

TEST_CASE("partial likelihood at beta = 0 equals the risk-set oracle") {
    for (std::uint64_t seed : {4ULL, 9ULL}) {
        SampleSet s = random_set(seed, 60, 2, true);  // integer times: heavy ties
        Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
        for (TiesMethod ties : {TiesMethod::efron, TiesMethod::breslow}) {
            PartialLikValue v = partial_loglik(s, zero, ties);
            CHECK(v.value == doctest::Approx(loglik_at_zero_oracle(s, ties)).epsilon(1e-12));
        }
    }
}

TEST_CASE("partial likelihood three-subject hand fixture") {
    // times 1(1), 2(1), 3(0), covariate (1, 0, 0), beta = 0:
    //   value = -(log 3 + log 2)
    //   gradient = (1 - 1/3) + (0 - 0/2) = 2/3
    //   hessian = -[ (1/3 - 1/9) + 0 ] = -2/9
    SampleSet s = make_set({1, 2, 3}, {1, 1, 0},
                           (Eigen::MatrixXd(3, 1) << 1, 0, 0).finished(), {"x"});
    PartialLikValue v = partial_loglik(s, Eigen::VectorXd::Zero(1), TiesMethod::efron);
    CHECK(v.value == doctest::Approx(-(std::log(3.0) + std::log(2.0))).epsilon(1e-14));
    CHECK(v.gradient[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(v.hessian(0, 0) == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("partial likelihood derivatives match finite differences") {
    const double h = 1e-5;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SampleSet s = random_set(seed * 31, 30, 2, seed % 2 == 0);
        synth::SplitMix64 rng{seed * 77};
        for (int rep = 0; rep < 10; ++rep) {
            Eigen::VectorXd beta(2);
            beta << rng.next_u01() * 2.0 - 1.0, rng.next_u01() * 2.0 - 1.0;
            TiesMethod ties = rep % 2 == 0 ? TiesMethod::efron : TiesMethod::breslow;
            PartialLikValue v = partial_loglik(s, beta, ties);
            for (int j = 0; j < 2; ++j) {
                Eigen::VectorXd up = beta, dn = beta;
                up[j] += h;
                dn[j] -= h;
                double fd = (partial_loglik(s, up, ties).value -
                             partial_loglik(s, dn, ties).value) / (2.0 * h);
                CHECK(v.gradient[j] ==
                      doctest::Approx(fd).epsilon(1e-6).scale(std::max(1.0, std::fabs(fd))));
                // hessian column via differences of the analytic gradient
                Eigen::VectorXd gfd = (partial_loglik(s, up, ties).gradient -
                                       partial_loglik(s, dn, ties).gradient) / (2.0 * h);
                for (int k = 0; k < 2; ++k)
                    CHECK(v.hessian(k, j) ==
                          doctest::Approx(gfd[k]).epsilon(1e-5).scale(
                              std::max(1.0, std::fabs(gfd[k]))));
            }
        }
    }
}

TEST_CASE("cox_fit: degenerate designs are rejected with names") {
    SampleSet s = random_set(3, 40, 2, false);
    s.covariates.col(1).setZero();
    CHECK_THROWS_WITH_AS(cox_fit(s), "cox: constant covariate column: x1", DegenerateDataError);

    SampleSet s2 = random_set(3, 40, 2, false);
    s2.covariates.col(1) = 2.0 * s2.covariates.col(0);
    CHECK_THROWS_AS(cox_fit(s2), DegenerateDataError);

    SampleSet s3 = random_set(3, 40, 1, false);
    for (auto& e : s3.event) e = 0;
    CHECK_THROWS_AS(cox_fit(s3), DegenerateDataError);
}

TEST_CASE("cox_fit: null effect on duplicated groups") {
    // the binary covariate marks an exact copy of the same sample multiset,
    // so its true effect is 0
    SampleSet base = random_set(21, 60, 1, true);
    SampleSet s = base;
    s.time.insert(s.time.end(), base.time.begin(), base.time.end());
    s.event.insert(s.event.end(), base.event.begin(), base.event.end());
    Eigen::MatrixXd x(2 * base.n(), 1);
    x.topRows(static_cast<Eigen::Index>(base.n())).setZero();
    x.bottomRows(static_cast<Eigen::Index>(base.n())).setOnes();
    s.covariates = x;
    s.source_rows.resize(s.time.size());

    CoxFit fit = cox_fit(s);
    CHECK(fit.converged);
    double se = std::sqrt(fit.covariance(0, 0));
    CHECK(std::fabs(fit.beta[0]) < 3.0 * se);
    CHECK(std::fabs(fit.beta[0]) < 1e-6);  // exactly balanced design
    CHECK(fit.loglik_full >= fit.loglik_null);
}

TEST_CASE("cox_fit: coefficient recovery on the seeded cohort") {
    SampleSet samples = recovery_cohort_criterion4();
    CoxFit fit = cox_fit(samples);
    CHECK(fit.converged);
    CHECK(fit.n == 2000);
    const double truth[2] = {0.5, -0.3};
    for (int j = 0; j < 2; ++j) {
        double se = std::sqrt(fit.covariance(j, j));
        CHECK(std::fabs(fit.beta[j] - truth[j]) < 0.1);
        CHECK(std::fabs(fit.beta[j] - truth[j]) < 3.0 * se);
        CHECK(fit.covariance(j, j) >= 0.0);
    }
    CHECK((fit.covariance - fit.covariance.transpose()).lpNorm<Eigen::Infinity>() < 1e-10);
    CHECK(fit.loglik_full > fit.loglik_null);
}

TEST_CASE("cox_fit: null 8-covariate cohort keeps most CIs over 1") {
    synth::SynthSpec spec;
    spec.n = 900;
    spec.seed = 314;
    spec.baseline_family = Family::exponential;
    spec.baseline.lambda = 10.0;
    spec.censoring.kind = synth::Censoring::Kind::uniform;
    spec.censoring.param = 30.0;
    const char* names[] = {"age_years",       "tumor_size_mm", "er_status",
                           "her2_status",     "hormone_therapy", "radiotherapy",
                           "chemotherapy",    "mastectomy_flag"};
    for (const char* nm : names) {
        bool cont = std::string(nm) == "age_years" || std::string(nm) == "tumor_size_mm";
        synth::CovariateGen g;
        g.name = nm;
        g.kind = cont ? synth::CovariateGen::Kind::uniform : synth::CovariateGen::Kind::bernoulli;
        g.p = 0.5;
        g.lo = 10.0;
        g.hi = 60.0;
        g.beta = 0.0;  // no real effects anywhere
        spec.covariates.push_back(g);
    }
    SampleSet s = synth::generate_samples(spec);
    HazardRatioTable table = hazard_ratios(cox_fit(s));
    int covering = 0;
    for (const auto& row : table)
        if (row.ci_lower <= 1.0 && 1.0 <= row.ci_upper) ++covering;
    CHECK(covering >= 7);  // seeded fixture: deterministic count
}

TEST_CASE("cox_fit: Efron equals Breslow without ties") {
    for (std::uint64_t seed = 100; seed < 105; ++seed) {
        SampleSet s = random_set(seed, 80, 2, false);  // continuous times: no ties
        CoxOptions efron, breslow;
        efron.ties = TiesMethod::efron;
        breslow.ties = TiesMethod::breslow;
        CoxFit fe = cox_fit(s, efron);
        CoxFit fb = cox_fit(s, breslow);
        CHECK((fe.beta - fb.beta).lpNorm<Eigen::Infinity>() < 1e-10);
        CHECK(fe.loglik_full == doctest::Approx(fb.loglik_full).epsilon(1e-12));
    }
}

TEST_CASE("cox_fit: shift invariance and scale equivariance") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        SampleSet s = random_set(seed, 70, 2, true);
        CoxFit base = cox_fit(s);

        SampleSet shifted = s;
        shifted.covariates.col(1).array() += 1000.0;
        CoxFit fs = cox_fit(shifted);
        CHECK((base.beta - fs.beta).lpNorm<Eigen::Infinity>() < 1e-8);

        SampleSet scaled = s;
        const double c = 7.5;
        scaled.covariates.col(1) *= c;
        CoxFit fc = cox_fit(scaled);
        CHECK(std::fabs(fc.beta[0] - base.beta[0]) < 1e-8);
        CHECK(std::fabs(fc.beta[1] - base.beta[1] / c) < 1e-8);
    }
}

TEST_CASE("cox_fit: separation raises a divergence error") {
    // the covariate perfectly orders events before censorings
    std::vector<double> time;
    std::vector<int> event;
    Eigen::MatrixXd x(40, 1);
    for (int i = 0; i < 20; ++i) {
        time.push_back(1.0 + i * 0.1);
        event.push_back(1);
        x(i, 0) = 1.0;
    }
    for (int i = 0; i < 20; ++i) {
        time.push_back(10.0 + i * 0.1);
        event.push_back(1);
        x(20 + i, 0) = 0.0;
    }
    SampleSet s = make_set(std::move(time), std::move(event), std::move(x), {"sep"});
    CoxOptions options;
    options.divergence_bound = 5.0;
    CHECK_THROWS_AS(cox_fit(s, options), NotConvergedError);
    // with the permissive default bound the fit runs off to a large coefficient
    CoxFit loose = cox_fit(s);
    CHECK(std::fabs(loose.beta[0]) > 10.0);
}

TEST_CASE("hazard ratios: transform, fixture, and refusal") {
    SampleSet s = recovery_cohort_criterion4();
    CoxFit fit = cox_fit(s);
    HazardRatioTable table = hazard_ratios(fit);
    REQUIRE(table.size() == 2);
    for (std::size_t j = 0; j < 2; ++j) {
        CHECK(table[j].hazard_ratio == std::exp(table[j].coefficient));  // full precision
        CHECK(table[j].ci_lower ==
              doctest::Approx(std::exp(table[j].coefficient - 1.96 * table[j].se)));
        CHECK(table[j].ci_upper ==
              doctest::Approx(std::exp(table[j].coefficient + 1.96 * table[j].se)));
        CHECK(table[j].ci_lower <= table[j].hazard_ratio);
        CHECK(table[j].hazard_ratio <= table[j].ci_upper);
    }

    CoxFit unconverged = fit;
    unconverged.converged = false;
    CHECK_THROWS_AS(hazard_ratios(unconverged), NotConvergedError);
}

TEST_CASE("hazard ratios: published coefficient/HR pairs are exp-consistent") {
    // static self-consistency of the HR transform against printed values
    const std::pair<double, double> rows[] = {
        {0.046, 1.047}, {0.011, 1.011}, {-0.127, 0.881}, {0.464, 1.591},
        {0.015, 1.016}, {-0.011, 0.989}, {0.580, 1.786}, {0.292, 1.339},
    };
    for (const auto& [coef, hr] : rows) CHECK(std::fabs(std::exp(coef) - hr) < 0.002);
}

TEST_CASE("hazard ratios: zero coefficient maps to HR 1 with symmetric CI") {
    CoxFit fit;
    fit.beta = Eigen::VectorXd::Zero(1);
    fit.covariance = Eigen::MatrixXd::Constant(1, 1, 0.04);
    fit.converged = true;
    fit.covariate_names = {"x"};
    auto table = hazard_ratios(fit);
    CHECK(table[0].hazard_ratio == 1.0);
    CHECK(table[0].ci_lower * table[0].ci_upper == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("breslow baseline: hand fixture at beta = 0 and empty case") {
    CoxFit null_fit;
    null_fit.beta = Eigen::VectorXd::Zero(1);
    null_fit.covariance = Eigen::MatrixXd::Identity(1, 1);
    null_fit.converged = true;
    null_fit.covariate_names = {"x"};

    SampleSet s = make_set({1, 2, 3, 4, 5}, {1, 0, 1, 0, 1},
                           Eigen::MatrixXd::Zero(5, 1), {"x"});
    // the covariate is constant zero, but baseline estimation needs no fit
    BaselineHazard bh = breslow_baseline(null_fit, s);
    REQUIRE(bh.time == std::vector<double>{1, 3, 5});
    CHECK(bh.cumhaz[0] == doctest::Approx(1.0 / 5.0).epsilon(1e-12));
    CHECK(bh.cumhaz[1] == doctest::Approx(1.0 / 5.0 + 1.0 / 3.0).epsilon(1e-12));
    CHECK(bh.cumhaz[2] == doctest::Approx(1.0 / 5.0 + 1.0 / 3.0 + 1.0).epsilon(1e-12));

    SampleSet censored = make_set({1, 2}, {0, 0}, Eigen::MatrixXd::Zero(2, 1), {"x"});
    CHECK(breslow_baseline(null_fit, censored).time.empty());
}

TEST_CASE("breslow baseline: predictions invariant under covariate rescaling") {
    SampleSet s = random_set(55, 120, 2, false);
    CoxFit fit = cox_fit(s);
    BaselineHazard bh = breslow_baseline(fit, s);

    SampleSet scaled = s;
    scaled.covariates.col(0) *= 3.0;
    scaled.covariates.col(1) *= 0.25;
    CoxFit fit2 = cox_fit(scaled);
    BaselineHazard bh2 = breslow_baseline(fit2, scaled);

    REQUIRE(bh.time == bh2.time);
    // predicted cumulative hazard per subject: Lambda0(t_max) * exp(beta.x)
    for (std::size_t i = 0; i < s.n(); ++i) {
        double p1 = bh.cumhaz.back() *
                    std::exp(fit.beta.dot(s.covariates.row(static_cast<Eigen::Index>(i))));
        double p2 = bh2.cumhaz.back() *
                    std::exp(fit2.beta.dot(scaled.covariates.row(static_cast<Eigen::Index>(i))));
        CHECK(p1 == doctest::Approx(p2).epsilon(1e-8));
    }
}

TEST_CASE("gof tests: null and strong-effect cohorts") {
    // strong effect: all three tests should be overwhelming
    synth::SynthSpec spec;
    spec.n = 1000;
    spec.seed = 5;
    spec.baseline_family = Family::exponential;
    spec.baseline.lambda = 1.0;
    spec.censoring.kind = synth::Censoring::Kind::exponential;
    spec.censoring.param = 0.45;
    spec.covariates = {{"x", synth::CovariateGen::Kind::bernoulli, 0.5, 0.0, 1.0, 1.0}};
    SampleSet strong = synth::generate_samples(spec);
    CoxFit fit = cox_fit(strong);
    GofReport g = gof_tests(fit, strong);
    CHECK(g.likelihood_ratio.statistic >= 0.0);
    CHECK(g.likelihood_ratio.p_value < 1e-6);
    CHECK(g.wald.p_value < 1e-6);
    REQUIRE(g.score.has_value());
    CHECK(g.score->p_value < 1e-6);
    CHECK(g.likelihood_ratio.df == 1);

    // null: p-values should rarely be extreme across 100 seeded replicates
    int calm = 0;
    for (std::uint64_t rep = 0; rep < 100; ++rep) {
        synth::SynthSpec ns = spec;
        ns.n = 300;
        ns.seed = 1000 + rep;
        ns.covariates[0].beta = 0.0;
        SampleSet null_set = synth::generate_samples(ns);
        CoxFit nf = cox_fit(null_set);
        GofReport ng = gof_tests(nf, null_set);
        if (ng.likelihood_ratio.p_value > 0.01 && ng.wald.p_value > 0.01 &&
            ng.score && ng.score->p_value > 0.01)
            ++calm;
    }
    CHECK(calm >= 95);
}

TEST_CASE("predict_risk") {
    CoxFit fit;
    fit.beta = Eigen::VectorXd(8);
    fit.beta << 0.046, 0.011, -0.127, 0.464, 0.015, -0.011, 0.580, 0.292;
    fit.covariance = Eigen::MatrixXd::Identity(8, 8);
    fit.converged = true;
    fit.covariate_names = {"age_years",      "tumor_size_mm", "er_status",
                           "her2_status",    "hormone_therapy", "radiotherapy",
                           "chemotherapy",   "mastectomy_flag"};

    Eigen::VectorXd zero = Eigen::VectorXd::Zero(8);
    CHECK(predict_risk(fit, zero).relative_hazard == 1.0);

    Eigen::VectorXd patient(8);
    patient << 62, 25, 0, 1, 0, 0, 0, 0;
    RiskPrediction p = predict_risk(fit, patient);
    CHECK(p.linear_predictor == doctest::Approx(3.591).epsilon(1e-12));
    CHECK(p.relative_hazard == doctest::Approx(std::exp(3.591)).epsilon(1e-12));

    // one extra year of age multiplies the hazard by exp(0.046) = 1.047
    Eigen::VectorXd older = patient;
    older[0] += 1.0;
    double ratio = predict_risk(fit, older).relative_hazard / p.relative_hazard;
    CHECK(ratio == doctest::Approx(std::exp(0.046)).epsilon(1e-10));
    CHECK(std::fabs(ratio - 1.047) < 1e-3);

    Eigen::VectorXd wrong(3);
    wrong.setZero();
    CHECK_THROWS_AS(predict_risk(fit, wrong), std::invalid_argument);
}

TEST_CASE("cox fit JSON round trip") {
    SampleSet s = random_set(8, 50, 2, true);
    CoxFit fit = cox_fit(s);
    CoxFit back = cox_fit_from_json(cox_fit_to_json(fit));
    CHECK((back.beta - fit.beta).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK((back.covariance - fit.covariance).lpNorm<Eigen::Infinity>() == 0.0);
    CHECK(back.loglik_full == fit.loglik_full);
    CHECK(back.n_events == fit.n_events);
    CHECK(back.ties_method == fit.ties_method);
    CHECK(back.covariate_names == fit.covariate_names);

    CHECK_THROWS_AS(cox_fit_from_json("{not json"), SchemaError);
}

TEST_CASE("hazard ratio CSV layout") {
    CoxFit fit;
    fit.beta = Eigen::VectorXd::Constant(1, 0.464);
    fit.covariance = Eigen::MatrixXd::Constant(1, 1, 0.0108);
    fit.converged = true;
    fit.covariate_names = {"her2_status"};
    std::string csv = hazard_ratios_to_csv(hazard_ratios(fit));
    CHECK(csv.rfind("variable,coefficient,hazard_ratio,p_value,ci_lower,ci_upper\n", 0) == 0);
    CHECK(csv.find("her2_status,0.464,1.590,") != std::string::npos);  // exp(0.464) = 1.5904
}
