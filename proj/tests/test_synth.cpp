#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "survkit/dataset.hpp"
#include "survkit/errors.hpp"
#include "survkit/synth.hpp"

using namespace survkit;

namespace {

// Kolmogorov-Smirnov distance against a CDF
double ks_distance(std::vector<double> values, const std::function<double(double)>& cdf) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        double f = cdf(values[i]);
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
    }
    return d;
}

synth::SynthSpec base_spec() {
    synth::SynthSpec spec;
    spec.n = 100;
    spec.seed = 1;
    spec.baseline_family = Family::exponential;
    spec.baseline.lambda = 1.0;
    return spec;
}

}  // namespace

TEST_CASE("no censoring means every subject has an event") {
    auto spec = base_spec();
    SampleSet s = synth::generate_samples(spec);
    CHECK(s.n_events() == s.n());
    for (double t : s.time) CHECK(t > 0.0);
}

TEST_CASE("unit exponential mean at beta = 0") {
    auto spec = base_spec();
    spec.n = 10000;
    spec.seed = 11;
    SampleSet s = synth::generate_samples(spec);
    double mean = 0.0;
    for (double t : s.time) mean += t;
    mean /= static_cast<double>(s.n());
    CHECK(std::fabs(mean - 1.0) < 0.05);
}

TEST_CASE("same seed reproduces byte-identical cohorts") {
    synth::SynthSpec spec = base_spec();
    spec.n = 500;
    spec.seed = 42;
    spec.censoring.kind = synth::Censoring::Kind::uniform;
    spec.censoring.param = 3.0;
    spec.covariates = {{"her2_status", synth::CovariateGen::Kind::bernoulli, 0.3, 0, 1, 0.4},
                       {"age_years", synth::CovariateGen::Kind::uniform, 0, 40, 80, 0.02}};
    spec.death_other_prob = 0.25;

    std::string a = encode_cohort(synth::generate_cohort(spec));
    std::string b = encode_cohort(synth::generate_cohort(spec));
    CHECK(a == b);

    spec.seed = 43;
    CHECK(encode_cohort(synth::generate_cohort(spec)) != a);
}

TEST_CASE("generation is independent of subject order") {
    // per-subject streams derive from (seed, index): drawing subject 5 alone
    // matches subject 5 inside a full run
    auto spec = base_spec();
    spec.n = 10;
    spec.seed = 99;
    SampleSet all = synth::generate_samples(spec);

    synth::SplitMix64 probe = synth::subject_stream(99, 5);
    double u = probe.next_u01();
    double expected_t = 1.0 * (-std::log(u));
    CHECK(all.time[5] == expected_t);
}

TEST_CASE("inverse transform matches each baseline CDF") {
    auto check_family = [](Family f, double lambda, double gamma, std::uint64_t seed,
                           const std::function<double(double)>& cdf) {
        synth::SynthSpec spec;
        spec.n = 10000;
        spec.seed = seed;
        spec.baseline_family = f;
        spec.baseline.lambda = lambda;
        spec.baseline.gamma = gamma;
        SampleSet s = synth::generate_samples(spec);
        CHECK(ks_distance(s.time, cdf) < 0.02);
    };
    check_family(Family::exponential, 1.0, 1.0, 11,
                 [](double t) { return 1.0 - std::exp(-t); });
    check_family(Family::weibull, 10.0, 1.5, 12,
                 [](double t) { return 1.0 - std::exp(-std::pow(t / 10.0, 1.5)); });
    check_family(Family::loglogistic, 2.0, 3.0, 13,
                 [](double t) { return 1.0 - 1.0 / (1.0 + std::pow(t / 2.0, 3.0)); });
}

TEST_CASE("censoring fraction tracks the analytic value") {
    // exponential baseline scale lambda + exponential censoring rate c:
    // P(censored) = c / (c + 1/lambda)
    auto spec = base_spec();
    spec.n = 10000;
    spec.seed = 42;
    spec.censoring.kind = synth::Censoring::Kind::exponential;
    spec.censoring.param = 0.45;
    SampleSet s = synth::generate_samples(spec);
    double censored = static_cast<double>(s.n() - s.n_events()) / static_cast<double>(s.n());
    double expected = 0.45 / (0.45 + 1.0);
    CHECK(std::fabs(censored - expected) < 0.03);
}

TEST_CASE("proportional-hazards construction shifts the binary-group hazard") {
    // with baseline exp(1) and beta = log 2 on a balanced binary covariate,
    // the treated group's uncensored mean time is half the baseline's
    synth::SynthSpec spec = base_spec();
    spec.n = 20000;
    spec.seed = 7;
    spec.covariates = {{"x", synth::CovariateGen::Kind::bernoulli, 0.5, 0, 1, std::log(2.0)}};
    SampleSet s = synth::generate_samples(spec);
    double m0 = 0, m1 = 0, n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < s.n(); ++i) {
        if (s.covariates(static_cast<Eigen::Index>(i), 0) > 0.5) {
            m1 += s.time[i];
            n1 += 1;
        } else {
            m0 += s.time[i];
            n0 += 1;
        }
    }
    CHECK(std::fabs(m0 / n0 - 1.0) < 0.05);
    CHECK(std::fabs(m1 / n1 - 0.5) < 0.03);
}

TEST_CASE("record mode maps covariates onto the schema") {
    synth::SynthSpec spec = base_spec();
    spec.n = 200;
    spec.seed = 3;
    spec.censoring.kind = synth::Censoring::Kind::uniform;
    spec.censoring.param = 2.0;
    spec.covariates = {
        {"age_years", synth::CovariateGen::Kind::uniform, 0, 40, 80, 0.0},
        {"her2_status", synth::CovariateGen::Kind::bernoulli, 0.3, 0, 1, 0.0},
        {"mastectomy_flag", synth::CovariateGen::Kind::bernoulli, 0.5, 0, 1, 0.0},
    };
    spec.death_other_prob = 0.4;
    auto records = synth::generate_cohort(spec);
    REQUIRE(records.size() == 200);

    bool saw_mastectomy = false, saw_conserving = false, saw_other = false, saw_bc = false,
         saw_alive = false;
    for (const auto& r : records) {
        CHECK_FALSE(r.has_missing());  // defaults fill the unlisted fields
        CHECK(r.age_years >= 40.0);
        CHECK(r.age_years <= 80.0);
        CHECK(r.survival_months > 0.0);
        saw_mastectomy |= r.surgery == Surgery::mastectomy;
        saw_conserving |= r.surgery == Surgery::breast_conserving;
        saw_other |= r.outcome == Outcome::died_other;
        saw_bc |= r.outcome == Outcome::died_breast_cancer;
        saw_alive |= r.outcome == Outcome::alive;
    }
    CHECK(saw_mastectomy);
    CHECK(saw_conserving);
    CHECK(saw_other);
    CHECK(saw_bc);
    CHECK(saw_alive);

    // ids are unique and stable
    CHECK(records[0].id == "S000001");
    CHECK(records[199].id == "S000200");

    // abstract mode with the same spec shares times and events
    SampleSet s = synth::generate_samples(spec);
    for (std::size_t i = 0; i < 200; ++i) {
        CHECK(s.time[i] == records[i].survival_months);
        CHECK((s.event[i] == 1) == (records[i].outcome != Outcome::alive));
    }
}

TEST_CASE("summary of a generated cohort reproduces the generating marginals") {
    synth::SynthSpec spec = base_spec();
    spec.n = 4000;
    spec.seed = 1557;
    spec.baseline.lambda = 80.0;
    spec.censoring.kind = synth::Censoring::Kind::uniform;
    spec.censoring.param = 160.0;
    spec.covariates = {
        {"age_years", synth::CovariateGen::Kind::uniform, 0, 40, 80, 0.0},
        {"tumor_size_mm", synth::CovariateGen::Kind::uniform, 0, 10, 50, 0.0},
        {"er_status", synth::CovariateGen::Kind::bernoulli, 0.76, 0, 1, 0.0},
        {"chemotherapy", synth::CovariateGen::Kind::bernoulli, 0.25, 0, 1, 0.0},
        {"mastectomy_flag", synth::CovariateGen::Kind::bernoulli, 0.55, 0, 1, 0.0},
    };
    spec.death_other_prob = 0.43;
    auto records = synth::generate_cohort(spec);
    CohortSummary summary = summarize(records);

    // pooled proportions/medians should land on the generating marginals
    // within sampling error at n = 4000
    std::map<std::string, const SummaryRow*> rows;
    for (const auto& r : summary.rows) rows[r.variable] = &r;
    auto pooled_prop = [&](const std::string& var) {
        double num = 0.0, den = 0.0;
        const SummaryRow* r = rows.at(var);
        for (std::size_t g = 0; g < summary.groups.size(); ++g) {
            double ng = static_cast<double>(summary.groups[g].n - r->n_missing[g]);
            num += r->proportion[g] * ng;
            den += ng;
        }
        return num / den;
    };
    CHECK(std::fabs(pooled_prop("er_status") - 0.76) < 0.03);
    CHECK(std::fabs(pooled_prop("chemotherapy") - 0.25) < 0.03);
    CHECK(std::fabs(pooled_prop("mastectomy") - 0.55) < 0.03);
    // uniform(40, 80) ages: every group median near 60
    for (double m : rows.at("age_years")->median) CHECK(std::fabs(m - 60.0) < 3.0);
    REQUIRE(summary.groups.size() == 3);  // death_other_prob splits the deaths
}

TEST_CASE("spec validation") {
    synth::SynthSpec bad = base_spec();
    bad.n = 0;
    CHECK_THROWS_AS(bad.validate(false), SchemaError);

    synth::SynthSpec neg = base_spec();
    neg.baseline.lambda = -1.0;
    CHECK_THROWS_AS(neg.validate(false), SchemaError);

    synth::SynthSpec unknown = base_spec();
    unknown.covariates = {{"weird", synth::CovariateGen::Kind::bernoulli, 0.5, 0, 1, 0.0}};
    CHECK_NOTHROW(unknown.validate(false));  // abstract mode allows any name
    CHECK_THROWS_AS(unknown.validate(true), SchemaError);

    synth::SynthSpec wrong_kind = base_spec();
    wrong_kind.covariates = {{"age_years", synth::CovariateGen::Kind::bernoulli, 0.5, 0, 1, 0.0}};
    CHECK_THROWS_AS(wrong_kind.validate(true), SchemaError);
}

TEST_CASE("spec JSON round trip") {
    std::string text = R"({
        "n": 50, "seed": 9,
        "baseline": {"family": "weibull", "lambda": 12.0, "gamma": 1.5},
        "censoring": {"kind": "exponential", "rate": 0.1},
        "covariates": [
            {"name": "her2_status", "dist": "bernoulli", "p": 0.3, "beta": 0.46},
            {"name": "age_years", "dist": "uniform", "lo": 40, "hi": 80, "beta": 0.04}
        ],
        "death_other_prob": 0.2
    })";
    auto spec = synth::spec_from_json(text);
    CHECK(spec.n == 50);
    CHECK(spec.baseline_family == Family::weibull);
    CHECK(spec.baseline.gamma == 1.5);
    CHECK(spec.censoring.kind == synth::Censoring::Kind::exponential);
    REQUIRE(spec.covariates.size() == 2);
    CHECK(spec.covariates[0].beta == 0.46);
    CHECK(spec.covariates[1].hi == 80.0);
    CHECK(spec.death_other_prob == 0.2);

    auto back = synth::spec_from_json(synth::spec_to_json(spec));
    CHECK(back.n == spec.n);
    CHECK(back.seed == spec.seed);
    CHECK(back.covariates.size() == spec.covariates.size());
    CHECK(encode_cohort(synth::generate_cohort(back)) ==
          encode_cohort(synth::generate_cohort(spec)));

    CHECK_THROWS_AS(synth::spec_from_json("{"), SchemaError);
    CHECK_THROWS_AS(synth::spec_from_json("{\"n\": 5}"), SchemaError);
}
