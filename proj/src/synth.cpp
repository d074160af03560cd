#include "survkit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "survkit/errors.hpp"

#include <nlohmann/json.hpp>

namespace survkit::synth {

SplitMix64 subject_stream(std::uint64_t seed, std::uint64_t subject_index) {
    SplitMix64 root{seed};
    std::uint64_t a = root.next();
    SplitMix64 s{a ^ ((subject_index + 1) * 0xD1B54A32D192ED03ULL)};
    s.next();  // decorrelate the stream head from the xor pattern
    return s;
}

void SynthSpec::validate(bool record_mode) const {
    if (n < 1) throw SchemaError("synth spec: n must be >= 1");
    if (!(baseline.lambda > 0.0)) throw SchemaError("synth spec: baseline lambda must be > 0");
    if (baseline_family != Family::exponential && !(baseline.gamma > 0.0))
        throw SchemaError("synth spec: baseline gamma must be > 0");
    switch (censoring.kind) {
        case Censoring::Kind::none:
            break;
        case Censoring::Kind::uniform:
            if (!(censoring.param > 0.0))
                throw SchemaError("synth spec: uniform censoring max must be > 0");
            break;
        case Censoring::Kind::exponential:
            if (!(censoring.param > 0.0))
                throw SchemaError("synth spec: exponential censoring rate must be > 0");
            break;
    }
    if (death_other_prob < 0.0 || death_other_prob > 1.0)
        throw SchemaError("synth spec: death_other_prob must be in [0,1]");
    for (const auto& c : covariates) {
        if (c.kind == CovariateGen::Kind::bernoulli) {
            if (c.p < 0.0 || c.p > 1.0)
                throw SchemaError("synth spec: bernoulli p must be in [0,1] for " + c.name);
        } else {
            if (!(c.lo < c.hi))
                throw SchemaError("synth spec: uniform needs lo < hi for " + c.name);
        }
        if (record_mode) {
            bool known = std::find(kCovariateNames.begin(), kCovariateNames.end(), c.name) !=
                         kCovariateNames.end();
            if (!known)
                throw SchemaError("synth spec: covariate not in the cohort schema: " + c.name);
            bool is_continuous = c.name == "age_years" || c.name == "tumor_size_mm";
            if (is_continuous && c.kind != CovariateGen::Kind::uniform)
                throw SchemaError("synth spec: " + c.name + " requires a uniform generator");
            if (!is_continuous && c.kind != CovariateGen::Kind::bernoulli)
                throw SchemaError("synth spec: " + c.name + " requires a bernoulli generator");
            if (c.name == "age_years" && !(c.lo > 0.0 && c.hi < 130.0))
                throw SchemaError("synth spec: age_years range must lie in (0,130)");
            if (c.name == "tumor_size_mm" && !(c.lo > 0.0 && c.hi < 500.0))
                throw SchemaError("synth spec: tumor_size_mm range must lie in (0,500)");
        }
    }
}

namespace {

struct Draw {
    std::vector<double> x;
    double time = 0.0;
    int event = 0;
    bool other_cause = false;
};

// Inverse-transform sampling under the proportional-hazards construction:
// S(t|x) = S0(t)^exp(beta.x), so S0(t) = u^exp(-beta.x) at survival quantile u.
Draw draw_subject(const SynthSpec& spec, std::size_t index) {
    SplitMix64 rng = subject_stream(spec.seed, index);
    Draw d;
    d.x.reserve(spec.covariates.size());
    double lp = 0.0;
    for (const auto& c : spec.covariates) {
        double u = rng.next_u01();
        double v = c.kind == CovariateGen::Kind::bernoulli ? (u < c.p ? 1.0 : 0.0)
                                                           : c.lo + u * (c.hi - c.lo);
        d.x.push_back(v);
        lp += c.beta * v;
    }

    double u = rng.next_u01();
    double ub = std::pow(u, std::exp(-lp));  // baseline survival quantile
    double t;
    switch (spec.baseline_family) {
        case Family::exponential:
            t = spec.baseline.lambda * (-std::log(ub));
            break;
        case Family::weibull:
            t = spec.baseline.lambda * std::pow(-std::log(ub), 1.0 / spec.baseline.gamma);
            break;
        case Family::loglogistic:
            t = spec.baseline.lambda * std::pow((1.0 - ub) / ub, 1.0 / spec.baseline.gamma);
            break;
        default:
            t = 0.0;
    }

    double uc = rng.next_u01();
    double c = std::numeric_limits<double>::infinity();
    switch (spec.censoring.kind) {
        case Censoring::Kind::none:
            break;
        case Censoring::Kind::uniform:
            c = spec.censoring.param * uc;
            break;
        case Censoring::Kind::exponential:
            c = -std::log(uc) / spec.censoring.param;
            break;
    }

    double uo = rng.next_u01();  // other-cause split, drawn unconditionally so
                                 // record and abstract modes share event times
    d.time = std::min(t, c);
    d.event = t <= c ? 1 : 0;
    d.other_cause = d.event && uo < spec.death_other_prob;
    // times must stay strictly positive for downstream estimators
    if (d.time <= 0.0) d.time = std::numeric_limits<double>::min();
    return d;
}

}  // namespace

SampleSet generate_samples(const SynthSpec& spec) {
    spec.validate(false);
    SampleSet s;
    s.time.resize(spec.n);
    s.event.resize(spec.n);
    s.covariates.resize(static_cast<Eigen::Index>(spec.n),
                        static_cast<Eigen::Index>(spec.covariates.size()));
    for (const auto& c : spec.covariates) s.covariate_names.push_back(c.name);
    s.source_rows.resize(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Draw d = draw_subject(spec, i);
        s.time[i] = d.time;
        s.event[i] = d.event;
        for (std::size_t j = 0; j < d.x.size(); ++j)
            s.covariates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d.x[j];
        s.source_rows[i] = i;
    }
    return s;
}

std::vector<PatientRecord> generate_cohort(const SynthSpec& spec) {
    spec.validate(true);
    std::vector<PatientRecord> records;
    records.reserve(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        Draw d = draw_subject(spec, i);

        PatientRecord rec;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "S%06zu", i + 1);
        rec.id = idbuf;
        // neutral defaults; listed covariates overwrite below
        rec.age_years = 60.0;
        rec.tumor_size_mm = 20.0;
        rec.er_status = false;
        rec.her2_status = false;
        rec.hormone_therapy = false;
        rec.radiotherapy = false;
        rec.chemotherapy = false;
        rec.surgery = Surgery::breast_conserving;

        for (std::size_t j = 0; j < spec.covariates.size(); ++j) {
            const auto& name = spec.covariates[j].name;
            double v = d.x[j];
            if (name == "age_years") rec.age_years = v;
            else if (name == "tumor_size_mm") rec.tumor_size_mm = v;
            else if (name == "er_status") rec.er_status = v != 0.0;
            else if (name == "her2_status") rec.her2_status = v != 0.0;
            else if (name == "hormone_therapy") rec.hormone_therapy = v != 0.0;
            else if (name == "radiotherapy") rec.radiotherapy = v != 0.0;
            else if (name == "chemotherapy") rec.chemotherapy = v != 0.0;
            else if (name == "mastectomy_flag")
                rec.surgery = v != 0.0 ? Surgery::mastectomy : Surgery::breast_conserving;
        }

        rec.survival_months = d.time;
        rec.outcome = d.event ? (d.other_cause ? Outcome::died_other : Outcome::died_breast_cancer)
                              : Outcome::alive;
        records.push_back(std::move(rec));
    }
    return records;
}

SynthSpec spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("synth spec: invalid JSON: ") + e.what());
    }
    try {
        SynthSpec spec;
        spec.n = j.at("n").get<std::size_t>();
        spec.seed = j.at("seed").get<std::uint64_t>();

        const auto& b = j.at("baseline");
        spec.baseline_family = parse_family(b.at("family").get<std::string>());
        spec.baseline.lambda = b.at("lambda").get<double>();
        if (spec.baseline_family != Family::exponential)
            spec.baseline.gamma = b.at("gamma").get<double>();

        if (j.contains("censoring")) {
            const auto& c = j.at("censoring");
            std::string kind = c.at("kind").get<std::string>();
            if (kind == "none") {
                spec.censoring.kind = Censoring::Kind::none;
            } else if (kind == "uniform") {
                spec.censoring.kind = Censoring::Kind::uniform;
                spec.censoring.param = c.at("max").get<double>();
            } else if (kind == "exponential") {
                spec.censoring.kind = Censoring::Kind::exponential;
                spec.censoring.param = c.at("rate").get<double>();
            } else {
                throw SchemaError("synth spec: unknown censoring kind: " + kind);
            }
        }

        if (j.contains("covariates")) {
            for (const auto& cj : j.at("covariates")) {
                CovariateGen g;
                g.name = cj.at("name").get<std::string>();
                std::string dist = cj.at("dist").get<std::string>();
                if (dist == "bernoulli") {
                    g.kind = CovariateGen::Kind::bernoulli;
                    g.p = cj.at("p").get<double>();
                } else if (dist == "uniform") {
                    g.kind = CovariateGen::Kind::uniform;
                    g.lo = cj.at("lo").get<double>();
                    g.hi = cj.at("hi").get<double>();
                } else {
                    throw SchemaError("synth spec: unknown covariate dist: " + dist);
                }
                g.beta = cj.value("beta", 0.0);
                spec.covariates.push_back(std::move(g));
            }
        }
        spec.death_other_prob = j.value("death_other_prob", 0.0);
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("synth spec: ") + e.what());
    }
}

std::string spec_to_json(const SynthSpec& spec) {
    nlohmann::json j;
    j["n"] = spec.n;
    j["seed"] = spec.seed;
    nlohmann::json b;
    b["family"] = to_string(spec.baseline_family);
    b["lambda"] = spec.baseline.lambda;
    if (spec.baseline_family != Family::exponential) b["gamma"] = spec.baseline.gamma;
    j["baseline"] = b;
    nlohmann::json c;
    switch (spec.censoring.kind) {
        case Censoring::Kind::none:
            c["kind"] = "none";
            break;
        case Censoring::Kind::uniform:
            c["kind"] = "uniform";
            c["max"] = spec.censoring.param;
            break;
        case Censoring::Kind::exponential:
            c["kind"] = "exponential";
            c["rate"] = spec.censoring.param;
            break;
    }
    j["censoring"] = c;
    auto covs = nlohmann::json::array();
    for (const auto& g : spec.covariates) {
        nlohmann::json cj;
        cj["name"] = g.name;
        if (g.kind == CovariateGen::Kind::bernoulli) {
            cj["dist"] = "bernoulli";
            cj["p"] = g.p;
        } else {
            cj["dist"] = "uniform";
            cj["lo"] = g.lo;
            cj["hi"] = g.hi;
        }
        cj["beta"] = g.beta;
        covs.push_back(cj);
    }
    j["covariates"] = covs;
    j["death_other_prob"] = spec.death_other_prob;
    return j.dump(2) + "\n";
}

}  // namespace survkit::synth
