#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "survkit/dataset.hpp"
#include "survkit/parametric.hpp"

namespace survkit::synth {

// splitmix64: fixed 64-bit-state generator; per-subject streams are derived
// from (seed, subject index), so generation is order-independent and
// byte-reproducible.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // uniform on the open interval (0,1)
    double next_u01() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
};

SplitMix64 subject_stream(std::uint64_t seed, std::uint64_t subject_index);

struct CovariateGen {
    enum class Kind { bernoulli, uniform };
    std::string name;
    Kind kind = Kind::bernoulli;
    double p = 0.5;              // bernoulli
    double lo = 0.0, hi = 1.0;   // uniform
    double beta = 0.0;           // true log-hazard-ratio
};

struct Censoring {
    enum class Kind { none, uniform, exponential };
    Kind kind = Kind::none;
    double param = 0.0;  // uniform: max; exponential: rate
};

struct SynthSpec {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    Family baseline_family = Family::exponential;
    ParametricParams baseline;
    Censoring censoring;
    std::vector<CovariateGen> covariates;
    double death_other_prob = 0.0;  // record mode: fraction of events that are
                                    // other-cause deaths

    void validate(bool record_mode) const;  // throws SchemaError
};

SynthSpec spec_from_json(const std::string& text);
std::string spec_to_json(const SynthSpec& spec);

// Record mode: covariate names must come from the cohort schema; unlisted
// fields are filled with fixed defaults so records are complete-case.
std::vector<PatientRecord> generate_cohort(const SynthSpec& spec);

// Abstract mode: raw samples with arbitrary covariate names.
SampleSet generate_samples(const SynthSpec& spec);

}  // namespace survkit::synth
