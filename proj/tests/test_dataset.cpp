#include <doctest.h>

#include <cmath>
#include <string>

#include "survkit/dataset.hpp"
#include "survkit/stats.hpp"
#include "survkit/errors.hpp"
#include "survkit/synth.hpp"

using namespace survkit;

namespace {

const std::string kHeaderLine =
    "id,age_years,tumor_size_mm,er_status,her2_status,hormone_therapy,"
    "radiotherapy,chemotherapy,surgery,survival_months,outcome";

std::string row(const std::string& cells) { return kHeaderLine + "\n" + cells + "\n"; }

PatientRecord basic_record(const std::string& id, double months, Outcome outcome) {
    PatientRecord r;
    r.id = id;
    r.age_years = 60.0;
    r.tumor_size_mm = 20.0;
    r.er_status = true;
    r.her2_status = false;
    r.hormone_therapy = false;
    r.radiotherapy = true;
    r.chemotherapy = false;
    r.surgery = Surgery::mastectomy;
    r.survival_months = months;
    r.outcome = outcome;
    return r;
}

// seeded record generator, with occasional missing fields, for the
// round-trip property
std::vector<PatientRecord> random_records(std::uint64_t seed, std::size_t n) {
    synth::SplitMix64 rng{seed};
    std::vector<PatientRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        PatientRecord r;
        r.id = "P" + std::to_string(i);
        if (rng.next_u01() > 0.1) r.age_years = 20.0 + 90.0 * rng.next_u01();
        if (rng.next_u01() > 0.1) r.tumor_size_mm = 1.0 + 100.0 * rng.next_u01();
        if (rng.next_u01() > 0.1) r.er_status = rng.next_u01() < 0.7;
        if (rng.next_u01() > 0.1) r.her2_status = rng.next_u01() < 0.3;
        if (rng.next_u01() > 0.1) r.hormone_therapy = rng.next_u01() < 0.5;
        if (rng.next_u01() > 0.1) r.radiotherapy = rng.next_u01() < 0.5;
        if (rng.next_u01() > 0.1) r.chemotherapy = rng.next_u01() < 0.25;
        if (rng.next_u01() > 0.1) {
            double u = rng.next_u01();
            r.surgery = u < 0.4 ? Surgery::mastectomy
                                : (u < 0.9 ? Surgery::breast_conserving : Surgery::none);
        }
        r.survival_months = 0.5 + 200.0 * rng.next_u01();
        double u = rng.next_u01();
        r.outcome = u < 0.4 ? Outcome::alive
                            : (u < 0.75 ? Outcome::died_breast_cancer : Outcome::died_other);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

TEST_CASE("parse: header-only file is an empty cohort") {
    auto result = parse_cohort(kHeaderLine + "\n");
    CHECK(result.records.empty());
    CHECK(result.rejected.empty());
}

TEST_CASE("parse: well-formed row") {
    auto result = parse_cohort(
        row("p1,62,25,pos,neg,0,1,true,mastectomy,48.5,died_breast_cancer"));
    REQUIRE(result.records.size() == 1);
    CHECK(result.rejected.empty());
    const auto& r = result.records[0];
    CHECK(r.id == "p1");
    CHECK(r.age_years == 62.0);
    CHECK(r.tumor_size_mm == 25.0);
    CHECK(r.er_status == true);
    CHECK(r.her2_status == false);
    CHECK(r.hormone_therapy == false);
    CHECK(r.radiotherapy == true);
    CHECK(r.chemotherapy == true);
    CHECK(r.surgery == Surgery::mastectomy);
    CHECK(r.survival_months == 48.5);
    CHECK(r.outcome == Outcome::died_breast_cancer);
    CHECK_FALSE(r.has_missing());
}

TEST_CASE("parse: out-of-range and zero-time rows are rejected with reasons") {
    auto result = parse_cohort(
        row("p1,62,-3,1,0,0,0,0,none,10,alive") +
        "p2,62,25,1,0,0,0,0,none,0,alive\n"
        "p3,200,25,1,0,0,0,0,none,10,alive\n"
        "p4,62,25,1,0,0,0,0,none,10,alive\n");
    CHECK(result.records.size() == 1);
    REQUIRE(result.rejected.size() == 3);
    CHECK(result.rejected[0].row_number == 2);
    CHECK(result.rejected[0].reason == "tumor_size_mm out of range");
    CHECK(result.rejected[1].reason == "survival_months must be positive");
    CHECK(result.rejected[2].reason == "age_years out of range");
}

TEST_CASE("parse: schema errors name the column") {
    std::string no_outcome =
        "id,age_years,tumor_size_mm,er_status,her2_status,hormone_therapy,"
        "radiotherapy,chemotherapy,surgery,survival_months\n";
    CHECK_THROWS_WITH_AS(parse_cohort(no_outcome), "missing mandatory column: outcome",
                         SchemaError);
    CHECK_THROWS_AS(parse_cohort(kHeaderLine + ",extra_col\n"), SchemaError);
    CHECK_THROWS_AS(parse_cohort(""), SchemaError);
    // duplicate column
    CHECK_THROWS_AS(parse_cohort(kHeaderLine + ",id\n"), SchemaError);
}

TEST_CASE("parse: unparseable cell rejects the row; strict mode makes it fatal") {
    std::string text = row("p1,sixty,25,1,0,0,0,0,none,10,alive");
    auto lax = parse_cohort(text);
    CHECK(lax.records.empty());
    REQUIRE(lax.rejected.size() == 1);
    CHECK(lax.rejected[0].reason == "invalid age_years");

    CHECK_THROWS_AS(parse_cohort(text, {true}), SchemaError);
}

TEST_CASE("parse: missing cells kept by default, rejected in strict mode") {
    std::string text = row("p1,,25,1,0,0,0,0,none,10,alive");
    auto lax = parse_cohort(text);
    REQUIRE(lax.records.size() == 1);
    CHECK_FALSE(lax.records[0].age_years.has_value());
    CHECK(lax.records[0].has_missing());

    auto strict = parse_cohort(text, {true});
    CHECK(strict.records.empty());
    REQUIRE(strict.rejected.size() == 1);
    CHECK(strict.rejected[0].reason == "missing value: age_years");
}

TEST_CASE("parse: column order is located by name") {
    std::string shuffled =
        "outcome,id,survival_months,age_years,tumor_size_mm,er_status,her2_status,"
        "hormone_therapy,radiotherapy,chemotherapy,surgery\n"
        "alive,p9,12,44,18,1,0,0,1,0,none\n";
    auto result = parse_cohort(shuffled);
    REQUIRE(result.records.size() == 1);
    CHECK(result.records[0].id == "p9");
    CHECK(result.records[0].age_years == 44.0);
}

TEST_CASE("round-trip: encode then parse reproduces the records") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        auto records = random_records(seed, 40);
        auto reparsed = parse_cohort(encode_cohort(records));
        CHECK(reparsed.rejected.empty());
        REQUIRE(reparsed.records.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) CHECK(reparsed.records[i] == records[i]);
    }
}

TEST_CASE("event policy definitions") {
    std::vector<PatientRecord> records = {basic_record("a", 10, Outcome::alive),
                                          basic_record("b", 20, Outcome::died_breast_cancer),
                                          basic_record("c", 30, Outcome::died_other)};
    auto overall = apply_event_policy(records, EventPolicy::overall);
    CHECK(overall.event == std::vector<int>{0, 1, 1});
    auto cs = apply_event_policy(records, EventPolicy::cause_specific);
    CHECK(cs.event == std::vector<int>{0, 1, 0});
    // time passes through unchanged
    CHECK(overall.time == std::vector<double>{10, 20, 30});

    // empty input is fine
    CHECK(apply_event_policy({}, EventPolicy::overall).n() == 0);
}

TEST_CASE("event policy on the published group sizes") {
    std::vector<PatientRecord> records;
    for (int i = 0; i < 501; ++i)
        records.push_back(basic_record("bc" + std::to_string(i), 10, Outcome::died_breast_cancer));
    for (int i = 0; i < 383; ++i)
        records.push_back(basic_record("oc" + std::to_string(i), 10, Outcome::died_other));
    for (int i = 0; i < 673; ++i)
        records.push_back(basic_record("al" + std::to_string(i), 10, Outcome::alive));

    auto samples = apply_event_policy(records, EventPolicy::overall);
    CHECK(samples.n() == records.size());  // size-preserving
    CHECK(samples.n_events() == 884);
    CHECK(samples.n() - samples.n_events() == 673);

    auto cs = apply_event_policy(records, EventPolicy::cause_specific);
    CHECK(cs.n_events() == 501);
}

TEST_CASE("design matrix encoding") {
    auto r = basic_record("p", 10, Outcome::alive);
    r.age_years = 62.0;
    r.her2_status = true;
    r.surgery = Surgery::breast_conserving;

    auto dm1 = design_matrix({r}, {"age_years"});
    REQUIRE(dm1.X.rows() == 1);
    CHECK(dm1.X(0, 0) == 62.0);

    auto dm2 = design_matrix({r}, {"her2_status", "mastectomy_flag"});
    CHECK(dm2.X(0, 0) == 1.0);
    CHECK(dm2.X(0, 1) == 0.0);

    std::vector<std::string> full(kCovariateNames.begin(), kCovariateNames.end());
    auto dm3 = design_matrix({r}, full);
    CHECK(dm3.X.cols() == 8);
    CHECK(dm3.names == full);

    CHECK_THROWS_AS(design_matrix({r}, {"shoe_size"}), ConfigError);
}

TEST_CASE("design matrix drops incomplete rows only") {
    auto a = basic_record("a", 10, Outcome::alive);
    auto b = basic_record("b", 10, Outcome::alive);
    b.tumor_size_mm.reset();
    auto dm = design_matrix({a, b}, {"age_years", "tumor_size_mm"});
    CHECK(dm.rows == std::vector<std::size_t>{0});
    // the same spec without the missing field keeps both
    auto dm2 = design_matrix({a, b}, {"age_years"});
    CHECK(dm2.rows.size() == 2);
}

TEST_CASE("summarize: medians, partition, empty-group flag") {
    std::vector<PatientRecord> records;
    double ages[] = {51, 62, 71};
    for (int i = 0; i < 3; ++i) {
        auto r = basic_record("d" + std::to_string(i), 10, Outcome::died_breast_cancer);
        r.age_years = ages[i];
        records.push_back(r);
    }
    for (int i = 0; i < 4; ++i)
        records.push_back(basic_record("a" + std::to_string(i), 10, Outcome::alive));

    auto s = summarize(records);
    CHECK(s.cohort_size == 7);
    REQUIRE(s.groups.size() == 2);
    CHECK(s.groups[0].outcome == Outcome::died_breast_cancer);
    CHECK(s.groups[0].n == 3);
    CHECK(s.groups[1].n == 4);
    REQUIRE(s.empty_groups.size() == 1);
    CHECK(s.empty_groups[0] == Outcome::died_other);

    std::size_t total = 0;
    for (const auto& g : s.groups) total += g.n;
    CHECK(total == s.cohort_size);

    CHECK(s.rows[0].variable == "age_years");
    CHECK(s.rows[0].median[0] == 62.0);
    CHECK(s.rows[0].q1[0] == 56.5);
    CHECK(s.rows[0].q3[0] == 66.5);

    CHECK_THROWS_AS(summarize({}), DegenerateDataError);
}

TEST_CASE("summarize: identical value multisets give p near 1") {
    // oracle: a permutation test cannot distinguish identical groups; the
    // rank statistic is exactly 0 and p = 1
    std::vector<PatientRecord> records;
    double ages[] = {45, 52, 60, 67, 71};
    for (int i = 0; i < 5; ++i) {
        auto r = basic_record("d" + std::to_string(i), 10, Outcome::died_breast_cancer);
        r.age_years = ages[i];
        records.push_back(r);
        auto r2 = basic_record("a" + std::to_string(i), 10, Outcome::alive);
        r2.age_years = ages[i];
        records.push_back(r2);
    }
    auto s = summarize(records);
    CHECK(s.rows[0].variable == "age_years");
    CHECK(s.rows[0].p_value >= 0.99);
}

TEST_CASE("summarize: continuous p-value tracks a permutation oracle") {
    // 10k-shuffle permutation test on the rank statistic, seeded; the
    // chi-square approximation should land near it
    synth::SplitMix64 rng{991};
    std::vector<double> a, b;
    for (int i = 0; i < 18; ++i) a.push_back(rng.next_u01() * 10.0);
    for (int i = 0; i < 18; ++i) b.push_back(rng.next_u01() * 10.0 + 1.8);

    auto observed = stats::kruskal_wallis({a, b});

    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    int exceed = 0;
    const int shuffles = 10000;
    for (int s = 0; s < shuffles; ++s) {
        // Fisher-Yates with the seeded generator
        std::vector<double> perm = pooled;
        for (std::size_t i = perm.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(rng.next_u01() * static_cast<double>(i));
            if (j >= i) j = i - 1;
            std::swap(perm[i - 1], perm[j]);
        }
        std::vector<double> pa(perm.begin(), perm.begin() + 18);
        std::vector<double> pb(perm.begin() + 18, perm.end());
        if (stats::kruskal_wallis({pa, pb}).statistic >= observed.statistic) ++exceed;
    }
    double p_perm = static_cast<double>(exceed) / shuffles;
    CHECK(std::fabs(observed.p_value - p_perm) < 0.05);
}

TEST_CASE("make_samples joins policy with complete-case covariates") {
    auto a = basic_record("a", 12, Outcome::died_breast_cancer);
    auto b = basic_record("b", 24, Outcome::alive);
    auto c = basic_record("c", 36, Outcome::died_other);
    c.her2_status.reset();
    auto samples = make_samples({a, b, c}, EventPolicy::overall, {"her2_status"});
    CHECK(samples.n() == 2);
    CHECK(samples.source_rows == std::vector<std::size_t>{0, 1});
    CHECK(samples.event == std::vector<int>{1, 0});
    CHECK(samples.covariate_names == std::vector<std::string>{"her2_status"});
}
