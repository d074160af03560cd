#pragma once

#include <Eigen/Core>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace survkit {

enum class Surgery { mastectomy, breast_conserving, none };
enum class Outcome { alive, died_breast_cancer, died_other };

const char* to_string(Surgery s);
const char* to_string(Outcome o);

// One cohort row. Optional fields are covariates that may be absent in the
// input; time and outcome are mandatory.
struct PatientRecord {
    std::string id;
    std::optional<double> age_years;       // (0, 130)
    std::optional<double> tumor_size_mm;   // (0, 500)
    std::optional<bool> er_status;
    std::optional<bool> her2_status;
    std::optional<bool> hormone_therapy;
    std::optional<bool> radiotherapy;
    std::optional<bool> chemotherapy;
    std::optional<Surgery> surgery;
    double survival_months = 0.0;          // > 0 (zero-time rows rejected at parse)
    Outcome outcome = Outcome::alive;

    bool has_missing() const;
    bool operator==(const PatientRecord&) const = default;
};

// Maps outcome classes onto the (time, event) pair used by the estimators.
// overall: any death is the event. cause_specific: only breast-cancer death
// is the event; other-cause deaths are censored at their death time.
enum class EventPolicy { overall, cause_specific };

EventPolicy parse_event_policy(std::string_view name);  // "overall" | "cause-specific"
const char* to_string(EventPolicy p);

// Column-oriented set of analysis-ready samples. covariates has one row per
// sample and one column per covariate_names entry (possibly zero columns).
struct SampleSet {
    std::vector<double> time;
    std::vector<int> event;                 // 1 = event observed, 0 = censored
    Eigen::MatrixXd covariates;
    std::vector<std::string> covariate_names;
    std::vector<std::size_t> source_rows;   // index into the originating record list

    std::size_t n() const { return time.size(); }
    std::size_t n_events() const;
};

struct RejectedRow {
    std::size_t row_number;  // 1-based line number in the file (header = line 1)
    std::string reason;
};

struct ParseOptions {
    // strict: rows with missing cells are rejected and an unparseable cell
    // aborts the parse with a SchemaError instead of rejecting the row.
    bool strict = false;
};

struct ParseResult {
    std::vector<PatientRecord> records;
    std::vector<RejectedRow> rejected;
};

// Exact 11-column schema; see encode_cohort for the canonical header.
ParseResult parse_cohort(std::string_view csv_text, const ParseOptions& options = {});

// Canonical CSV emission; parse_cohort(encode_cohort(r)) reproduces r.
std::string encode_cohort(const std::vector<PatientRecord>& records);

// (time, event) per record under the policy. Size-preserving: no covariates
// are attached, so no record is dropped.
SampleSet apply_event_policy(const std::vector<PatientRecord>& records, EventPolicy policy);

// Valid names for design_matrix / make_samples, in hazard-table order.
inline constexpr std::array<std::string_view, 8> kCovariateNames = {
    "age_years",      "tumor_size_mm", "er_status",    "her2_status",
    "hormone_therapy", "radiotherapy",  "chemotherapy", "mastectomy_flag",
};

struct DesignMatrix {
    Eigen::MatrixXd X;                      // complete-case rows only
    std::vector<std::string> names;         // column order = spec order
    std::vector<std::size_t> rows;          // record indices (complete cases)
};

// mastectomy_flag encodes surgery == mastectomy; breast_conserving and none
// both map to 0. Records missing any requested covariate are excluded.
DesignMatrix design_matrix(const std::vector<PatientRecord>& records,
                           const std::vector<std::string>& covariate_spec);

// Event policy + design matrix joined: complete-case samples with covariates.
SampleSet make_samples(const std::vector<PatientRecord>& records, EventPolicy policy,
                       const std::vector<std::string>& covariate_spec);

struct SummaryGroup {
    Outcome outcome;
    std::size_t n;
};

struct SummaryRow {
    std::string variable;
    bool continuous;
    // aligned with CohortSummary::groups
    std::vector<double> median, q1, q3;      // continuous rows
    std::vector<double> proportion;          // binary rows, in [0,1]
    std::vector<std::size_t> n_missing;
    double p_value;                          // NaN when not computable
    std::string test;                        // "kruskal-wallis" | "chi-square"
};

struct CohortSummary {
    std::vector<SummaryGroup> groups;        // nonempty groups, table order
    std::vector<Outcome> empty_groups;       // flagged, excluded from comparisons
    std::vector<SummaryRow> rows;
    std::size_t cohort_size = 0;
};

// Per-outcome-group medians/IQRs and proportions with cross-group p-values
// (Kruskal-Wallis for continuous, Pearson chi-square for binary).
CohortSummary summarize(const std::vector<PatientRecord>& records);

}  // namespace survkit
