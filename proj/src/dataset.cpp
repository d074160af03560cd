#include "survkit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "survkit/errors.hpp"
#include "survkit/numfmt.hpp"
#include "survkit/stats.hpp"

namespace survkit {

namespace {

constexpr std::array<std::string_view, 11> kHeader = {
    "id",           "age_years",       "tumor_size_mm", "er_status",
    "her2_status",  "hormone_therapy", "radiotherapy",  "chemotherapy",
    "surgery",      "survival_months", "outcome",
};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            cells.push_back(trim(line.substr(start)));
            break;
        }
        cells.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return cells;
}

bool parse_double(std::string_view s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

bool parse_binary(std::string_view s, bool& out) {
    std::string t = lower(s);
    if (t == "1" || t == "true" || t == "pos" || t == "positive") { out = true; return true; }
    if (t == "0" || t == "false" || t == "neg" || t == "negative") { out = false; return true; }
    return false;
}

bool parse_surgery(std::string_view s, Surgery& out) {
    std::string t = lower(s);
    if (t == "mastectomy") { out = Surgery::mastectomy; return true; }
    if (t == "breast_conserving") { out = Surgery::breast_conserving; return true; }
    if (t == "none") { out = Surgery::none; return true; }
    return false;
}

bool parse_outcome(std::string_view s, Outcome& out) {
    std::string t = lower(s);
    if (t == "alive") { out = Outcome::alive; return true; }
    if (t == "died_breast_cancer") { out = Outcome::died_breast_cancer; return true; }
    if (t == "died_other") { out = Outcome::died_other; return true; }
    return false;
}

// Thrown internally to carry a per-row rejection reason.
struct RowReject {
    std::string reason;
};

}  // namespace

const char* to_string(Surgery s) {
    switch (s) {
        case Surgery::mastectomy: return "mastectomy";
        case Surgery::breast_conserving: return "breast_conserving";
        case Surgery::none: return "none";
    }
    return "?";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::alive: return "alive";
        case Outcome::died_breast_cancer: return "died_breast_cancer";
        case Outcome::died_other: return "died_other";
    }
    return "?";
}

EventPolicy parse_event_policy(std::string_view name) {
    std::string t = lower(name);
    if (t == "overall") return EventPolicy::overall;
    if (t == "cause-specific" || t == "cause_specific") return EventPolicy::cause_specific;
    throw ConfigError("unknown event policy: " + std::string(name));
}

const char* to_string(EventPolicy p) {
    return p == EventPolicy::overall ? "overall" : "cause-specific";
}

bool PatientRecord::has_missing() const {
    return !age_years || !tumor_size_mm || !er_status || !her2_status || !hormone_therapy ||
           !radiotherapy || !chemotherapy || !surgery;
}

std::size_t SampleSet::n_events() const {
    std::size_t k = 0;
    for (int e : event) k += static_cast<std::size_t>(e);
    return k;
}

ParseResult parse_cohort(std::string_view csv_text, const ParseOptions& options) {
    ParseResult result;

    // Split into lines; tolerate trailing \r and a missing final newline.
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= csv_text.size()) {
        std::size_t pos = csv_text.find('\n', start);
        if (pos == std::string_view::npos) {
            lines.push_back(csv_text.substr(start));
            break;
        }
        lines.push_back(csv_text.substr(start, pos - start));
        start = pos + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw SchemaError("empty input: missing header row");

    // Header: all 11 columns required, located by name, duplicates rejected.
    auto header_cells = split_line(lines[0]);
    std::map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header_cells.size(); ++i) {
        std::string name = lower(header_cells[i]);
        if (std::find(kHeader.begin(), kHeader.end(), name) == kHeader.end())
            throw SchemaError("unknown column: " + name);
        if (!col_of.emplace(name, i).second)
            throw SchemaError("duplicate column: " + name);
    }
    for (auto required : kHeader) {
        if (!col_of.count(std::string(required)))
            throw SchemaError("missing mandatory column: " + std::string(required));
    }

    auto cell = [&](const std::vector<std::string_view>& cells,
                    std::string_view name) -> std::string_view {
        return cells[col_of.at(std::string(name))];
    };

    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::size_t row_number = li + 1;
        if (trim(lines[li]).empty()) continue;
        auto cells = split_line(lines[li]);
        try {
            if (cells.size() != kHeader.size())
                throw RowReject{"expected " + std::to_string(kHeader.size()) + " fields, got " +
                                std::to_string(cells.size())};

            PatientRecord rec;

            auto need = [&](std::string_view name) -> std::string_view {
                auto v = cell(cells, name);
                if (v.empty()) throw RowReject{"missing mandatory value: " + std::string(name)};
                return v;
            };
            auto fail_cell = [&](std::string_view name) -> RowReject {
                if (options.strict)
                    throw SchemaError("row " + std::to_string(row_number) +
                                      ": unparseable cell in column " + std::string(name));
                return RowReject{"invalid " + std::string(name)};
            };

            rec.id = std::string(need("id"));

            auto opt_double = [&](std::string_view name, double lo, double hi,
                                  std::optional<double>& out) {
                auto v = cell(cells, name);
                if (v.empty()) {
                    if (options.strict) throw RowReject{"missing value: " + std::string(name)};
                    return;
                }
                double d;
                if (!parse_double(v, d)) throw fail_cell(name);
                if (!(d > lo && d < hi))
                    throw RowReject{std::string(name) + " out of range"};
                out = d;
            };
            auto opt_binary = [&](std::string_view name, std::optional<bool>& out) {
                auto v = cell(cells, name);
                if (v.empty()) {
                    if (options.strict) throw RowReject{"missing value: " + std::string(name)};
                    return;
                }
                bool b;
                if (!parse_binary(v, b)) throw fail_cell(name);
                out = b;
            };

            opt_double("age_years", 0.0, 130.0, rec.age_years);
            opt_double("tumor_size_mm", 0.0, 500.0, rec.tumor_size_mm);
            opt_binary("er_status", rec.er_status);
            opt_binary("her2_status", rec.her2_status);
            opt_binary("hormone_therapy", rec.hormone_therapy);
            opt_binary("radiotherapy", rec.radiotherapy);
            opt_binary("chemotherapy", rec.chemotherapy);

            {
                auto v = cell(cells, "surgery");
                if (!v.empty()) {
                    Surgery s;
                    if (!parse_surgery(v, s)) throw fail_cell("surgery");
                    rec.surgery = s;
                } else if (options.strict) {
                    throw RowReject{"missing value: surgery"};
                }
            }
            {
                double t;
                if (!parse_double(need("survival_months"), t)) throw fail_cell("survival_months");
                if (t < 0.0) throw RowReject{"survival_months out of range"};
                if (t == 0.0) throw RowReject{"survival_months must be positive"};
                rec.survival_months = t;
            }
            {
                Outcome o;
                if (!parse_outcome(need("outcome"), o)) throw fail_cell("outcome");
                rec.outcome = o;
            }

            result.records.push_back(std::move(rec));
        } catch (const RowReject& rr) {
            result.rejected.push_back({row_number, rr.reason});
        }
    }
    return result;
}

std::string encode_cohort(const std::vector<PatientRecord>& records) {
    std::string out;
    for (std::size_t i = 0; i < kHeader.size(); ++i) {
        if (i) out += ',';
        out += kHeader[i];
    }
    out += '\n';

    auto put_double = [&](const std::optional<double>& v) {
        if (v) out += num_to_string(*v);
    };
    auto put_binary = [&](const std::optional<bool>& v) {
        if (v) out += *v ? '1' : '0';
    };

    for (const auto& r : records) {
        out += r.id;
        out += ',';
        put_double(r.age_years);
        out += ',';
        put_double(r.tumor_size_mm);
        out += ',';
        put_binary(r.er_status);
        out += ',';
        put_binary(r.her2_status);
        out += ',';
        put_binary(r.hormone_therapy);
        out += ',';
        put_binary(r.radiotherapy);
        out += ',';
        put_binary(r.chemotherapy);
        out += ',';
        if (r.surgery) out += to_string(*r.surgery);
        out += ',';
        out += num_to_string(r.survival_months);
        out += ',';
        out += to_string(r.outcome);
        out += '\n';
    }
    return out;
}

namespace {

int event_indicator(Outcome o, EventPolicy policy) {
    switch (policy) {
        case EventPolicy::overall:
            return o == Outcome::alive ? 0 : 1;
        case EventPolicy::cause_specific:
            return o == Outcome::died_breast_cancer ? 1 : 0;
    }
    return 0;
}

// Covariate accessor: value if present for this record.
std::optional<double> covariate_value(const PatientRecord& r, std::string_view name) {
    auto from_bool = [](const std::optional<bool>& b) -> std::optional<double> {
        if (!b) return std::nullopt;
        return *b ? 1.0 : 0.0;
    };
    if (name == "age_years") return r.age_years;
    if (name == "tumor_size_mm") return r.tumor_size_mm;
    if (name == "er_status") return from_bool(r.er_status);
    if (name == "her2_status") return from_bool(r.her2_status);
    if (name == "hormone_therapy") return from_bool(r.hormone_therapy);
    if (name == "radiotherapy") return from_bool(r.radiotherapy);
    if (name == "chemotherapy") return from_bool(r.chemotherapy);
    if (name == "mastectomy_flag") {
        if (!r.surgery) return std::nullopt;
        return *r.surgery == Surgery::mastectomy ? 1.0 : 0.0;
    }
    throw ConfigError("unknown covariate: " + std::string(name));
}

}  // namespace

SampleSet apply_event_policy(const std::vector<PatientRecord>& records, EventPolicy policy) {
    SampleSet s;
    s.time.reserve(records.size());
    s.event.reserve(records.size());
    s.covariates.resize(static_cast<Eigen::Index>(records.size()), 0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        s.time.push_back(records[i].survival_months);
        s.event.push_back(event_indicator(records[i].outcome, policy));
        s.source_rows.push_back(i);
    }
    return s;
}

DesignMatrix design_matrix(const std::vector<PatientRecord>& records,
                           const std::vector<std::string>& covariate_spec) {
    for (const auto& name : covariate_spec) {
        if (std::find(kCovariateNames.begin(), kCovariateNames.end(), name) ==
            kCovariateNames.end())
            throw ConfigError("unknown covariate: " + name);
    }

    DesignMatrix dm;
    dm.names = covariate_spec;
    std::vector<std::vector<double>> kept_rows;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::vector<double> row;
        row.reserve(covariate_spec.size());
        bool complete = true;
        for (const auto& name : covariate_spec) {
            auto v = covariate_value(records[i], name);
            if (!v) { complete = false; break; }
            row.push_back(*v);
        }
        if (!complete) continue;
        kept_rows.push_back(std::move(row));
        dm.rows.push_back(i);
    }
    dm.X.resize(static_cast<Eigen::Index>(kept_rows.size()),
                static_cast<Eigen::Index>(covariate_spec.size()));
    for (std::size_t i = 0; i < kept_rows.size(); ++i)
        for (std::size_t j = 0; j < covariate_spec.size(); ++j)
            dm.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = kept_rows[i][j];
    return dm;
}

SampleSet make_samples(const std::vector<PatientRecord>& records, EventPolicy policy,
                       const std::vector<std::string>& covariate_spec) {
    DesignMatrix dm = design_matrix(records, covariate_spec);
    SampleSet s;
    s.covariates = std::move(dm.X);
    s.covariate_names = dm.names;
    s.source_rows = dm.rows;
    s.time.reserve(s.source_rows.size());
    s.event.reserve(s.source_rows.size());
    for (std::size_t idx : s.source_rows) {
        s.time.push_back(records[idx].survival_months);
        s.event.push_back(event_indicator(records[idx].outcome, policy));
    }
    return s;
}

CohortSummary summarize(const std::vector<PatientRecord>& records) {
    if (records.empty()) throw DegenerateDataError("empty cohort: nothing to summarize");

    CohortSummary summary;
    summary.cohort_size = records.size();

    // Table order: breast-cancer deaths, other deaths, alive.
    const std::array<Outcome, 3> order = {Outcome::died_breast_cancer, Outcome::died_other,
                                          Outcome::alive};
    std::vector<std::vector<std::size_t>> group_rows;  // record indices per nonempty group
    for (Outcome o : order) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < records.size(); ++i)
            if (records[i].outcome == o) rows.push_back(i);
        if (rows.empty()) {
            summary.empty_groups.push_back(o);
        } else {
            summary.groups.push_back({o, rows.size()});
            group_rows.push_back(std::move(rows));
        }
    }

    auto add_continuous = [&](std::string name,
                              std::optional<double> PatientRecord::* field) {
        SummaryRow row;
        row.variable = std::move(name);
        row.continuous = true;
        row.test = "kruskal-wallis";
        std::vector<std::vector<double>> group_values;
        for (std::size_t g = 0; g < group_rows.size(); ++g) {
            std::vector<double> values;
            std::size_t missing = 0;
            for (std::size_t idx : group_rows[g]) {
                const auto& v = records[idx].*field;
                if (v) values.push_back(*v); else ++missing;
            }
            row.n_missing.push_back(missing);
            if (values.empty()) {
                row.median.push_back(std::numeric_limits<double>::quiet_NaN());
                row.q1.push_back(std::numeric_limits<double>::quiet_NaN());
                row.q3.push_back(std::numeric_limits<double>::quiet_NaN());
            } else {
                row.median.push_back(stats::quantile_type7(values, 0.5));
                row.q1.push_back(stats::quantile_type7(values, 0.25));
                row.q3.push_back(stats::quantile_type7(values, 0.75));
                group_values.push_back(values);
            }
        }
        row.p_value = std::numeric_limits<double>::quiet_NaN();
        if (group_values.size() >= 2) {
            std::size_t total = 0;
            for (const auto& g : group_values) total += g.size();
            if (total >= 2) row.p_value = stats::kruskal_wallis(group_values).p_value;
        }
        summary.rows.push_back(std::move(row));
    };

    auto add_binary = [&](std::string name,
                          auto getter) {
        SummaryRow row;
        row.variable = std::move(name);
        row.continuous = false;
        row.test = "chi-square";
        std::vector<std::vector<double>> table;  // group x {negative, positive}
        for (std::size_t g = 0; g < group_rows.size(); ++g) {
            double pos = 0, neg = 0;
            std::size_t missing = 0;
            for (std::size_t idx : group_rows[g]) {
                std::optional<bool> v = getter(records[idx]);
                if (!v) { ++missing; continue; }
                (*v ? pos : neg) += 1.0;
            }
            row.n_missing.push_back(missing);
            double denom = pos + neg;
            row.proportion.push_back(denom > 0 ? pos / denom
                                               : std::numeric_limits<double>::quiet_NaN());
            if (denom > 0) table.push_back({neg, pos});
        }
        row.p_value = std::numeric_limits<double>::quiet_NaN();
        if (table.size() >= 2)
            row.p_value = stats::chi_square_independence(table).p_value;
        summary.rows.push_back(std::move(row));
    };

    add_continuous("age_years", &PatientRecord::age_years);
    add_continuous("tumor_size_mm", &PatientRecord::tumor_size_mm);
    add_binary("er_status", [](const PatientRecord& r) { return r.er_status; });
    add_binary("her2_status", [](const PatientRecord& r) { return r.her2_status; });
    add_binary("hormone_therapy", [](const PatientRecord& r) { return r.hormone_therapy; });
    add_binary("radiotherapy", [](const PatientRecord& r) { return r.radiotherapy; });
    add_binary("chemotherapy", [](const PatientRecord& r) { return r.chemotherapy; });
    add_binary("mastectomy", [](const PatientRecord& r) -> std::optional<bool> {
        if (!r.surgery) return std::nullopt;
        return *r.surgery == Surgery::mastectomy;
    });

    return summary;
}

}  // namespace survkit
