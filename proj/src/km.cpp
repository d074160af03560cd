#include "survkit/km.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "survkit/errors.hpp"
#include "survkit/numfmt.hpp"
#include "survkit/stats.hpp"

#include <nlohmann/json.hpp>

namespace survkit {

namespace {
constexpr double kZ95 = 1.96;

void check_inputs(const std::vector<double>& time, const std::vector<int>& event) {
    if (time.empty()) throw DegenerateDataError("km: no samples");
    if (time.size() != event.size())
        throw std::invalid_argument("km: time/event length mismatch");
    for (double t : time)
        if (!(t > 0.0)) throw std::invalid_argument("km: times must be positive");
}
}  // namespace

KMCurve km_fit(const std::vector<double>& time, const std::vector<int>& event) {
    check_inputs(time, event);

    std::vector<std::size_t> order(time.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    KMCurve curve;
    curve.n = time.size();
    curve.max_observed_time = time[order.back()];

    double surv = 1.0;
    double greenwood_cum = 0.0;  // sum d/(n(n-d)); +inf once the curve hits 0
    std::size_t i = 0;
    const std::size_t n = order.size();
    while (i < n) {
        double t = time[order[i]];
        int at_risk = static_cast<int>(n - i);
        int d = 0;
        std::size_t j = i;
        // events at a tied time are processed before censorings at that time:
        // both count as at risk, only events produce a step
        while (j < n && time[order[j]] == t) {
            d += event[order[j]] ? 1 : 0;
            ++j;
        }
        if (d > 0) {
            surv *= 1.0 - static_cast<double>(d) / at_risk;
            if (d == at_risk) {
                surv = 0.0;  // exact zero tail
                greenwood_cum = std::numeric_limits<double>::infinity();
            } else {
                greenwood_cum +=
                    static_cast<double>(d) /
                    (static_cast<double>(at_risk) * static_cast<double>(at_risk - d));
            }
            curve.event_times.push_back(t);
            curve.survival.push_back(surv);
            curve.at_risk.push_back(at_risk);
            curve.deaths.push_back(d);
            curve.n_events += static_cast<std::size_t>(d);

            if (surv == 0.0) {
                curve.se_greenwood.push_back(std::numeric_limits<double>::quiet_NaN());
                curve.ci_lower.push_back(0.0);
                curve.ci_upper.push_back(0.0);
            } else {
                double se = surv * std::sqrt(greenwood_cum);
                curve.se_greenwood.push_back(se);
                // complementary log-log band: S^exp(+-z*se_cll)
                double se_cll = std::sqrt(greenwood_cum) / std::fabs(std::log(surv));
                double lo = std::pow(surv, std::exp(kZ95 * se_cll));
                double hi = std::pow(surv, std::exp(-kZ95 * se_cll));
                curve.ci_lower.push_back(std::clamp(lo, 0.0, 1.0));
                curve.ci_upper.push_back(std::clamp(hi, 0.0, 1.0));
            }
        }
        i = j;
    }
    return curve;
}

KMCurve km_fit(const SampleSet& samples) { return km_fit(samples.time, samples.event); }

SurvivalValue survival_at(const KMCurve& curve, double t) {
    if (t < 0.0) throw std::domain_error("survival_at: t must be nonnegative");
    SurvivalValue out;
    out.extrapolated = t > curve.max_observed_time;
    // last event time <= t
    auto it = std::upper_bound(curve.event_times.begin(), curve.event_times.end(), t);
    if (it == curve.event_times.begin()) {
        out.value = 1.0;
    } else {
        out.value = curve.survival[static_cast<std::size_t>(
            std::distance(curve.event_times.begin(), it) - 1)];
    }
    return out;
}

std::vector<std::pair<std::string, KMCurve>> km_stratified(
    const std::vector<double>& time, const std::vector<int>& event,
    const std::vector<std::string>& group_labels) {
    if (time.size() != group_labels.size())
        throw std::invalid_argument("km_stratified: label length mismatch");
    std::map<std::string, std::pair<std::vector<double>, std::vector<int>>> by_group;
    for (std::size_t i = 0; i < time.size(); ++i) {
        auto& g = by_group[group_labels[i]];
        g.first.push_back(time[i]);
        g.second.push_back(event[i]);
    }
    std::vector<std::pair<std::string, KMCurve>> out;
    out.reserve(by_group.size());
    for (auto& [label, data] : by_group)
        out.emplace_back(label, km_fit(data.first, data.second));
    return out;
}

LogRankResult logrank_test(const std::vector<double>& time, const std::vector<int>& event,
                           const std::vector<std::string>& group_labels) {
    check_inputs(time, event);
    if (group_labels.size() != time.size())
        throw std::invalid_argument("logrank_test: label length mismatch");

    // map labels -> dense group index, ordered by label
    std::map<std::string, std::size_t> group_of;
    for (const auto& l : group_labels) group_of.emplace(l, 0);
    if (group_of.size() < 2)
        throw ConfigError("logrank_test: need >= 2 nonempty groups");
    {
        std::size_t gi = 0;
        for (auto& [label, idx] : group_of) idx = gi++;
    }
    const std::size_t k = group_of.size();

    std::size_t total_events = 0;
    for (int e : event) total_events += static_cast<std::size_t>(e);
    if (total_events == 0)
        throw DegenerateDataError("logrank_test: zero events, statistic undefined");

    std::vector<std::size_t> order(time.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

    std::vector<double> observed(k, 0.0), expected(k, 0.0);
    std::vector<std::size_t> group_n(k, 0);
    for (const auto& l : group_labels) group_n[group_of[l]]++;

    // at-risk counts per group, decremented as subjects leave
    std::vector<double> at_risk(k, 0.0);
    for (std::size_t g = 0; g < k; ++g) at_risk[g] = static_cast<double>(group_n[g]);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                                static_cast<Eigen::Index>(k));

    const std::size_t n = order.size();
    std::size_t i = 0;
    while (i < n) {
        double t = time[order[i]];
        std::vector<double> d_g(k, 0.0);
        double d_tot = 0.0;
        std::size_t j = i;
        while (j < n && time[order[j]] == t) {
            if (event[order[j]]) {
                d_g[group_of[group_labels[order[j]]]] += 1.0;
                d_tot += 1.0;
            }
            ++j;
        }
        double n_tot = 0.0;
        for (double r : at_risk) n_tot += r;
        if (d_tot > 0.0 && n_tot > 0.0) {
            for (std::size_t g = 0; g < k; ++g) {
                observed[g] += d_g[g];
                expected[g] += d_tot * at_risk[g] / n_tot;
            }
            if (n_tot > 1.0) {
                double scale = d_tot * (n_tot - d_tot) / (n_tot - 1.0);
                for (std::size_t g = 0; g < k; ++g) {
                    double pg = at_risk[g] / n_tot;
                    for (std::size_t h = 0; h < k; ++h) {
                        double ph = at_risk[h] / n_tot;
                        cov(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(h)) +=
                            scale * pg * ((g == h ? 1.0 : 0.0) - ph);
                    }
                }
            }
        }
        for (std::size_t m = i; m < j; ++m) at_risk[group_of[group_labels[order[m]]]] -= 1.0;
        i = j;
    }

    // chi-square from the first k-1 components (the k-th is redundant)
    const auto km1 = static_cast<Eigen::Index>(k - 1);
    Eigen::VectorXd z(km1);
    for (Eigen::Index g = 0; g < km1; ++g)
        z(g) = observed[static_cast<std::size_t>(g)] - expected[static_cast<std::size_t>(g)];
    Eigen::MatrixXd v = cov.topLeftCorner(km1, km1);

    double chi2 = 0.0;
    if (z.lpNorm<Eigen::Infinity>() > 0.0) {
        // pseudo-inverse solve tolerates degenerate strata
        Eigen::VectorXd sol = v.completeOrthogonalDecomposition().solve(z);
        chi2 = std::max(0.0, z.dot(sol));
    }

    LogRankResult result;
    result.chi_square = chi2;
    result.degrees_of_freedom = static_cast<int>(k - 1);
    result.p_value = stats::chi_square_sf(chi2, static_cast<double>(k - 1));
    for (const auto& [label, g] : group_of)
        result.groups.push_back({label, group_n[g], observed[g], expected[g]});
    return result;
}

std::string km_to_csv(const KMCurve& curve) {
    std::string out = "time,at_risk,deaths,survival,se,ci_lower,ci_upper\n";
    for (std::size_t i = 0; i < curve.event_times.size(); ++i) {
        out += num_to_string(curve.event_times[i]);
        out += ',';
        out += std::to_string(curve.at_risk[i]);
        out += ',';
        out += std::to_string(curve.deaths[i]);
        out += ',';
        out += num_to_string(curve.survival[i]);
        out += ',';
        if (!std::isnan(curve.se_greenwood[i])) out += num_to_string(curve.se_greenwood[i]);
        out += ',';
        out += num_to_string(curve.ci_lower[i]);
        out += ',';
        out += num_to_string(curve.ci_upper[i]);
        out += '\n';
    }
    return out;
}

std::string km_to_json(const KMCurve& curve) {
    nlohmann::json j;
    j["time"] = curve.event_times;
    j["at_risk"] = curve.at_risk;
    j["deaths"] = curve.deaths;
    j["survival"] = curve.survival;
    auto se = nlohmann::json::array();
    for (double s : curve.se_greenwood) {
        if (std::isnan(s)) se.push_back(nullptr); else se.push_back(s);
    }
    j["se"] = se;
    j["ci_lower"] = curve.ci_lower;
    j["ci_upper"] = curve.ci_upper;
    j["n"] = curve.n;
    j["n_events"] = curve.n_events;
    j["max_observed_time"] = curve.max_observed_time;
    return j.dump(2) + "\n";
}

}  // namespace survkit
