#include "survkit/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "survkit/errors.hpp"
#include "survkit/numfmt.hpp"
#include "survkit/parametric.hpp"

namespace survkit {

ConcordanceResult concordance_index(const std::vector<double>& times,
                                    const std::vector<int>& events,
                                    const std::vector<double>& risk_scores) {
    const std::size_t n = times.size();
    if (events.size() != n || risk_scores.size() != n)
        throw std::invalid_argument("concordance_index: input length mismatch");

    ConcordanceResult r;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // orient the pair so `a` is the earlier failure, if any
            std::size_t a, b;
            if (times[i] < times[j]) {
                a = i; b = j;
            } else if (times[j] < times[i]) {
                a = j; b = i;
            } else {
                // time tie: both events -> not comparable; one event -> the
                // event subject counts as the earlier failure
                if (events[i] && events[j]) continue;
                if (events[i]) { a = i; b = j; }
                else if (events[j]) { a = j; b = i; }
                else continue;
            }
            if (!events[a]) continue;  // earlier time censored: not comparable
            ++r.comparable_pairs;
            if (risk_scores[a] > risk_scores[b]) ++r.concordant;
            else if (risk_scores[a] < risk_scores[b]) ++r.discordant;
            else ++r.tied_risk;
        }
    }
    if (r.comparable_pairs == 0)
        throw DegenerateDataError("concordance_index: no comparable pairs");
    r.c_index = (static_cast<double>(r.concordant) + 0.5 * static_cast<double>(r.tied_risk)) /
                static_cast<double>(r.comparable_pairs);
    return r;
}

std::vector<ModelRank> compare_models(const std::vector<ModelEntry>& entries) {
    if (entries.empty()) throw ConfigError("compare_models: empty model list");
    for (const auto& e : entries) {
        if (e.n != entries.front().n)
            throw ConfigError("compare_models: inconsistent n across entries (" +
                              e.label + "); BIC not comparable");
    }

    std::vector<ModelRank> ranking;
    ranking.reserve(entries.size());
    for (const auto& e : entries) {
        ModelRank m;
        m.label = e.label;
        m.loglik = e.loglik;
        m.k = e.k;
        auto [aic, bic] = information_criteria(e.loglik, e.k, static_cast<double>(e.n));
        m.aic = aic;
        m.bic = bic;
        ranking.push_back(std::move(m));
    }

    // stable sorts preserve input (label) order on ties
    std::vector<std::size_t> by_bic(ranking.size());
    std::iota(by_bic.begin(), by_bic.end(), 0);
    std::stable_sort(by_bic.begin(), by_bic.end(),
                     [&](std::size_t a, std::size_t b) { return ranking[a].bic < ranking[b].bic; });
    for (std::size_t i = 0; i < by_bic.size(); ++i)
        ranking[by_bic[i]].bic_rank = static_cast<int>(i + 1);

    std::stable_sort(ranking.begin(), ranking.end(),
                     [](const ModelRank& a, const ModelRank& b) { return a.aic < b.aic; });
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        ranking[i].rank = static_cast<int>(i + 1);
        ranking[i].delta_aic = ranking[i].aic - ranking.front().aic;
    }
    return ranking;
}

std::string ranking_to_csv(const std::vector<ModelRank>& ranking) {
    std::string out = "label,loglik,k,aic,bic,delta_aic,rank\n";
    for (const auto& m : ranking) {
        out += m.label;
        out += ',';
        out += num_to_string(m.loglik);
        out += ',';
        out += std::to_string(m.k);
        out += ',';
        out += num_to_string(m.aic);
        out += ',';
        out += num_to_string(m.bic);
        out += ',';
        out += num_to_string(m.delta_aic);
        out += ',';
        out += std::to_string(m.rank);
        out += '\n';
    }
    return out;
}

}  // namespace survkit
