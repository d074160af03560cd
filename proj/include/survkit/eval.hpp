#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace survkit {

struct ConcordanceResult {
    double c_index = 0.5;
    std::size_t concordant = 0;
    std::size_t discordant = 0;
    std::size_t tied_risk = 0;
    std::size_t comparable_pairs = 0;
};

// Harrell's C. A pair is comparable iff the smaller time carries an event;
// tied event times are not comparable; a time tie between an event and a
// censoring treats the event as earlier. Score ties count 0.5.
ConcordanceResult concordance_index(const std::vector<double>& times,
                                    const std::vector<int>& events,
                                    const std::vector<double>& risk_scores);

struct ModelEntry {
    std::string label;
    double loglik = 0.0;
    int k = 0;
    std::size_t n = 0;
};

struct ModelRank {
    std::string label;
    double loglik = 0.0;
    int k = 0;
    double aic = 0.0;
    double bic = 0.0;
    double delta_aic = 0.0;
    int rank = 0;       // ascending AIC; ties broken by input order
    int bic_rank = 0;
};

// Sorted ascending by AIC. n must agree across entries (BIC comparability).
std::vector<ModelRank> compare_models(const std::vector<ModelEntry>& entries);

// CSV: label,loglik,k,aic,bic,delta_aic,rank
std::string ranking_to_csv(const std::vector<ModelRank>& ranking);

}  // namespace survkit
