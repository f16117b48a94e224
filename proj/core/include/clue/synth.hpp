#pragma once

#include <cstdint>
#include <vector>

#include "clue/labels.hpp"
#include "clue/session.hpp"

namespace clue {

/// Desk-scale synthetic corpus: sessions with gold usefulness per clicked
/// document and query satisfaction sampled as a noisy monotone function of the
/// gold-label cDCG. Fully deterministic for a given seed.
struct SynthConfig {
    std::uint64_t seed = 7;
    int num_queries = 200;            // total queries across all sessions
    double queries_per_session_mean = 2.0;
    double clicks_per_query_mean = 1.6;
    int min_clicks = 0;               // floor on clicks per query
    int results_per_query = 10;
    int scale_n = 4;                  // usefulness levels
    int satisfaction_scale_n = 5;
    double satisfaction_noise = 0.25; // stddev added to cDCG before bucketing
};

struct SynthCorpus {
    std::vector<SearchSession> sessions;
    LabelSet gold;            // source UserUsefulness, one label per clicked doc
    LabelSet relevance_gold;  // source ThirdPartyRelevance, one label per result
};

SynthCorpus generate_corpus(const SynthConfig& config);

}  // namespace clue
