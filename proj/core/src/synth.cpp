#include "clue/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "clue/error.hpp"
#include "clue/prompts.hpp"
#include "clue/satisfaction.hpp"

namespace clue {

namespace {

// All draws go through these helpers: mt19937_64 is standard-fixed, so the
// corpus is byte-identical across platforms and runs.
struct Rng {
    std::mt19937_64 engine;

    explicit Rng(std::uint64_t seed) : engine(seed) {}

    double uniform() {
        return static_cast<double>(engine() >> 11) * 0x1.0p-53;
    }

    std::uint64_t below(std::uint64_t bound) { return engine() % bound; }

    int poisson(double mean) {
        // Knuth's algorithm; fine for small means.
        const double limit = std::exp(-mean);
        int count = 0;
        double product = 1.0;
        do {
            ++count;
            product *= uniform();
        } while (product > limit);
        return count - 1;
    }

    double exponential(double mean) { return -mean * std::log(1.0 - uniform()); }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }
};

const std::vector<std::string>& word_bank() {
    static const std::vector<std::string> words = {
        "solar",    "garden",   "recipe",  "battery", "museum",  "hiking",  "python",
        "keyboard", "insurance", "galaxy",  "coffee",  "train",   "budget",  "camera",
        "fitness",  "history",  "weather", "guitar",  "recycle", "travel"};
    return words;
}

const std::vector<std::pair<std::string, std::string>>& task_bank() {
    static const std::vector<std::pair<std::string, std::string>> tasks = {
        {"You are planning a greener household.",
         "Find three practical changes that cut energy use and explain their impact."},
        {"You are preparing a beginner course.",
         "Collect introductory material and decide which topics to cover first."},
        {"You are comparing products before a purchase.",
         "Pick the best option under a fixed budget and justify the choice."},
        {"You are researching for a short essay.",
         "Gather background facts and at least two reliable sources."},
        {"You are troubleshooting a recurring problem.",
         "Identify the likely cause and a fix you could apply today."},
        {"You are organizing a weekend trip.",
         "Choose a destination reachable by train and sketch an itinerary."},
        {"", ""},  // sessions without task context, log-style
        {"You are learning a new skill.",
         "Find a practice plan suitable for 30 minutes a day."},
    };
    return tasks;
}

std::string make_text(Rng& rng, std::size_t words) {
    const auto& bank = word_bank();
    std::string out;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) out += " ";
        out += bank[rng.below(bank.size())];
    }
    return out;
}

}  // namespace

SynthCorpus generate_corpus(const SynthConfig& config) {
    if (config.num_queries < 1) throw ConfigError("num_queries must be >= 1");
    if (config.scale_n < 2 || config.satisfaction_scale_n < 2) {
        throw ConfigError("scales must be >= 2");
    }

    Rng rng(mix_seed(config.seed, "synth-corpus"));
    SynthCorpus corpus;

    const Timestamp base_time = 1719792000000;  // 2024-07-01T00:00:00Z
    int query_counter = 0;
    int session_counter = 0;

    while (query_counter < config.num_queries) {
        SearchSession session;
        session.session_id = "s" + std::to_string(++session_counter);
        session.user_id = "u" + std::to_string(1 + rng.below(25));
        const auto& task = task_bank()[rng.below(task_bank().size())];
        session.task_background_text = task.first;
        session.task_goal_text = task.second;

        int queries_here = 1 + rng.poisson(std::max(0.0, config.queries_per_session_mean - 1.0));
        queries_here = std::min(queries_here, config.num_queries - query_counter);

        Timestamp clock = base_time + static_cast<Timestamp>(session_counter) * 3600000;
        for (int qi = 0; qi < queries_here; ++qi) {
            QueryRecord query;
            query.query_id = "q" + std::to_string(++query_counter);
            query.query_string_text = make_text(rng, 2 + rng.below(3));
            query.issue_time = clock;

            for (int rank = 1; rank <= config.results_per_query; ++rank) {
                DocRecord doc;
                doc.doc_id = query.query_id + "_d" + std::to_string(rank);
                doc.rank = rank;
                doc.url = "https://example.org/" + doc.doc_id;
                doc.title = make_text(rng, 3);
                doc.content_text = make_text(rng, 30 + rng.below(40));

                // Rank-biased graded relevance with a little jitter.
                int relevance = config.scale_n - std::min(config.scale_n - 1, (rank - 1) / 2);
                if (rng.uniform() < 0.3) {
                    relevance += rng.uniform() < 0.5 ? -1 : 1;
                }
                relevance = std::clamp(relevance, 1, config.scale_n);
                corpus.relevance_gold.insert(UsefulnessLabel{query.query_id, doc.doc_id,
                                                             LabelSource::ThirdPartyRelevance,
                                                             relevance, config.scale_n});
                query.results.push_back(std::move(doc));
            }

            int num_clicks = rng.poisson(config.clicks_per_query_mean);
            num_clicks = std::clamp(num_clicks, config.min_clicks, config.results_per_query);

            // Top-biased rank choice without replacement.
            std::vector<int> available(static_cast<std::size_t>(config.results_per_query));
            for (int r = 0; r < config.results_per_query; ++r) available[static_cast<std::size_t>(r)] = r + 1;
            Timestamp click_clock = clock + 5000;
            for (int ci = 0; ci < num_clicks; ++ci) {
                double total_weight = 0.0;
                for (int rank : available) total_weight += 1.0 / static_cast<double>(rank);
                double pick = rng.uniform() * total_weight;
                std::size_t chosen = 0;
                for (std::size_t ai = 0; ai < available.size(); ++ai) {
                    pick -= 1.0 / static_cast<double>(available[ai]);
                    if (pick <= 0.0) {
                        chosen = ai;
                        break;
                    }
                }
                const int rank = available[chosen];
                available.erase(available.begin() + static_cast<std::ptrdiff_t>(chosen));

                ClickEvent click;
                click.doc_id = query.query_id + "_d" + std::to_string(rank);
                click.click_order = ci + 1;
                click.click_time = click_clock;
                click.dwell_time_seconds =
                    std::round(rng.exponential(20.0) * 10.0) / 10.0;  // 0.1 s resolution
                click_clock += 3000 + static_cast<Timestamp>(click.dwell_time_seconds * 1000.0);
                query.clicks.push_back(std::move(click));
            }
            clock = click_clock + 20000 + static_cast<Timestamp>(rng.below(40)) * 1000;

            for (const auto& click : query.clicks) {
                corpus.gold.insert(UsefulnessLabel{query.query_id, click.doc_id,
                                                   LabelSource::UserUsefulness,
                                                   1 + static_cast<int>(rng.below(
                                                           static_cast<std::uint64_t>(config.scale_n))),
                                                   config.scale_n});
            }
            session.queries.push_back(std::move(query));
        }
        if (!session.queries.empty() && !session.queries.back().clicks.empty()) {
            session.queries.back().clicks.back().is_session_end = true;
        }
        corpus.sessions.push_back(std::move(session));
    }

    // Satisfaction = noisy monotone function of the gold-label cDCG: bucket
    // thresholds come from the noiseless distribution, then per-query noise
    // shifts the value before bucketing. With zero noise the satisfaction is
    // exactly the bucketized cDCG.
    const OrdinalScale scale = make_scale(config.scale_n);
    std::vector<double> cdcgs;
    for (const auto& session : corpus.sessions) {
        for (const auto& query : session.queries) {
            cdcgs.push_back(click_metrics(query, corpus.gold, kNoCutoff, scale).cdcg);
        }
    }
    std::vector<double> sorted = cdcgs;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> thresholds;
    for (int b = 1; b < config.satisfaction_scale_n; ++b) {
        const std::size_t index =
            std::min(sorted.size() - 1,
                     static_cast<std::size_t>(static_cast<double>(sorted.size()) *
                                              static_cast<double>(b) /
                                              static_cast<double>(config.satisfaction_scale_n)));
        thresholds.push_back(sorted[index]);
    }

    Rng noise_rng(mix_seed(config.seed, "synth-satisfaction"));
    std::size_t query_index = 0;
    for (auto& session : corpus.sessions) {
        for (auto& query : session.queries) {
            const double value =
                cdcgs[query_index++] + config.satisfaction_noise * noise_rng.normal();
            int bucket = 1;
            for (double threshold : thresholds) {
                if (value >= threshold) ++bucket;
            }
            query.satisfaction = bucket;
            query.satisfaction_scale_n = config.satisfaction_scale_n;
        }
    }
    for (const auto& session : corpus.sessions) validate_session(session);
    return corpus;
}

}  // namespace clue
