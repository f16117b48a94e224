// Microbenchmarks for the hot paths: prompt rendering, reply parsing,
// cascade judging, metric computation.

#include <benchmark/benchmark.h>

#include <sstream>

#include "clue/backend.hpp"
#include "clue/cascade.hpp"
#include "clue/log_io.hpp"
#include "clue/metrics.hpp"
#include "clue/prompts.hpp"
#include "clue/satisfaction.hpp"
#include "clue/synth.hpp"

using namespace clue;

namespace {

SynthCorpus corpus_of(int queries) {
    SynthConfig config;
    config.seed = 1234;
    config.num_queries = queries;
    config.min_clicks = 1;
    return generate_corpus(config);
}

}  // namespace

static void BM_BuildCascadePrompt(benchmark::State& state) {
    const SynthCorpus corpus = corpus_of(1);
    const auto& session = corpus.sessions.front();
    const auto& query = session.queries.front();
    const auto instances = instances_for_query(query, session);
    const OrdinalScale scale = make_scale(4);
    const GuidelineSet guidelines = GuidelineSet::default_usefulness();
    const auto permutation = permutation_for_voter(query.query_id, 4, 1, instances.size());

    for (auto _ : state) {
        benchmark::DoNotOptimize(
            build_cascade_prompt(query, instances, 4, guidelines, permutation, scale));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BuildCascadePrompt);

static void BM_ParseSelection(benchmark::State& state) {
    const std::string raw =
        R"(The first two look strong. {"thought":"detailed and on-topic","selected":["1","3","7"]})";
    const std::vector<std::string> valid = {"1", "2", "3", "4", "5", "6", "7", "8"};
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_selection(raw, valid));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_ParseSelection);

static void BM_CascadeOracleQuery(benchmark::State& state) {
    const SynthCorpus corpus = corpus_of(50);
    auto gold = std::make_shared<GoldTable>(corpus.gold);
    auto backend = std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::oracle(gold));
    CascadeConfig config;
    config.scale = make_scale(4);
    config.num_voters = static_cast<int>(state.range(0));

    std::size_t index = 0;
    std::vector<std::pair<const SearchSession*, const QueryRecord*>> queries;
    for (const auto& session : corpus.sessions) {
        for (const auto& query : session.queries) queries.emplace_back(&session, &query);
    }

    for (auto _ : state) {
        const auto& [session, query] = queries[index++ % queries.size()];
        JudgeClient client(backend);
        const auto instances = instances_for_query(*query, *session);
        benchmark::DoNotOptimize(judge_query_cascade(*query, instances, config, client));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_CascadeOracleQuery)->Arg(1)->Arg(5);

static void BM_AgreementReport(benchmark::State& state) {
    const SynthCorpus corpus = corpus_of(200);
    LabelSet pred;
    for (const auto& label : corpus.gold.all()) {
        UsefulnessLabel flipped = label;
        flipped.source = LabelSource::LlmUsefulness;
        flipped.value = label.value == 1 ? 2 : label.value - 1;
        pred.insert(flipped);
    }
    for (auto _ : state) {
        const PairedLabels pairs = align(corpus.gold, pred);
        benchmark::DoNotOptimize(compute_report(pairs, 4));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_AgreementReport);

static void BM_ParseSessions(benchmark::State& state) {
    const SynthCorpus corpus = corpus_of(100);
    std::ostringstream out;
    write_sessions(out, corpus.sessions);
    const std::string text = out.str();

    for (auto _ : state) {
        std::istringstream in(text);
        benchmark::DoNotOptimize(parse_sessions(in));
    }
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_ParseSessions);

static void BM_ClickMetrics(benchmark::State& state) {
    const SynthCorpus corpus = corpus_of(200);
    const OrdinalScale scale = make_scale(4);
    for (auto _ : state) {
        for (const auto& session : corpus.sessions) {
            for (const auto& query : session.queries) {
                benchmark::DoNotOptimize(click_metrics(query, corpus.gold, 10, scale));
            }
        }
    }
    state.SetItemsProcessed(state.iterations() * 200);
}
BENCHMARK(BM_ClickMetrics);

BENCHMARK_MAIN();
