#include "clue/runner.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <thread>

#include "json.hpp"

#include "clue/error.hpp"
#include "clue/features.hpp"

namespace clue {

namespace {

using nlohmann::json;

struct QueryTask {
    const SearchSession* session = nullptr;
    const QueryRecord* query = nullptr;
};

}  // namespace

std::string_view to_string(Strategy strategy) {
    switch (strategy) {
        case Strategy::Cascade: return "cascade";
        case Strategy::Pointwise: return "pointwise";
        case Strategy::Pairwise: return "pairwise";
        case Strategy::Listwise: return "listwise";
        case Strategy::Relevance: return "relevance";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    if (name == "cascade") return Strategy::Cascade;
    if (name == "pointwise") return Strategy::Pointwise;
    if (name == "pairwise") return Strategy::Pairwise;
    if (name == "listwise") return Strategy::Listwise;
    if (name == "relevance") return Strategy::Relevance;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

void run_parallel(std::vector<std::function<void()>> tasks, int workers) {
    if (tasks.empty()) return;
    if (workers <= 1 || tasks.size() == 1) {
        for (auto& task : tasks) task();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    const int width = std::min<int>(workers, static_cast<int>(tasks.size()));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(width));
    for (int w = 0; w < width; ++w) {
        threads.emplace_back([&] {
            while (!failed.load()) {
                const std::size_t index = next.fetch_add(1);
                if (index >= tasks.size()) return;
                try {
                    tasks[index]();
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true);
                    return;
                }
            }
        });
    }
    for (auto& thread : threads) thread.join();
    if (first_error) std::rethrow_exception(first_error);
}

JudgeRun judge_corpus(const std::vector<SearchSession>& sessions, const RunOptions& options,
                      JudgeClient& client, const std::set<std::string>* skip) {
    std::vector<QueryTask> tasks;
    std::size_t skipped = 0;
    for (const auto& session : sessions) {
        for (const auto& query : session.queries) {
            if (skip != nullptr && skip->count(query.query_id)) {
                ++skipped;
                continue;
            }
            tasks.push_back(QueryTask{&session, &query});
        }
    }

    JudgeRun run;
    run.summary.queries_total = tasks.size() + skipped;
    run.summary.queries_skipped = skipped;

    std::vector<std::vector<UsefulnessLabel>> labels_per_task(tasks.size());
    std::vector<JudgmentTrace> traces_per_task(tasks.size());
    std::vector<char> done(tasks.size(), 0);  // one byte per task (vector<bool> packs bits)
    std::atomic<bool> exhausted{false};

    CascadeConfig cascade_config;
    cascade_config.scale = options.scale;
    cascade_config.num_voters = options.num_voters;
    cascade_config.guidelines = options.guidelines;
    cascade_config.backend = client.backend().config();
    if (options.strategy == Strategy::Cascade) cascade_config.validate();

    BaselineConfig baseline_config;
    baseline_config.scale = options.scale;
    baseline_config.guidelines = options.guidelines;
    baseline_config.llm_segmentation = options.llm_segmentation;

    auto judge_one = [&](std::size_t index) {
        const auto& task = tasks[index];
        auto& out = labels_per_task[index];
        switch (options.strategy) {
            case Strategy::Cascade: {
                const auto instances = instances_for_query(*task.query, *task.session);
                CascadeOutcome outcome =
                    judge_query_cascade(*task.query, instances, cascade_config, client);
                out = std::move(outcome.labels);
                traces_per_task[index] = std::move(outcome.trace);
                break;
            }
            case Strategy::Pointwise: {
                for (const auto& instance : instances_for_query(*task.query, *task.session)) {
                    out.push_back(judge_pointwise(*task.query, instance, baseline_config, client));
                }
                break;
            }
            case Strategy::Pairwise:
            case Strategy::Listwise: {
                const auto instances = instances_for_query(*task.query, *task.session);
                if (instances.empty()) break;
                const RankingResult ranking =
                    options.strategy == Strategy::Pairwise
                        ? judge_pairwise(*task.query, instances, baseline_config, client)
                        : judge_listwise(*task.query, instances, baseline_config, client);
                out = baseline_config.llm_segmentation
                          ? segment_ranking_llm(task.query->query_id, ranking,
                                                baseline_config.scale, client)
                          : segment_ranking(task.query->query_id, ranking, baseline_config.scale);
                break;
            }
            case Strategy::Relevance: {
                // Relevance covers the whole SERP, not only clicked documents.
                for (const auto& doc : task.query->results) {
                    out.push_back(
                        judge_relevance_pointwise(*task.query, doc, baseline_config, client));
                }
                break;
            }
        }
        done[index] = 1;
    };

    std::vector<std::function<void()>> callables;
    callables.reserve(tasks.size());
    for (std::size_t index = 0; index < tasks.size(); ++index) {
        callables.push_back([&, index] { judge_one(index); });
    }

    try {
        run_parallel(std::move(callables), options.workers);
    } catch (const BackendExhaustedError&) {
        exhausted.store(true);
    } catch (const TimeoutError&) {
        exhausted.store(true);
    }

    for (std::size_t index = 0; index < tasks.size(); ++index) {
        if (!done[index]) continue;
        run.completed_query_ids.push_back(tasks[index].query->query_id);
        for (auto& label : labels_per_task[index]) run.labels.insert(std::move(label));
        if (options.strategy == Strategy::Cascade) {
            run.traces.push_back(std::move(traces_per_task[index]));
        }
        ++run.summary.queries_judged;
    }
    run.labels.sort_by_key();
    std::sort(run.traces.begin(), run.traces.end(),
              [](const JudgmentTrace& a, const JudgmentTrace& b) { return a.query_id < b.query_id; });
    std::sort(run.completed_query_ids.begin(), run.completed_query_ids.end());

    run.summary.counters = client.counters();
    run.summary.complete = !exhausted.load();
    return run;
}

std::string trace_to_json_line(const JudgmentTrace& trace) {
    json stages = json::array();
    for (const auto& stage : trace.stages) {
        json voters = json::array();
        for (const auto& voter : stage.voters) {
            voters.push_back({{"voter_j", voter.voter_j},
                              {"prompt_digest", voter.prompt_digest},
                              {"selected", voter.selected_doc_ids}});
        }
        json tally = json::object();
        for (const auto& [doc_id, count] : stage.tally) tally[doc_id] = count;
        stages.push_back({{"stage_k", stage.stage_k},
                          {"remaining", stage.remaining_doc_ids},
                          {"voters", voters},
                          {"tally", tally},
                          {"assigned", stage.assigned_doc_ids}});
    }
    json labels = json::array();
    for (const auto& label : trace.labels) {
        labels.push_back({{"doc_id", label.doc_id}, {"value", label.value}});
    }
    return json{{"query_id", trace.query_id}, {"stages", stages}, {"labels", labels}}.dump();
}

}  // namespace clue
