#pragma once

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "clue/backend.hpp"
#include "clue/baselines.hpp"
#include "clue/cascade.hpp"
#include "clue/labels.hpp"
#include "clue/session.hpp"

namespace clue {

enum class Strategy { Cascade, Pointwise, Pairwise, Listwise, Relevance };

std::string_view to_string(Strategy strategy);
Strategy strategy_from_string(std::string_view name);

struct RunOptions {
    Strategy strategy = Strategy::Cascade;
    OrdinalScale scale;
    int num_voters = 5;
    GuidelineSet guidelines = GuidelineSet::default_usefulness();
    bool llm_segmentation = false;
    int workers = 1;  // concurrent queries
};

struct RunSummary {
    std::size_t queries_total = 0;
    std::size_t queries_judged = 0;
    std::size_t queries_skipped = 0;  // already completed per the resume set
    ClientCounters counters;
    bool complete = true;  // false when aborted on backend exhaustion
};

struct JudgeRun {
    LabelSet labels;                     // sorted by (query_id, doc_id)
    std::vector<JudgmentTrace> traces;   // cascade strategy only, query order
    std::vector<std::string> completed_query_ids;
    RunSummary summary;
};

/// Judges every query of the corpus under the chosen strategy. Queries run on
/// a pool of `workers` threads; output order is independent of scheduling.
/// Queries listed in `skip` are not judged (resume support). On backend
/// exhaustion the run stops issuing new queries and returns the completed
/// part with summary.complete = false.
JudgeRun judge_corpus(const std::vector<SearchSession>& sessions, const RunOptions& options,
                      JudgeClient& client, const std::set<std::string>* skip = nullptr);

std::string trace_to_json_line(const JudgmentTrace& trace);

/// Runs tasks on up to `workers` threads (inline when workers <= 1).
/// Exceptions are captured and the first one rethrown after all tasks finish
/// or are abandoned.
void run_parallel(std::vector<std::function<void()>> tasks, int workers);

}  // namespace clue
