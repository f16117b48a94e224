#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "clue/backend.hpp"
#include "clue/features.hpp"
#include "clue/labels.hpp"
#include "clue/prompts.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

namespace clue {

struct CascadeConfig {
    OrdinalScale scale;
    int num_voters = 5;  // M, odd
    GuidelineSet guidelines = GuidelineSet::default_usefulness();
    BackendConfig backend;
    int voter_workers = 1;  // threads per stage for issuing voter prompts

    /// Throws ConfigError (even or non-positive M) or propagates scale errors.
    void validate() const;
};

/// Votes per document within one stage.
using VoteTally = std::map<std::string, int>;  // doc_id -> count in [0, M]

/// One binary stage of the linear reference model: g(x) = w.x + b.
struct LinearStageClassifier {
    std::vector<double> weights;
    double bias = 0.0;
};

struct VoterRecord {
    int voter_j = 1;
    std::string prompt_digest;
    std::vector<std::string> selected_doc_ids;
};

struct StageRecord {
    int stage_k = 0;
    std::vector<std::string> remaining_doc_ids;  // docs present in this stage's prompts
    std::vector<VoterRecord> voters;
    VoteTally tally;
    std::vector<std::string> assigned_doc_ids;
};

/// Full audit record of one query's cascade run.
struct JudgmentTrace {
    std::string query_id;
    std::vector<StageRecord> stages;
    std::vector<UsefulnessLabel> labels;
};

struct CascadeOutcome {
    std::vector<UsefulnessLabel> labels;  // sorted by doc_id, source LlmUsefulness
    JudgmentTrace trace;
};

/// Runs the n-1 stage cascade over the clicked documents of one query.
/// For k = n down to 2, each of the M voters judges the remaining documents
/// under its own permutation; a document is assigned C_k when its tally
/// exceeds M/2 and leaves the remaining set. Whatever survives stage 2 is
/// assigned C_1. Stages with an empty remaining set are skipped.
CascadeOutcome judge_query_cascade(const QueryRecord& query,
                                   const std::vector<JudgmentInstance>& instances,
                                   const CascadeConfig& config, JudgeClient& client);

/// Documents whose vote count exceeds M/2 (strict majority). Returned in the
/// tally's key order. Throws EvenVoterCountError when M is even.
std::set<std::string> assign_majority(const VoteTally& tally, int num_voters);

/// Evaluates the linear stage classifiers from level n downward and returns
/// the first level whose decision value is positive, or 1 when none is.
/// `stages_desc` is ordered k = n..2, so its size is n-1.
/// Throws DimensionMismatchError when a weight vector disagrees with x.
int judge_linear_reference(const std::vector<double>& feature_vector,
                           const std::vector<LinearStageClassifier>& stages_desc);

/// Maximum backend calls the cascade can spend on a query: M * (n - 1) when
/// the query has at least one click, otherwise 0.
int call_budget(const OrdinalScale& scale, int num_voters, const QueryRecord& query);

}  // namespace clue
