#pragma once

#include <string>
#include <vector>

#include "clue/backend.hpp"
#include "clue/cascade.hpp"
#include "clue/features.hpp"
#include "clue/labels.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

namespace clue {

/// A usefulness ordering of the judged documents, most useful first.
struct RankingResult {
    std::vector<std::string> order;  // doc ids, a permutation of the judged set
    std::vector<std::vector<std::string>> tie_groups;  // groups with equal aggregate score
};

struct BaselineConfig {
    OrdinalScale scale;
    GuidelineSet guidelines = GuidelineSet::default_usefulness();
    bool llm_segmentation = false;  // segment rankings with one extra prompt instead of the
                                    // deterministic equal-frequency rule
};

/// One prompt per instance; the graded reply is clamped onto [1, n].
UsefulnessLabel judge_pointwise(const QueryRecord& query, const JudgmentInstance& instance,
                                const BaselineConfig& config, JudgeClient& client);

/// Judges every unordered pair once, aggregates wins per document (Copeland),
/// and ranks by descending wins with ties broken by ascending click order.
RankingResult judge_pairwise(const QueryRecord& query,
                             const std::vector<JudgmentInstance>& instances,
                             const BaselineConfig& config, JudgeClient& client);

/// One prompt over the whole list; the reply is parsed as a strict ordering of
/// bracketed tags. Ids missing from the reply are appended in click order.
RankingResult judge_listwise(const QueryRecord& query,
                             const std::vector<JudgmentInstance>& instances,
                             const BaselineConfig& config, JudgeClient& client);

/// Splits a ranking into n contiguous blocks, top block labeled C_n. The
/// default deterministic rule uses equal-frequency blocks whose sizes differ
/// by at most one, larger blocks on top; when fewer documents than levels,
/// the top levels are used one document each. Ranking order is preserved:
/// an earlier document never gets a lower level than a later one.
std::vector<UsefulnessLabel> segment_ranking(const std::string& query_id,
                                             const RankingResult& ranking,
                                             const OrdinalScale& scale,
                                             LabelSource source = LabelSource::LlmUsefulness);

/// LLM-mode segmentation: one extra prompt proposes the block boundaries; any
/// reply that breaks ranking order or coverage falls back to the deterministic rule.
std::vector<UsefulnessLabel> segment_ranking_llm(const std::string& query_id,
                                                 const RankingResult& ranking,
                                                 const OrdinalScale& scale, JudgeClient& client,
                                                 LabelSource source = LabelSource::LlmUsefulness);

/// Graded relevance judgment of any result (clicked or not); the prompt
/// carries no behavior or context features. Produces source LlmRelevance.
UsefulnessLabel judge_relevance_pointwise(const QueryRecord& query, const DocRecord& doc,
                                          const BaselineConfig& config, JudgeClient& client);

/// Bracket-ranking parser: tags in order of first appearance, unknown tags
/// dropped. Throws UnparseableError when no valid tag appears at all.
std::vector<std::string> parse_ranking_reply(const std::string& raw,
                                             const std::vector<std::string>& valid_ids);

}  // namespace clue
