#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "clue/features.hpp"
#include "clue/labels.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

namespace clue {

/// Adjectives occupying the Aspect slot of the judge prompt.
struct GuidelineSet {
    std::vector<std::string> adjectives;
    std::string origin;

    /// The six default usefulness aspects.
    static GuidelineSet default_usefulness();

    /// Throws ConfigError when empty or containing duplicates.
    void validate() const;
};

enum class PromptMode {
    UsefulnessCascade,
    RelevancePointwise,
    PointwiseUsefulness,
    Pairwise,
    Listwise,
    Segmentation,
};

std::string_view to_string(PromptMode mode);

/// A rendered prompt for one backend call. Documents are tagged [1]..[m] by
/// their position in the instance list handed to the builder; a permutation
/// only reorders the blocks, never the tags, so voter texts differ solely in
/// block order. valid_doc_ids holds the tag strings ("1".."m") and
/// doc_id_for_tag maps tag i (1-based) back to the document id.
struct PromptSpec {
    PromptMode mode = PromptMode::UsefulnessCascade;
    int stage_k = 0;  // 2..n for cascade stages, 0 elsewhere
    int scale_n = 0;  // scale arity for graded prompts, 0 when not applicable
    int voter_j = 1;
    std::string query_id;
    std::vector<int> permutation;  // display order: permutation[p] = tag shown at position p
    std::string rendered_text;
    std::vector<std::string> valid_doc_ids;
    std::vector<std::string> doc_id_for_tag;
    bool expects_reasoning = true;
};

/// One supervised example exported for a stage classifier: the judge prompt
/// split into instruction/input, and the bare selection JSON as output.
struct FinetuneRecord {
    std::string instruction;
    std::string input;
    std::string output;  // selection only, no reasoning
    int stage_k = 0;
    std::vector<std::string> included_doc_ids;  // audit field, not serialized
};

/// Head-preserving truncation budget for document content inside prompts.
inline constexpr std::size_t kContentCharBudget = 4000;
inline constexpr const char* kTruncationMarker = "…[truncated]";

/// Deterministic document permutation for a voter, seeded by
/// hash(query_id, stage_k, voter_j). Voter 1 always gets the identity; a
/// single-document list always yields [1]. Returns 1-based tags in display order.
std::vector<int> permutation_for_voter(const std::string& query_id, int stage_k, int voter_j,
                                       std::size_t len);

/// Renders the stage-k selection prompt over the remaining instances.
/// The text contains, in order: role statement, GOAL block (when the session
/// has task text), the query, the guideline adjectives as the Aspect section,
/// one block per document in permutation order carrying the bracketed tag and
/// every feature-bundle field, the level-k criterion, and the output-format
/// instruction (a thought followed by {"thought": ..., "selected": [...]}).
/// Throws EmptyDocListError when instances is empty.
PromptSpec build_cascade_prompt(const QueryRecord& query,
                                const std::vector<JudgmentInstance>& remaining_instances,
                                int stage_k, const GuidelineSet& guidelines,
                                const std::vector<int>& permutation, const OrdinalScale& scale,
                                int voter_j = 1);

/// Graded relevance prompt: query and document content only, no behavior or
/// context features. Replies with a single integer on the scale.
PromptSpec build_relevance_prompt(const QueryRecord& query, const DocRecord& doc,
                                  const OrdinalScale& scale);

/// Single-document n-level usefulness prompt (direct graded reply).
PromptSpec build_pointwise_prompt(const QueryRecord& query, const JudgmentInstance& instance,
                                  const GuidelineSet& guidelines, const OrdinalScale& scale);

/// Two-document comparison prompt; the reply selects the more useful tag.
PromptSpec build_pairwise_prompt(const QueryRecord& query, const JudgmentInstance& first,
                                 const JudgmentInstance& second, const GuidelineSet& guidelines);

/// Whole-list ranking prompt; the reply is a bracket ranking like [2]>[1]>[3].
PromptSpec build_listwise_prompt(const QueryRecord& query,
                                 const std::vector<JudgmentInstance>& instances,
                                 const GuidelineSet& guidelines);

/// Prompt asking to split an already-ranked list into n contiguous groups.
PromptSpec build_segmentation_prompt(const std::string& query_id,
                                     const std::vector<std::string>& ranked_doc_ids,
                                     const OrdinalScale& scale);

/// Exports the stage-k training example for one query: exactly the instances
/// whose gold label y satisfies y = C_k or y < C_k are included; the expected
/// output selects those with y = C_k. Returns zero records when no instance
/// qualifies, one otherwise. Throws MissingGoldError when an instance has no
/// gold label.
std::vector<FinetuneRecord> export_finetune_set(const QueryRecord& query,
                                                const std::vector<JudgmentInstance>& instances,
                                                const LabelSet& gold, int stage_k,
                                                const GuidelineSet& guidelines,
                                                const OrdinalScale& scale);

/// Stable 64-bit FNV-1a hash used for permutation seeding and seed derivation.
std::uint64_t stable_hash64(std::string_view text);

/// Derives a labeled sub-seed from a top-level seed.
std::uint64_t mix_seed(std::uint64_t seed, std::string_view label);

}  // namespace clue
