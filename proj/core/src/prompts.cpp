#include "clue/prompts.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>

#include "clue/error.hpp"
#include "clue/labels.hpp"

namespace clue {

namespace {

std::string format_seconds(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", value);
    return buf;
}

std::string truncate_content(const std::string& content) {
    if (content.size() <= kContentCharBudget) return content;
    // Head-preserving cut; avoid splitting a UTF-8 sequence mid-codepoint.
    std::size_t cut = kContentCharBudget;
    while (cut > 0 && (static_cast<unsigned char>(content[cut]) & 0xC0) == 0x80) --cut;
    return content.substr(0, cut) + kTruncationMarker;
}

std::string ranks_to_string(const std::vector<int>& ranks) {
    std::string out = "[";
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(ranks[i]);
    }
    out += "]";
    return out;
}

void append_feature_block(std::string& text, int tag, const FeatureBundle& f) {
    text += "[" + std::to_string(tag) + "]\n";
    text += "doc_content_text: " + truncate_content(f.doc_content_text) + "\n";
    text += "query_string_text: " + f.query_string_text + "\n";
    text += "task_description_text: " + f.task_description_text + "\n";
    text += "query_total_click_number: " + std::to_string(f.query_total_click_number) + "\n";
    text += "query_clicked_ranks_list: " + ranks_to_string(f.query_clicked_ranks_list) + "\n";
    text += "query_max_clicked_rank: " + std::to_string(f.query_max_clicked_rank) + "\n";
    text += "avg_doc_dwell_time_in_query: " + format_seconds(f.avg_doc_dwell_time_in_query) + "\n";
    text += "doc_click_order: " + std::to_string(f.doc_click_order) + "\n";
    text += "doc_dwell_time: " + format_seconds(f.doc_dwell_time) + "\n";
    text += std::string("session_end: ") + (f.session_end ? "true" : "false") + "\n";
}

std::string role_statement() {
    return "You are a search quality rater judging how useful clicked web documents were to the "
           "real user who clicked them.\n";
}

std::string goal_block(const std::string& task_description) {
    if (task_description.empty()) return "";
    return "GOAL: " + task_description + "\n";
}

std::string aspect_section(const GuidelineSet& guidelines) {
    std::string out = "Aspect: when judging usefulness, consider whether the document is ";
    for (std::size_t i = 0; i < guidelines.adjectives.size(); ++i) {
        if (i) out += (i + 1 == guidelines.adjectives.size()) ? " and " : ", ";
        out += guidelines.adjectives[i];
    }
    out += ".\n";
    return out;
}

std::string selection_format_instruction() {
    return "Think it through first, then finish your reply with a single JSON object of the form "
           "{\"thought\": \"<your reasoning>\", \"selected\": [\"<id>\", \"<id>\", ...]} where "
           "each id is the bare number of a selected document. Select zero, one or more "
           "documents; \"selected\" may be an empty list.\n";
}

std::string criterion_statement(int stage_k, const OrdinalScale& scale) {
    return "Criterion: select every document that reaches usefulness level " +
           scale.name_of(stage_k) + " (level " + std::to_string(stage_k) + " of " +
           std::to_string(scale.n) + ", where level " + std::to_string(scale.n) +
           " is the most useful). Documents below this level must not be selected.\n";
}

void fill_tags(PromptSpec& spec, const std::vector<std::string>& doc_ids) {
    spec.valid_doc_ids.clear();
    spec.doc_id_for_tag = doc_ids;
    for (std::size_t i = 1; i <= doc_ids.size(); ++i) {
        spec.valid_doc_ids.push_back(std::to_string(i));
    }
}

std::vector<int> identity_permutation(std::size_t len) {
    std::vector<int> perm(len);
    for (std::size_t i = 0; i < len; ++i) perm[i] = static_cast<int>(i + 1);
    return perm;
}

void check_permutation(const std::vector<int>& permutation, std::size_t len) {
    if (permutation.size() != len) {
        throw ConfigError("permutation length " + std::to_string(permutation.size()) +
                          " does not match document count " + std::to_string(len));
    }
    std::vector<bool> seen(len, false);
    for (int tag : permutation) {
        if (tag < 1 || tag > static_cast<int>(len) || seen[static_cast<std::size_t>(tag - 1)]) {
            throw ConfigError("permutation is not a bijection over 1.." + std::to_string(len));
        }
        seen[static_cast<std::size_t>(tag - 1)] = true;
    }
}

}  // namespace

GuidelineSet GuidelineSet::default_usefulness() {
    return GuidelineSet{
        {"helpful", "detailed", "related", "encyclopedic", "specific", "comprehensive"},
        "user_study_word_frequency"};
}

void GuidelineSet::validate() const {
    if (adjectives.empty()) throw ConfigError("guideline set must not be empty");
    std::set<std::string> seen;
    for (const auto& adj : adjectives) {
        if (!seen.insert(adj).second) {
            throw ConfigError("duplicate guideline adjective '" + adj + "'");
        }
    }
}

std::string_view to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::UsefulnessCascade: return "usefulness_cascade";
        case PromptMode::RelevancePointwise: return "relevance_pointwise";
        case PromptMode::PointwiseUsefulness: return "pointwise_usefulness";
        case PromptMode::Pairwise: return "pairwise";
        case PromptMode::Listwise: return "listwise";
        case PromptMode::Segmentation: return "segmentation";
    }
    return "unknown";
}

std::uint64_t stable_hash64(std::string_view text) {
    // FNV-1a, 64-bit.
    std::uint64_t hash = 1469598103934665603ULL;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t mixed = stable_hash64(label);
    mixed ^= seed + 0x9e3779b97f4a7c15ULL + (mixed << 6) + (mixed >> 2);
    return mixed;
}

std::vector<int> permutation_for_voter(const std::string& query_id, int stage_k, int voter_j,
                                       std::size_t len) {
    if (len == 0) return {};
    auto perm = identity_permutation(len);
    if (voter_j == 1 || len == 1) return perm;

    const std::string key = query_id + "|" + std::to_string(stage_k) + "|" + std::to_string(voter_j);
    std::mt19937_64 rng(stable_hash64(key));
    // Fisher-Yates with a plain modulo draw: the engine is standard-fixed, so
    // the shuffle is identical on every platform.
    for (std::size_t i = len - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

PromptSpec build_cascade_prompt(const QueryRecord& query,
                                const std::vector<JudgmentInstance>& remaining_instances,
                                int stage_k, const GuidelineSet& guidelines,
                                const std::vector<int>& permutation, const OrdinalScale& scale,
                                int voter_j) {
    if (remaining_instances.empty()) {
        throw EmptyDocListError("cascade prompt needs at least one document");
    }
    if (stage_k < 2 || stage_k > scale.n) {
        throw OutOfRangeError("stage " + std::to_string(stage_k) + " outside [2, " +
                              std::to_string(scale.n) + "]");
    }
    guidelines.validate();
    check_permutation(permutation, remaining_instances.size());

    PromptSpec spec;
    spec.mode = PromptMode::UsefulnessCascade;
    spec.stage_k = stage_k;
    spec.scale_n = scale.n;
    spec.voter_j = voter_j;
    spec.query_id = query.query_id;
    spec.permutation = permutation;
    spec.expects_reasoning = true;

    std::vector<std::string> doc_ids;
    doc_ids.reserve(remaining_instances.size());
    for (const auto& instance : remaining_instances) doc_ids.push_back(instance.doc_ref);
    fill_tags(spec, doc_ids);

    const std::string task = remaining_instances.front().features.task_description_text;

    std::string text = role_statement();
    text += goal_block(task);
    text += "Query: " + query.query_string_text + "\n";
    text += aspect_section(guidelines);
    text += "Candidate documents, one block per document, tagged by id:\n\n";
    for (int tag : permutation) {
        append_feature_block(text, tag, remaining_instances[static_cast<std::size_t>(tag - 1)].features);
        text += "\n";
    }
    text += criterion_statement(stage_k, scale);
    text += selection_format_instruction();

    spec.rendered_text = std::move(text);
    return spec;
}

PromptSpec build_relevance_prompt(const QueryRecord& query, const DocRecord& doc,
                                  const OrdinalScale& scale) {
    PromptSpec spec;
    spec.mode = PromptMode::RelevancePointwise;
    spec.scale_n = scale.n;
    spec.voter_j = 1;
    spec.query_id = query.query_id;
    spec.permutation = {1};
    spec.expects_reasoning = false;
    fill_tags(spec, {doc.doc_id});

    std::string text =
        "You are a search quality rater judging how relevant a web document is to a query.\n";
    text += "Query: " + query.query_string_text + "\n";
    text += "[1]\n";
    if (doc.content_text.empty()) {
        text += "document_content: (ContentMissing: no text was captured for this document)\n";
    } else {
        text += "document_content: " + truncate_content(doc.content_text) + "\n";
    }
    text += "Grade the relevance of document [1] on an ordered scale from 1 to " +
            std::to_string(scale.n) + " (";
    for (int level = 1; level <= scale.n; ++level) {
        if (level > 1) text += ", ";
        text += std::to_string(level) + " = " + scale.name_of(level);
    }
    text += "). Reply with the single integer grade and nothing else.\n";

    spec.rendered_text = std::move(text);
    return spec;
}

PromptSpec build_pointwise_prompt(const QueryRecord& query, const JudgmentInstance& instance,
                                  const GuidelineSet& guidelines, const OrdinalScale& scale) {
    guidelines.validate();

    PromptSpec spec;
    spec.mode = PromptMode::PointwiseUsefulness;
    spec.scale_n = scale.n;
    spec.voter_j = 1;
    spec.query_id = query.query_id;
    spec.permutation = {1};
    spec.expects_reasoning = false;
    fill_tags(spec, {instance.doc_ref});

    std::string text = role_statement();
    text += goal_block(instance.features.task_description_text);
    text += "Query: " + query.query_string_text + "\n";
    text += aspect_section(guidelines);
    append_feature_block(text, 1, instance.features);
    text += "Grade the usefulness of document [1] to this user on an ordered scale from 1 to " +
            std::to_string(scale.n) + ", where " + std::to_string(scale.n) +
            " is the most useful. Reply with the single integer grade and nothing else.\n";

    spec.rendered_text = std::move(text);
    return spec;
}

PromptSpec build_pairwise_prompt(const QueryRecord& query, const JudgmentInstance& first,
                                 const JudgmentInstance& second, const GuidelineSet& guidelines) {
    guidelines.validate();

    PromptSpec spec;
    spec.mode = PromptMode::Pairwise;
    spec.voter_j = 1;
    spec.query_id = query.query_id;
    spec.permutation = {1, 2};
    spec.expects_reasoning = true;
    fill_tags(spec, {first.doc_ref, second.doc_ref});

    std::string text = role_statement();
    text += goal_block(first.features.task_description_text);
    text += "Query: " + query.query_string_text + "\n";
    text += aspect_section(guidelines);
    append_feature_block(text, 1, first.features);
    text += "\n";
    append_feature_block(text, 2, second.features);
    text += "Which document was more useful to this user? ";
    text += selection_format_instruction();
    text += "Select exactly one id.\n";

    spec.rendered_text = std::move(text);
    return spec;
}

PromptSpec build_listwise_prompt(const QueryRecord& query,
                                 const std::vector<JudgmentInstance>& instances,
                                 const GuidelineSet& guidelines) {
    if (instances.empty()) throw EmptyDocListError("listwise prompt needs at least one document");
    guidelines.validate();

    PromptSpec spec;
    spec.mode = PromptMode::Listwise;
    spec.voter_j = 1;
    spec.query_id = query.query_id;
    spec.permutation = identity_permutation(instances.size());
    spec.expects_reasoning = false;

    std::vector<std::string> doc_ids;
    for (const auto& instance : instances) doc_ids.push_back(instance.doc_ref);
    fill_tags(spec, doc_ids);

    std::string text = role_statement();
    text += goal_block(instances.front().features.task_description_text);
    text += "Query: " + query.query_string_text + "\n";
    text += aspect_section(guidelines);
    text += "Candidate documents, one block per document, tagged by id:\n\n";
    for (std::size_t i = 0; i < instances.size(); ++i) {
        append_feature_block(text, static_cast<int>(i + 1), instances[i].features);
        text += "\n";
    }
    text += "Rank all documents from most useful to least useful for this user. Reply with the "
            "bracketed ids joined by '>' and nothing else, for example: [2]>[1]>[3] for three "
            "documents. Include every id exactly once.\n";

    spec.rendered_text = std::move(text);
    return spec;
}

PromptSpec build_segmentation_prompt(const std::string& query_id,
                                     const std::vector<std::string>& ranked_doc_ids,
                                     const OrdinalScale& scale) {
    if (ranked_doc_ids.empty()) throw EmptyDocListError("segmentation prompt needs a ranking");

    PromptSpec spec;
    spec.mode = PromptMode::Segmentation;
    spec.scale_n = scale.n;
    spec.voter_j = 1;
    spec.query_id = query_id;
    spec.permutation = identity_permutation(ranked_doc_ids.size());
    spec.expects_reasoning = false;
    fill_tags(spec, ranked_doc_ids);

    std::string text = "Documents are already ranked from most to least useful:\n";
    for (std::size_t i = 0; i < ranked_doc_ids.size(); ++i) {
        text += "[" + std::to_string(i + 1) + "]";
        if (i + 1 < ranked_doc_ids.size()) text += " > ";
    }
    text += "\nSplit this ranking into at most " + std::to_string(scale.n) +
            " contiguous groups of descending usefulness, keeping the ranking order. Reply with a "
            "single JSON object {\"segments\": [[ids of the top group], [next group], ...]} and "
            "nothing else.\n";

    spec.rendered_text = std::move(text);
    return spec;
}

std::vector<FinetuneRecord> export_finetune_set(const QueryRecord& query,
                                                const std::vector<JudgmentInstance>& instances,
                                                const LabelSet& gold, int stage_k,
                                                const GuidelineSet& guidelines,
                                                const OrdinalScale& scale) {
    if (stage_k < 2 || stage_k > scale.n) {
        throw OutOfRangeError("stage " + std::to_string(stage_k) + " outside [2, " +
                              std::to_string(scale.n) + "]");
    }
    if (instances.empty()) return {};

    // Keep instances with y = C_k or y < C_k; the expected selection is y = C_k.
    std::vector<JudgmentInstance> kept;
    std::vector<bool> is_positive;
    for (const auto& instance : instances) {
        const UsefulnessLabel* label = gold.find_any(instance.query_ref, instance.doc_ref);
        if (label == nullptr) {
            throw MissingGoldError("no gold label for (" + instance.query_ref + ", " +
                                   instance.doc_ref + ")");
        }
        if (label->value <= stage_k) {
            kept.push_back(instance);
            is_positive.push_back(label->value == stage_k);
        }
    }
    if (kept.empty()) return {};
    guidelines.validate();

    // Same framing as the cascade prompt, split into the constant instruction
    // and the per-query input; the output keeps only the selection JSON.
    FinetuneRecord record;
    record.stage_k = stage_k;
    record.instruction = role_statement() + aspect_section(guidelines) +
                         criterion_statement(stage_k, scale) + selection_format_instruction();

    const std::string task = kept.front().features.task_description_text;
    std::string input = goal_block(task);
    input += "Query: " + query.query_string_text + "\n";
    input += "Candidate documents, one block per document, tagged by id:\n\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        append_feature_block(input, static_cast<int>(i + 1), kept[i].features);
        input += "\n";
    }
    record.input = std::move(input);

    std::string output = R"({"selected":[)";
    bool first = true;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        record.included_doc_ids.push_back(kept[i].doc_ref);
        if (!is_positive[i]) continue;
        if (!first) output += ",";
        output += "\"" + std::to_string(i + 1) + "\"";
        first = false;
    }
    output += "]}";
    record.output = std::move(output);
    return {std::move(record)};
}

}  // namespace clue
