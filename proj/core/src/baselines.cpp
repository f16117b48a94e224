#include "clue/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "json.hpp"

#include "clue/error.hpp"

namespace clue {

namespace {

using nlohmann::json;

// Click order of each doc, for the pairwise tie-break and listwise repair.
std::map<std::string, int> click_order_of(const std::vector<JudgmentInstance>& instances) {
    std::map<std::string, int> order;
    for (const auto& instance : instances) {
        order.emplace(instance.doc_ref, instance.features.doc_click_order);
    }
    return order;
}

}  // namespace

std::vector<std::string> parse_ranking_reply(const std::string& raw,
                                             const std::vector<std::string>& valid_ids) {
    std::vector<std::string> ordered;
    std::size_t pos = 0;
    while ((pos = raw.find('[', pos)) != std::string::npos) {
        const std::size_t close = raw.find(']', pos);
        if (close == std::string::npos) break;
        std::string token = raw.substr(pos + 1, close - pos - 1);
        token.erase(std::remove_if(token.begin(), token.end(),
                                   [](unsigned char c) { return std::isspace(c) || c == '"'; }),
                    token.end());
        pos = close + 1;
        if (token.empty()) continue;
        if (std::find(valid_ids.begin(), valid_ids.end(), token) == valid_ids.end()) continue;
        if (std::find(ordered.begin(), ordered.end(), token) != ordered.end()) continue;
        ordered.push_back(token);
    }
    if (ordered.empty()) {
        throw UnparseableError("no ranking found in reply: " +
                               (raw.size() > 120 ? raw.substr(0, 120) + "…" : raw));
    }
    return ordered;
}

UsefulnessLabel judge_pointwise(const QueryRecord& query, const JudgmentInstance& instance,
                                const BaselineConfig& config, JudgeClient& client) {
    const PromptSpec prompt =
        build_pointwise_prompt(query, instance, config.guidelines, config.scale);
    const int grade = client.integer_grade(prompt, config.scale);
    return UsefulnessLabel{instance.query_ref, instance.doc_ref, LabelSource::LlmUsefulness, grade,
                           config.scale.n};
}

RankingResult judge_pairwise(const QueryRecord& query,
                             const std::vector<JudgmentInstance>& instances,
                             const BaselineConfig& config, JudgeClient& client) {
    if (instances.empty()) throw EmptyDocListError("pairwise judging needs at least one document");

    std::map<std::string, int> wins;
    for (const auto& instance : instances) wins[instance.doc_ref] = 0;

    for (std::size_t i = 0; i < instances.size(); ++i) {
        for (std::size_t j = i + 1; j < instances.size(); ++j) {
            const PromptSpec prompt =
                build_pairwise_prompt(query, instances[i], instances[j], config.guidelines);
            const ParsedSelection selection = client.select(prompt);
            // Exactly one selected tag names a winner; anything else scores as a draw.
            if (selection.selected_ids.size() == 1) {
                const std::size_t tag = static_cast<std::size_t>(
                    std::stoi(selection.selected_ids.front()));
                ++wins[prompt.doc_id_for_tag[tag - 1]];
            }
        }
    }

    const auto order = click_order_of(instances);
    std::vector<std::string> ranking;
    for (const auto& instance : instances) ranking.push_back(instance.doc_ref);
    std::sort(ranking.begin(), ranking.end(), [&](const std::string& a, const std::string& b) {
        if (wins.at(a) != wins.at(b)) return wins.at(a) > wins.at(b);
        return order.at(a) < order.at(b);
    });

    RankingResult result;
    result.order = ranking;
    std::vector<std::string> group;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        group.push_back(ranking[i]);
        const bool last = i + 1 == ranking.size();
        if (last || wins.at(ranking[i + 1]) != wins.at(ranking[i])) {
            if (group.size() > 1) result.tie_groups.push_back(group);
            group.clear();
        }
    }
    return result;
}

RankingResult judge_listwise(const QueryRecord& query,
                             const std::vector<JudgmentInstance>& instances,
                             const BaselineConfig& config, JudgeClient& client) {
    if (instances.empty()) throw EmptyDocListError("listwise judging needs at least one document");

    if (instances.size() == 1) {
        return RankingResult{{instances.front().doc_ref}, {}};
    }

    const PromptSpec prompt = build_listwise_prompt(query, instances, config.guidelines);
    const std::vector<std::string> ranked_tags = client.ranking(prompt);

    RankingResult result;
    std::vector<bool> used(instances.size(), false);
    for (const auto& tag : ranked_tags) {
        const std::size_t index = static_cast<std::size_t>(std::stoi(tag)) - 1;
        result.order.push_back(prompt.doc_id_for_tag[index]);
        used[index] = true;
    }
    // Ids the reply omitted are appended in click order.
    bool repaired = false;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!used[i]) {
            result.order.push_back(instances[i].doc_ref);
            repaired = true;
        }
    }
    if (repaired) client.note_repaired_ranking();
    return result;
}

std::vector<UsefulnessLabel> segment_ranking(const std::string& query_id,
                                             const RankingResult& ranking,
                                             const OrdinalScale& scale, LabelSource source) {
    const std::size_t m = ranking.order.size();
    std::vector<UsefulnessLabel> labels;
    if (m == 0) return labels;

    // Equal-frequency contiguous blocks, sizes differing by at most one, the
    // larger blocks (and all blocks when m < n) at the top of the scale.
    const std::size_t n = static_cast<std::size_t>(scale.n);
    const std::size_t base = m / n;
    const std::size_t extra = m % n;

    std::size_t position = 0;
    for (std::size_t block = 0; block < n && position < m; ++block) {
        const std::size_t size = base + (block < extra ? 1 : 0);
        const int level = scale.n - static_cast<int>(block);
        for (std::size_t i = 0; i < size && position < m; ++i, ++position) {
            labels.push_back(
                UsefulnessLabel{query_id, ranking.order[position], source, level, scale.n});
        }
    }
    return labels;
}

std::vector<UsefulnessLabel> segment_ranking_llm(const std::string& query_id,
                                                 const RankingResult& ranking,
                                                 const OrdinalScale& scale, JudgeClient& client,
                                                 LabelSource source) {
    if (ranking.order.empty()) return {};

    const PromptSpec prompt = build_segmentation_prompt(query_id, ranking.order, scale);
    std::vector<std::vector<std::size_t>> groups;
    try {
        const json reply = json::parse(client.complete(prompt), nullptr, false);
        if (!reply.is_discarded() && reply.is_object() && reply.contains("segments") &&
            reply["segments"].is_array()) {
            for (const auto& segment : reply["segments"]) {
                if (!segment.is_array()) throw UnparseableError("segment is not an array");
                std::vector<std::size_t> group;
                for (const auto& entry : segment) {
                    const std::string tag = entry.is_string()
                                                ? entry.get<std::string>()
                                                : std::to_string(entry.get<long long>());
                    group.push_back(static_cast<std::size_t>(std::stoul(tag)));
                }
                groups.push_back(std::move(group));
            }
        }
    } catch (...) {
        groups.clear();
    }

    // The reply must cover 1..m in ranking order with at most n groups;
    // otherwise the deterministic rule takes over.
    std::size_t expected = 1;
    bool valid = !groups.empty() && groups.size() <= static_cast<std::size_t>(scale.n);
    for (const auto& group : groups) {
        if (group.empty()) valid = false;
        for (std::size_t tag : group) {
            if (tag != expected) valid = false;
            ++expected;
        }
    }
    if (!valid || expected != ranking.order.size() + 1) {
        return segment_ranking(query_id, ranking, scale, source);
    }

    std::vector<UsefulnessLabel> labels;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const int level = scale.n - static_cast<int>(g);
        for (std::size_t tag : groups[g]) {
            labels.push_back(
                UsefulnessLabel{query_id, ranking.order[tag - 1], source, level, scale.n});
        }
    }
    return labels;
}

UsefulnessLabel judge_relevance_pointwise(const QueryRecord& query, const DocRecord& doc,
                                          const BaselineConfig& config, JudgeClient& client) {
    const PromptSpec prompt = build_relevance_prompt(query, doc, config.scale);
    const int grade = client.integer_grade(prompt, config.scale);
    return UsefulnessLabel{query.query_id, doc.doc_id, LabelSource::LlmRelevance, grade,
                           config.scale.n};
}

}  // namespace clue
