#include "clue/cascade.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "clue/error.hpp"

namespace clue {

void CascadeConfig::validate() const {
    if (num_voters < 1) throw ConfigError("voter count must be >= 1");
    if (num_voters % 2 == 0) {
        throw EvenVoterCountError("voter count must be odd, got " + std::to_string(num_voters));
    }
    if (scale.n < 2) throw ConfigError("cascade needs a scale with n >= 2");
    if (voter_workers < 1) throw ConfigError("voter_workers must be >= 1");
    guidelines.validate();
    backend.validate();
}

std::set<std::string> assign_majority(const VoteTally& tally, int num_voters) {
    if (num_voters % 2 == 0) {
        throw EvenVoterCountError("strict majority needs an odd voter count, got " +
                                  std::to_string(num_voters));
    }
    std::set<std::string> assigned;
    for (const auto& [doc_id, count] : tally) {
        if (2 * count > num_voters) assigned.insert(doc_id);
    }
    return assigned;
}

CascadeOutcome judge_query_cascade(const QueryRecord& query,
                                   const std::vector<JudgmentInstance>& instances,
                                   const CascadeConfig& config, JudgeClient& client) {
    config.validate();
    const int n = config.scale.n;
    const int voters = config.num_voters;

    CascadeOutcome outcome;
    outcome.trace.query_id = query.query_id;

    std::vector<JudgmentInstance> remaining = instances;
    for (int stage_k = n; stage_k >= 2; --stage_k) {
        if (remaining.empty()) break;  // nothing left to assign, stage skipped

        StageRecord record;
        record.stage_k = stage_k;
        for (const auto& instance : remaining) record.remaining_doc_ids.push_back(instance.doc_ref);
        record.voters.resize(static_cast<std::size_t>(voters));

        // All M voter replies are gathered before any vote is tallied, so the
        // reply order cannot influence the outcome.
        auto run_voter = [&](int voter_j) {
            const auto permutation = permutation_for_voter(query.query_id, stage_k, voter_j,
                                                           remaining.size());
            const PromptSpec prompt = build_cascade_prompt(query, remaining, stage_k,
                                                           config.guidelines, permutation,
                                                           config.scale, voter_j);
            const ParsedSelection selection = client.select(prompt);

            VoterRecord& vr = record.voters[static_cast<std::size_t>(voter_j - 1)];
            vr.voter_j = voter_j;
            vr.prompt_digest = prompt_digest(prompt);
            for (const auto& tag : selection.selected_ids) {
                const std::size_t index = static_cast<std::size_t>(std::stoi(tag)) - 1;
                vr.selected_doc_ids.push_back(prompt.doc_id_for_tag[index]);
            }
        };

        if (config.voter_workers > 1 && voters > 1) {
            std::vector<std::thread> threads;
            std::atomic<int> next{1};
            const int width = std::min(config.voter_workers, voters);
            std::vector<std::exception_ptr> errors(static_cast<std::size_t>(width));
            for (int w = 0; w < width; ++w) {
                threads.emplace_back([&, w] {
                    for (int j = next.fetch_add(1); j <= voters; j = next.fetch_add(1)) {
                        try {
                            run_voter(j);
                        } catch (...) {
                            errors[static_cast<std::size_t>(w)] = std::current_exception();
                            return;
                        }
                    }
                });
            }
            for (auto& t : threads) t.join();
            for (const auto& error : errors) {
                if (error) std::rethrow_exception(error);
            }
        } else {
            for (int j = 1; j <= voters; ++j) run_voter(j);
        }

        for (const auto& vr : record.voters) {
            for (const auto& doc_id : vr.selected_doc_ids) ++record.tally[doc_id];
        }
        const std::set<std::string> assigned = assign_majority(record.tally, voters);

        std::vector<JudgmentInstance> next_remaining;
        for (const auto& instance : remaining) {
            if (assigned.count(instance.doc_ref)) {
                record.assigned_doc_ids.push_back(instance.doc_ref);
                outcome.labels.push_back(UsefulnessLabel{query.query_id, instance.doc_ref,
                                                         LabelSource::LlmUsefulness, stage_k,
                                                         config.scale.n});
            } else {
                next_remaining.push_back(instance);
            }
        }
        remaining = std::move(next_remaining);
        outcome.trace.stages.push_back(std::move(record));
    }

    // Whatever survives stage 2 did not meet any criterion and lands at C_1.
    for (const auto& instance : remaining) {
        outcome.labels.push_back(UsefulnessLabel{query.query_id, instance.doc_ref,
                                                 LabelSource::LlmUsefulness, 1, config.scale.n});
    }

    std::sort(outcome.labels.begin(), outcome.labels.end(),
              [](const UsefulnessLabel& a, const UsefulnessLabel& b) {
                  return std::tie(a.query_id, a.doc_id) < std::tie(b.query_id, b.doc_id);
              });
    outcome.trace.labels = outcome.labels;
    return outcome;
}

int judge_linear_reference(const std::vector<double>& feature_vector,
                           const std::vector<LinearStageClassifier>& stages_desc) {
    const int n = static_cast<int>(stages_desc.size()) + 1;
    for (std::size_t i = 0; i < stages_desc.size(); ++i) {
        const auto& stage = stages_desc[i];
        if (stage.weights.size() != feature_vector.size()) {
            throw DimensionMismatchError("classifier " + std::to_string(i) + " expects " +
                                         std::to_string(stage.weights.size()) + " features, got " +
                                         std::to_string(feature_vector.size()));
        }
        double decision = stage.bias;
        for (std::size_t d = 0; d < feature_vector.size(); ++d) {
            decision += stage.weights[d] * feature_vector[d];
        }
        if (decision > 0.0) return n - static_cast<int>(i);  // first positive stage wins
    }
    return 1;
}

int call_budget(const OrdinalScale& scale, int num_voters, const QueryRecord& query) {
    if (query.clicks.empty()) return 0;
    return num_voters * (scale.n - 1);
}

}  // namespace clue
