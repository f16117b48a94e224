#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <random>
#include <set>

#include "clue/backend.hpp"
#include "clue/cascade.hpp"
#include "clue/error.hpp"
#include "clue/synth.hpp"

#include "support/fixtures.hpp"

using namespace clue;

namespace {

// Session with three clicked docs d3, d7, d1 (click order 1, 2, 3).
SearchSession three_click_session() {
    SearchSession session = test::two_click_session();
    auto& query = session.queries.front();
    query.clicks.push_back(test::make_click("d1", 3, query.issue_time + 70000, 4.0));
    return session;
}

std::shared_ptr<const GoldTable> gold_table(const std::map<std::string, int>& values) {
    auto gold = std::make_shared<GoldTable>();
    for (const auto& [doc_id, value] : values) gold->set("q1", doc_id, value);
    return gold;
}

CascadeConfig config_with_voters(int voters) {
    CascadeConfig config;
    config.scale = make_scale(4);
    config.num_voters = voters;
    return config;
}

std::map<std::string, int> labels_by_doc(const std::vector<UsefulnessLabel>& labels) {
    std::map<std::string, int> out;
    for (const auto& label : labels) out[label.doc_id] = label.value;
    return out;
}

}  // namespace

TEST_CASE("assign_majority keeps strictly more than M/2 votes") {
    CHECK(assign_majority({{"a", 3}, {"b", 2}}, 5) == std::set<std::string>{"a"});
    CHECK(assign_majority({{"a", 1}}, 1) == std::set<std::string>{"a"});
    CHECK(assign_majority({{"a", 2}, {"b", 2}}, 5).empty());
    CHECK_THROWS_AS(assign_majority({{"a", 2}}, 4), EvenVoterCountError);
}

TEST_CASE("oracle voters recover the gold labels exactly") {
    const SearchSession session = three_click_session();
    const auto& query = session.queries.front();
    const auto instances = test::first_query_instances(session);
    const std::map<std::string, int> gold = {{"d3", 4}, {"d7", 3}, {"d1", 1}};

    auto backend =
        std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::oracle(gold_table(gold)));
    JudgeClient client(backend);

    const CascadeOutcome outcome =
        judge_query_cascade(query, instances, config_with_voters(1), client);
    CHECK(labels_by_doc(outcome.labels) == gold);
    for (const auto& label : outcome.labels) {
        CHECK(label.source == LabelSource::LlmUsefulness);
        CHECK(label.scale_n == 4);
    }
}

TEST_CASE("a backend that never selects sends everything to C_1") {
    const SearchSession session = three_click_session();
    const auto instances = test::first_query_instances(session);

    auto backend = std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::never_select());
    JudgeClient client(backend);
    const CascadeOutcome outcome =
        judge_query_cascade(session.queries.front(), instances, config_with_voters(1), client);
    for (const auto& label : outcome.labels) CHECK(label.value == 1);
    CHECK(outcome.labels.size() == 3);
}

TEST_CASE("three honest voters outvote two adversaries") {
    const SearchSession session = three_click_session();
    const auto instances = test::first_query_instances(session);
    const std::map<std::string, int> gold = {{"d3", 4}, {"d7", 2}, {"d1", 1}};

    auto oracle =
        std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::oracle(gold_table(gold)));
    auto adversary = std::make_shared<ScriptedBackend>(
        BackendConfig{}, ScriptRule::adversarial(ScriptRule::oracle(gold_table(gold))));
    auto dispatch = std::make_shared<VoterDispatchBackend>(
        BackendConfig{},
        std::vector<std::shared_ptr<Backend>>{oracle, oracle, oracle, adversary, adversary});
    JudgeClient client(dispatch);

    const CascadeOutcome outcome = judge_query_cascade(session.queries.front(), instances,
                                                       config_with_voters(5), client);
    CHECK(labels_by_doc(outcome.labels) == gold);
}

TEST_CASE("empty doc list produces no labels and no calls") {
    const SearchSession session = test::two_click_session();
    auto backend = std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::never_select());
    JudgeClient client(backend);
    const CascadeOutcome outcome =
        judge_query_cascade(session.queries.front(), {}, config_with_voters(5), client);
    CHECK(outcome.labels.empty());
    CHECK(client.counters().backend_calls == 0);
}

TEST_CASE("call budget is M(n-1) with clicks and zero without") {
    const SearchSession session = test::two_click_session();
    const auto& query = session.queries.front();
    CHECK(call_budget(make_scale(4), 5, query) == 15);
    CHECK(call_budget(make_scale(4), 1, query) == 3);  // three stages of selection

    QueryRecord clickless = query;
    clickless.clicks.clear();
    CHECK(call_budget(make_scale(4), 5, clickless) == 0);
}

TEST_CASE("never-selecting voters spend exactly the budget; selections spend less") {
    const SearchSession session = three_click_session();
    const auto& query = session.queries.front();
    const auto instances = test::first_query_instances(session);

    auto never = std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::never_select());
    JudgeClient never_client(never);
    judge_query_cascade(query, instances, config_with_voters(5), never_client);
    CHECK(never_client.counters().backend_calls == 15);  // M(n-1) = 5 * 3

    // A threshold oracle empties the pool at stage 4, saving the later stages.
    auto eager = std::make_shared<ScriptedBackend>(
        BackendConfig{},
        ScriptRule::threshold_oracle(gold_table({{"d3", 4}, {"d7", 4}, {"d1", 4}})));
    JudgeClient eager_client(eager);
    judge_query_cascade(query, instances, config_with_voters(5), eager_client);
    CHECK(eager_client.counters().backend_calls == 5);
    CHECK(eager_client.counters().backend_calls <=
          static_cast<std::size_t>(call_budget(make_scale(4), 5, query)));
}

TEST_CASE("the trace never shows a doc after its assignment stage") {
    const SearchSession session = three_click_session();
    const auto instances = test::first_query_instances(session);
    const std::map<std::string, int> gold = {{"d3", 4}, {"d7", 3}, {"d1", 2}};

    auto backend =
        std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::oracle(gold_table(gold)));
    JudgeClient client(backend);
    const CascadeOutcome outcome = judge_query_cascade(session.queries.front(), instances,
                                                       config_with_voters(3), client);

    std::set<std::string> assigned;
    for (const auto& stage : outcome.trace.stages) {
        for (const auto& doc_id : stage.remaining_doc_ids) {
            CHECK(assigned.count(doc_id) == 0);
        }
        for (const auto& doc_id : stage.assigned_doc_ids) assigned.insert(doc_id);
    }
    // Completeness: every clicked doc labeled exactly once.
    CHECK(outcome.labels.size() == instances.size());
    std::set<std::string> labeled;
    for (const auto& label : outcome.labels) CHECK(labeled.insert(label.doc_id).second);
}

TEST_CASE("judge_linear_reference follows the first positive stage from the top") {
    // Stages ordered k = n..2; x is one-dimensional here.
    const std::vector<LinearStageClassifier> stages = {
        {{1.0}, -3.5},  // g4: positive for x > 3.5
        {{1.0}, -2.5},  // g3
        {{1.0}, -1.5},  // g2
    };
    CHECK(judge_linear_reference({4.0}, stages) == 4);
    CHECK(judge_linear_reference({3.0}, stages) == 3);
    CHECK(judge_linear_reference({2.0}, stages) == 2);
    CHECK(judge_linear_reference({1.0}, stages) == 1);  // all g_k <= 0
}

TEST_CASE("judge_linear_reference picks C_3 for signs (-,+,-)") {
    const std::vector<LinearStageClassifier> stages = {
        {{1.0}, -10.0},  // g4 negative
        {{1.0}, 0.5},    // g3 positive
        {{-1.0}, -0.5},  // g2 negative
    };
    CHECK(judge_linear_reference({1.0}, stages) == 3);
}

TEST_CASE("g_n > 0 wins regardless of lower stages") {
    const std::vector<LinearStageClassifier> stages = {
        {{1.0}, 1.0},   // g4 positive for x = 0
        {{1.0}, 5.0},   // also positive, must not matter
        {{1.0}, -1.0},
    };
    CHECK(judge_linear_reference({0.0}, stages) == 4);
}

TEST_CASE("dimension mismatches are rejected") {
    const std::vector<LinearStageClassifier> stages = {{{1.0, 2.0}, 0.0}};
    CHECK_THROWS_AS(judge_linear_reference({1.0}, stages), DimensionMismatchError);
}

TEST_CASE("even or non-positive voter counts are configuration errors") {
    CascadeConfig config = config_with_voters(4);
    CHECK_THROWS_AS(config.validate(), EvenVoterCountError);
    config.num_voters = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.num_voters = 5;
    CHECK_NOTHROW(config.validate());
}

// The cascade with a backend that answers stage k by the sign of g_k reduces
// to the linear reference model.
namespace {

class LinearSignBackend : public Backend {
public:
    LinearSignBackend(std::map<std::string, std::vector<double>> features,
                      std::vector<LinearStageClassifier> stages, int n)
        : features_(std::move(features)), stages_(std::move(stages)), n_(n) {}

    std::string complete(const PromptSpec& prompt) override {
        std::string selected;
        for (std::size_t tag = 1; tag <= prompt.doc_id_for_tag.size(); ++tag) {
            const auto& x = features_.at(prompt.doc_id_for_tag[tag - 1]);
            const auto& stage = stages_.at(static_cast<std::size_t>(n_ - prompt.stage_k));
            double g = stage.bias;
            for (std::size_t d = 0; d < x.size(); ++d) g += stage.weights[d] * x[d];
            if (g > 0.0) {
                if (!selected.empty()) selected += ",";
                selected += "\"" + std::to_string(tag) + "\"";
            }
        }
        return R"({"thought":"","selected":[)" + selected + "]}";
    }

    const BackendConfig& config() const override { return config_; }

private:
    std::map<std::string, std::vector<double>> features_;
    std::vector<LinearStageClassifier> stages_;
    int n_;
    BackendConfig config_;
};

}  // namespace

TEST_CASE("cascade with a sign backend equals the linear reference model") {
    std::mt19937_64 rng(20240701);
    const auto uniform = [&](double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
    };

    for (int trial = 0; trial < 30; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 3);  // 3..5 levels
        const int dims = 2 + static_cast<int>(rng() % 3);
        std::vector<LinearStageClassifier> stages;
        for (int k = 0; k < n - 1; ++k) {
            LinearStageClassifier stage;
            for (int d = 0; d < dims; ++d) stage.weights.push_back(uniform(-1.0, 1.0));
            stage.bias = uniform(-1.0, 1.0);
            stages.push_back(std::move(stage));
        }

        SearchSession session = test::two_click_session();
        auto& query = session.queries.front();
        query.clicks.clear();
        const int docs = 1 + static_cast<int>(rng() % 6);
        std::map<std::string, std::vector<double>> features;
        for (int d = 0; d < docs; ++d) {
            const std::string doc_id = "d" + std::to_string(d + 1);
            query.clicks.push_back(
                test::make_click(doc_id, d + 1, query.issue_time + 1000 * (d + 1), 5.0));
            std::vector<double> x;
            for (int dim = 0; dim < dims; ++dim) x.push_back(uniform(-2.0, 2.0));
            features[doc_id] = std::move(x);
        }
        const auto instances = test::first_query_instances(session);

        auto backend = std::make_shared<LinearSignBackend>(features, stages, n);
        JudgeClient client(backend);
        CascadeConfig config;
        config.scale = make_scale(n);
        config.num_voters = 1;
        const CascadeOutcome outcome = judge_query_cascade(query, instances, config, client);

        const auto by_doc = labels_by_doc(outcome.labels);
        for (const auto& [doc_id, x] : features) {
            CHECK(by_doc.at(doc_id) == judge_linear_reference(x, stages));
        }
    }
}

TEST_CASE("voter concurrency does not change the verdict") {
    const SearchSession session = three_click_session();
    const auto instances = test::first_query_instances(session);
    const std::map<std::string, int> gold = {{"d3", 4}, {"d7", 3}, {"d1", 2}};

    auto backend =
        std::make_shared<ScriptedBackend>(BackendConfig{}, ScriptRule::oracle(gold_table(gold)));
    JudgeClient sequential_client(backend);
    CascadeConfig sequential = config_with_voters(5);
    const auto a =
        judge_query_cascade(session.queries.front(), instances, sequential, sequential_client);

    JudgeClient threaded_client(backend);
    CascadeConfig threaded = config_with_voters(5);
    threaded.voter_workers = 4;
    const auto b =
        judge_query_cascade(session.queries.front(), instances, threaded, threaded_client);

    CHECK(labels_by_doc(a.labels) == labels_by_doc(b.labels));
}
