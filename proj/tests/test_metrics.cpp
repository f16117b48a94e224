#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "clue/error.hpp"
#include "clue/metrics.hpp"

#include "support/fixtures.hpp"

using namespace clue;

namespace {

PairedLabels pairs_of(const std::vector<int>& gold, const std::vector<int>& pred) {
    PairedLabels pairs;
    pairs.gold = gold;
    pairs.pred = pred;
    pairs.keys.resize(gold.size());
    return pairs;
}

LabelSet set_for(const std::vector<std::pair<std::string, int>>& docs, LabelSource source) {
    LabelSet set;
    for (const auto& [doc_id, value] : docs) {
        set.insert(UsefulnessLabel{"q1", doc_id, source, value, 4});
    }
    return set;
}

}  // namespace

TEST_CASE("align intersects on (query, doc) keys") {
    const LabelSet gold = set_for({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 1}},
                                  LabelSource::UserUsefulness);
    const LabelSet pred = set_for({{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 1}},
                                  LabelSource::LlmUsefulness);
    const PairedLabels pairs = align(gold, pred);
    CHECK(pairs.keys.size() == 5);
    CHECK(pairs.unmatched_gold == 0);
    CHECK(pairs.unmatched_pred == 0);
}

TEST_CASE("align counts one-sided keys") {
    LabelSet gold;
    for (int i = 0; i < 10; ++i) {
        gold.insert(UsefulnessLabel{"q1", "d" + std::to_string(i), LabelSource::UserUsefulness,
                                    1 + i % 4, 4});
    }
    LabelSet pred;
    for (int i = 0; i < 7; ++i) {
        pred.insert(UsefulnessLabel{"q1", "d" + std::to_string(i), LabelSource::LlmUsefulness,
                                    1 + i % 4, 4});
    }
    const PairedLabels pairs = align(gold, pred);
    CHECK(pairs.keys.size() == 7);
    CHECK(pairs.unmatched_gold == 3);
    CHECK(pairs.unmatched_pred == 0);
}

TEST_CASE("align with disjoint keys raises NoOverlap") {
    const LabelSet gold = set_for({{"a", 1}}, LabelSource::UserUsefulness);
    const LabelSet pred = set_for({{"z", 1}}, LabelSource::LlmUsefulness);
    CHECK_THROWS_AS(align(gold, pred), NoOverlapError);
}

TEST_CASE("perfect agreement scores 1.0 across the board") {
    const PairedLabels pairs = pairs_of({1, 2, 3, 4, 2}, {1, 2, 3, 4, 2});
    const ClassificationScores scores = classification_metrics(pairs, 4);
    CHECK(scores.precision == doctest::Approx(1.0));
    CHECK(scores.recall == doctest::Approx(1.0));
    CHECK(scores.f1 == doctest::Approx(1.0));
    const auto [r, rho] = correlation_metrics(pairs);
    CHECK(r == doctest::Approx(1.0));
    CHECK(rho == doctest::Approx(1.0));
    CHECK(cohen_kappa(pairs, 4) == doctest::Approx(1.0));
    CHECK(mean_absolute_error(pairs) == doctest::Approx(0.0));
}

TEST_CASE("the hand confusion matrix gives macro 0.5 and kappa 0") {
    const PairedLabels pairs = pairs_of({1, 1, 2, 2}, {1, 2, 1, 2});
    const ClassificationScores scores = classification_metrics(pairs, 2);
    CHECK(scores.precision == doctest::Approx(0.5));
    CHECK(scores.recall == doctest::Approx(0.5));
    CHECK(scores.f1 == doctest::Approx(0.5));
    // p_o = 0.5 and p_e = 0.5, so kappa is exactly 0.
    CHECK(cohen_kappa(pairs, 2) == doctest::Approx(0.0));
}

TEST_CASE("total disagreement over one class scores macro 0") {
    const PairedLabels pairs = pairs_of({1, 1, 1}, {2, 2, 2});
    const ClassificationScores scores = classification_metrics(pairs, 4);
    CHECK(scores.precision == doctest::Approx(0.0));
    CHECK(scores.recall == doctest::Approx(0.0));
    CHECK(scores.f1 == doctest::Approx(0.0));
}

TEST_CASE("spearman on the swapped-middle fixture is 0.8") {
    const PairedLabels pairs = pairs_of({1, 2, 3, 4}, {1, 3, 2, 4});
    const auto [r, rho] = correlation_metrics(pairs);
    CHECK(rho == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("reversed distinct values give rho -1") {
    const PairedLabels pairs = pairs_of({1, 2, 3, 4}, {4, 3, 2, 1});
    const auto [r, rho] = correlation_metrics(pairs);
    CHECK(rho == doctest::Approx(-1.0));
    CHECK(r == doctest::Approx(-1.0));
}

TEST_CASE("tied ranks use the average-rank convention") {
    // Frozen against scipy.stats.spearmanr / pearsonr.
    const PairedLabels pairs = pairs_of({1, 2, 2, 3}, {1, 1, 2, 3});
    const auto [r, rho] = correlation_metrics(pairs);
    CHECK(rho == doctest::Approx(0.8333333333333335).epsilon(1e-12));
    CHECK(r == doctest::Approx(0.8528028654224415).epsilon(1e-12));
}

TEST_CASE("constant vectors make correlations undefined") {
    CHECK_THROWS_AS(correlation_metrics(pairs_of({2, 2, 2}, {1, 2, 3})), UndefinedMetricError);
    CHECK_THROWS_AS(correlation_metrics(pairs_of({1, 2}, {3, 3})), UndefinedMetricError);
    CHECK_THROWS_AS(correlation_metrics(pairs_of({1}, {1})), UndefinedMetricError);
}

TEST_CASE("kappa degenerates when both raters are constant and equal") {
    CHECK_THROWS_AS(cohen_kappa(pairs_of({2, 2, 2}, {2, 2, 2}), 4), UndefinedMetricError);
}

TEST_CASE("mae fixtures") {
    CHECK(mean_absolute_error(pairs_of({1, 4}, {4, 1})) == doctest::Approx(3.0));
    CHECK(mean_absolute_error(pairs_of({1, 2, 3}, {2, 2, 2})) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("compute_report maps undefined metrics to nulls") {
    const MetricReport report = compute_report(pairs_of({2, 2}, {2, 2}), 4);
    CHECK_FALSE(report.pearson_r.has_value());
    CHECK_FALSE(report.spearman_rho.has_value());
    CHECK_FALSE(report.cohen_kappa.has_value());
    const std::string json_text = report_to_json(report);
    CHECK(json_text.find("\"pearson_r\": null") != std::string::npos);
    CHECK(json_text.find("\"cohen_kappa\": null") != std::string::npos);
}

TEST_CASE("metrics are invariant under simultaneous permutation") {
    std::mt19937_64 rng(99);
    std::vector<int> gold, pred;
    for (int i = 0; i < 40; ++i) {
        gold.push_back(1 + static_cast<int>(rng() % 4));
        pred.push_back(1 + static_cast<int>(rng() % 4));
    }
    const PairedLabels original = pairs_of(gold, pred);

    std::vector<std::size_t> order(gold.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[rng() % i]);
    }
    std::vector<int> gold2, pred2;
    for (std::size_t i : order) {
        gold2.push_back(gold[i]);
        pred2.push_back(pred[i]);
    }
    const PairedLabels permuted = pairs_of(gold2, pred2);

    const auto a = compute_report(original, 4);
    const auto b = compute_report(permuted, 4);
    CHECK(a.precision == doctest::Approx(b.precision).epsilon(1e-12));
    CHECK(a.f1 == doctest::Approx(b.f1).epsilon(1e-12));
    CHECK(*a.pearson_r == doctest::Approx(*b.pearson_r).epsilon(1e-12));
    CHECK(*a.spearman_rho == doctest::Approx(*b.spearman_rho).epsilon(1e-12));
    CHECK(*a.cohen_kappa == doctest::Approx(*b.cohen_kappa).epsilon(1e-12));
    CHECK(a.mae == doctest::Approx(b.mae).epsilon(1e-12));
}

TEST_CASE("kappa never exceeds accuracy") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const std::size_t m = 2 + rng() % 30;
        std::vector<int> gold, pred;
        for (std::size_t i = 0; i < m; ++i) {
            gold.push_back(1 + static_cast<int>(rng() % n));
            pred.push_back(1 + static_cast<int>(rng() % n));
        }
        const PairedLabels pairs = pairs_of(gold, pred);
        double accuracy = 0.0;
        for (std::size_t i = 0; i < m; ++i) accuracy += gold[i] == pred[i] ? 1.0 : 0.0;
        accuracy /= static_cast<double>(m);
        try {
            CHECK(cohen_kappa(pairs, n) <= accuracy + 1e-12);
        } catch (const UndefinedMetricError&) {
            // degenerate marginals, nothing to compare
        }
    }
}
