#include "clue/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "json.hpp"

#include "clue/error.hpp"

namespace clue {

namespace {

std::vector<double> average_ranks(const std::vector<int>& values) {
    const std::size_t m = values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(m, 0.0);
    std::size_t i = 0;
    while (i < m) {
        std::size_t j = i;
        while (j + 1 < m && values[order[j + 1]] == values[order[i]]) ++j;
        // Ties share the mean of the 1-based ranks they would occupy.
        const double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t m = x.size();
    const double mean_x = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
    const double mean_y = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) {
        throw UndefinedMetricError("correlation undefined on a constant vector");
    }
    return cov / std::sqrt(var_x * var_y);
}

}  // namespace

PairedLabels align(const LabelSet& gold, const LabelSet& pred) {
    if (gold.empty() || pred.empty()) {
        throw ConfigError("align needs two non-empty label sets");
    }

    std::map<std::pair<std::string, std::string>, int> gold_by_key;
    for (const auto& label : gold.all()) {
        gold_by_key.emplace(std::make_pair(label.query_id, label.doc_id), label.value);
    }
    std::map<std::pair<std::string, std::string>, int> pred_by_key;
    for (const auto& label : pred.all()) {
        pred_by_key.emplace(std::make_pair(label.query_id, label.doc_id), label.value);
    }

    PairedLabels pairs;
    for (const auto& [key, value] : gold_by_key) {
        auto it = pred_by_key.find(key);
        if (it == pred_by_key.end()) {
            ++pairs.unmatched_gold;
            continue;
        }
        pairs.keys.push_back(key);
        pairs.gold.push_back(value);
        pairs.pred.push_back(it->second);
    }
    pairs.unmatched_pred = pred_by_key.size() - pairs.keys.size();

    if (pairs.keys.empty()) {
        throw NoOverlapError("gold and predicted label sets share no (query, doc) keys");
    }
    return pairs;
}

ClassificationScores classification_metrics(const PairedLabels& pairs, int n) {
    std::vector<double> tp(static_cast<std::size_t>(n), 0.0);
    std::vector<double> fp(static_cast<std::size_t>(n), 0.0);
    std::vector<double> fn(static_cast<std::size_t>(n), 0.0);

    for (std::size_t i = 0; i < pairs.gold.size(); ++i) {
        const int g = pairs.gold[i];
        const int p = pairs.pred[i];
        if (g == p) {
            tp[static_cast<std::size_t>(g - 1)] += 1.0;
        } else {
            fn[static_cast<std::size_t>(g - 1)] += 1.0;
            fp[static_cast<std::size_t>(p - 1)] += 1.0;
        }
    }

    ClassificationScores scores;
    const double total = static_cast<double>(pairs.gold.size());
    for (int c = 0; c < n; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double denom_p = tp[ci] + fp[ci];
        const double denom_r = tp[ci] + fn[ci];
        const double precision = denom_p == 0.0 ? 0.0 : tp[ci] / denom_p;
        const double recall = denom_r == 0.0 ? 0.0 : tp[ci] / denom_r;
        const double f1 =
            precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
        scores.precision += precision / static_cast<double>(n);
        scores.recall += recall / static_cast<double>(n);
        scores.f1 += f1 / static_cast<double>(n);
        const double support = tp[ci] + fn[ci];
        scores.weighted_precision += precision * support / total;
        scores.weighted_recall += recall * support / total;
        scores.weighted_f1 += f1 * support / total;
    }
    return scores;
}

std::pair<double, double> correlation_metrics(const PairedLabels& pairs) {
    if (pairs.gold.size() < 2) {
        throw UndefinedMetricError("correlation needs at least two pairs");
    }
    std::vector<double> gold(pairs.gold.begin(), pairs.gold.end());
    std::vector<double> pred(pairs.pred.begin(), pairs.pred.end());
    const double r = pearson(gold, pred);
    const double rho = pearson(average_ranks(pairs.gold), average_ranks(pairs.pred));
    return {r, rho};
}

double cohen_kappa(const PairedLabels& pairs, int n) {
    const double total = static_cast<double>(pairs.gold.size());
    std::vector<double> gold_marginal(static_cast<std::size_t>(n), 0.0);
    std::vector<double> pred_marginal(static_cast<std::size_t>(n), 0.0);
    double observed = 0.0;
    for (std::size_t i = 0; i < pairs.gold.size(); ++i) {
        gold_marginal[static_cast<std::size_t>(pairs.gold[i] - 1)] += 1.0;
        pred_marginal[static_cast<std::size_t>(pairs.pred[i] - 1)] += 1.0;
        if (pairs.gold[i] == pairs.pred[i]) observed += 1.0;
    }
    const double p_o = observed / total;
    double p_e = 0.0;
    for (int c = 0; c < n; ++c) {
        p_e += (gold_marginal[static_cast<std::size_t>(c)] / total) *
               (pred_marginal[static_cast<std::size_t>(c)] / total);
    }
    if (p_e >= 1.0) {
        throw UndefinedMetricError("kappa undefined: expected agreement is 1");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

double mean_absolute_error(const PairedLabels& pairs) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pairs.gold.size(); ++i) {
        sum += std::abs(pairs.gold[i] - pairs.pred[i]);
    }
    return sum / static_cast<double>(pairs.gold.size());
}

MetricReport compute_report(const PairedLabels& pairs, int n) {
    MetricReport report;
    const ClassificationScores scores = classification_metrics(pairs, n);
    report.precision = scores.precision;
    report.recall = scores.recall;
    report.f1 = scores.f1;
    report.weighted_precision = scores.weighted_precision;
    report.weighted_recall = scores.weighted_recall;
    report.weighted_f1 = scores.weighted_f1;
    try {
        const auto [r, rho] = correlation_metrics(pairs);
        report.pearson_r = r;
        report.spearman_rho = rho;
    } catch (const UndefinedMetricError&) {
        // reported as nulls, never coerced to 0
    }
    try {
        report.cohen_kappa = cohen_kappa(pairs, n);
    } catch (const UndefinedMetricError&) {
    }
    report.mae = mean_absolute_error(pairs);
    report.n_pairs = pairs.gold.size();
    report.unmatched_gold = pairs.unmatched_gold;
    report.unmatched_pred = pairs.unmatched_pred;
    return report;
}

std::string report_to_json(const MetricReport& report) {
    nlohmann::json obj = {
        {"precision", report.precision},
        {"recall", report.recall},
        {"f1", report.f1},
        {"pearson_r", report.pearson_r ? nlohmann::json(*report.pearson_r) : nlohmann::json(nullptr)},
        {"spearman_rho",
         report.spearman_rho ? nlohmann::json(*report.spearman_rho) : nlohmann::json(nullptr)},
        {"cohen_kappa",
         report.cohen_kappa ? nlohmann::json(*report.cohen_kappa) : nlohmann::json(nullptr)},
        {"mae", report.mae},
        {"weighted_precision", report.weighted_precision},
        {"weighted_recall", report.weighted_recall},
        {"weighted_f1", report.weighted_f1},
        {"n_pairs", report.n_pairs},
        {"unmatched_gold", report.unmatched_gold},
        {"unmatched_pred", report.unmatched_pred},
    };
    return obj.dump(2);
}

}  // namespace clue
