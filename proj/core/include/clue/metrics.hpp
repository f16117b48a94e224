#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "clue/labels.hpp"

namespace clue {

/// Gold/predicted label pairs aligned on (query_id, doc_id).
struct PairedLabels {
    std::vector<std::pair<std::string, std::string>> keys;
    std::vector<int> gold;
    std::vector<int> pred;
    std::size_t unmatched_gold = 0;  // keys only in the gold set
    std::size_t unmatched_pred = 0;  // keys only in the predicted set
};

struct ClassificationScores {
    double precision = 0.0;  // macro over all n classes
    double recall = 0.0;
    double f1 = 0.0;
    double weighted_precision = 0.0;  // support-weighted, auxiliary
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
};

/// Everything the agreement report carries. Correlations and kappa are null
/// when undefined (constant vector, degenerate marginals) — never coerced to 0.
struct MetricReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> pearson_r;
    std::optional<double> spearman_rho;
    std::optional<double> cohen_kappa;
    double mae = 0.0;
    double weighted_precision = 0.0;
    double weighted_recall = 0.0;
    double weighted_f1 = 0.0;
    std::size_t n_pairs = 0;
    std::size_t unmatched_gold = 0;
    std::size_t unmatched_pred = 0;
};

/// Intersects the two sets on (query_id, doc_id), source-agnostic, and counts
/// the unmatched keys on each side. Throws NoOverlapError when the
/// intersection is empty and ConfigError when either input set is empty.
PairedLabels align(const LabelSet& gold, const LabelSet& pred);

/// Macro-averaged P/R/F1 over all n classes with the 0-convention for empty
/// denominators; support-weighted versions ride along.
ClassificationScores classification_metrics(const PairedLabels& pairs, int n);

/// Pearson on raw values and Spearman as Pearson on average ranks (ties get
/// the mean rank). Throws UndefinedMetricError when either side has zero
/// variance or fewer than two pairs.
std::pair<double, double> correlation_metrics(const PairedLabels& pairs);

/// Unweighted Cohen's kappa: (p_o - p_e) / (1 - p_e) with p_e from marginal
/// products. Throws UndefinedMetricError when p_e = 1.
double cohen_kappa(const PairedLabels& pairs, int n);

/// Mean absolute error of predicted vs gold level values.
double mean_absolute_error(const PairedLabels& pairs);

/// Runs every metric, mapping undefined correlations/kappa to nulls.
MetricReport compute_report(const PairedLabels& pairs, int n);

/// Report JSON mirroring the agreement-table columns.
std::string report_to_json(const MetricReport& report);

}  // namespace clue
