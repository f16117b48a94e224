#include "clue/satisfaction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "json.hpp"

#include "clue/error.hpp"
#include "clue/features.hpp"
#include "clue/metrics.hpp"
#include "clue/prompts.hpp"

namespace clue {

namespace {

double gain_of(int value, GainKind gain) {
    if (gain == GainKind::Exponential) {
        return std::pow(2.0, static_cast<double>(value - 1)) - 1.0;
    }
    return static_cast<double>(value - 1);
}

std::string format_double(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

// Deterministic Fisher-Yates over indices; the engine is standard-fixed.
std::vector<std::size_t> shuffled_indices(std::size_t count, std::uint64_t seed) {
    std::vector<std::size_t> indices(count);
    std::iota(indices.begin(), indices.end(), 0);
    std::mt19937_64 rng(seed);
    for (std::size_t i = count; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(indices[i - 1], indices[j]);
    }
    return indices;
}

struct ZStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

ZStats z_stats(const std::vector<std::vector<double>>& rows,
               const std::vector<std::size_t>& indices) {
    const std::size_t dims = rows.empty() ? 0 : rows.front().size();
    ZStats stats;
    stats.mean.assign(dims, 0.0);
    stats.stddev.assign(dims, 0.0);
    for (std::size_t index : indices) {
        for (std::size_t d = 0; d < dims; ++d) stats.mean[d] += rows[index][d];
    }
    for (std::size_t d = 0; d < dims; ++d) stats.mean[d] /= static_cast<double>(indices.size());
    for (std::size_t index : indices) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double delta = rows[index][d] - stats.mean[d];
            stats.stddev[d] += delta * delta;
        }
    }
    for (std::size_t d = 0; d < dims; ++d) {
        stats.stddev[d] = std::sqrt(stats.stddev[d] / static_cast<double>(indices.size()));
        if (stats.stddev[d] == 0.0) stats.stddev[d] = 1.0;  // constant feature maps to 0
    }
    return stats;
}

std::vector<double> z_apply(const ZStats& stats, const std::vector<double>& row) {
    std::vector<double> out(row.size());
    for (std::size_t d = 0; d < row.size(); ++d) {
        out[d] = (row[d] - stats.mean[d]) / stats.stddev[d];
    }
    return out;
}

FoldScore score_predictions(const std::vector<int>& gold, const std::vector<int>& pred,
                            int num_levels) {
    PairedLabels pairs;
    pairs.gold = gold;
    pairs.pred = pred;
    pairs.keys.resize(gold.size());
    const ClassificationScores scores = classification_metrics(pairs, num_levels);
    FoldScore fold;
    fold.precision = scores.precision;
    fold.recall = scores.recall;
    fold.f1 = scores.f1;
    fold.mae = mean_absolute_error(pairs);
    return fold;
}

}  // namespace

SessionMetricVector click_metrics(const QueryRecord& query, const LabelSet& labels, int cutoff_k,
                                  const OrdinalScale& scale, GainKind gain) {
    SessionMetricVector metrics;
    metrics.cutoff_k = cutoff_k;

    const auto clicked = clicked_documents(query);
    const std::size_t counted =
        std::min<std::size_t>(clicked.size(), cutoff_k <= 0 ? 0 : static_cast<std::size_t>(cutoff_k));
    if (counted == 0) return metrics;

    for (std::size_t i = 0; i < counted; ++i) {
        const auto& doc_id = clicked[i].doc->doc_id;
        const UsefulnessLabel* label = labels.find_any(query.query_id, doc_id);
        if (label == nullptr) {
            throw MissingLabelError("no label for clicked doc (" + query.query_id + ", " + doc_id +
                                    ")");
        }
        if (!scale.contains(label->value)) {
            throw OutOfRangeError("label value " + std::to_string(label->value) + " for (" +
                                  query.query_id + ", " + doc_id + ") exceeds the n=" +
                                  std::to_string(scale.n) + " scale");
        }
        const double g = gain_of(label->value, gain);
        const double position = static_cast<double>(i + 1);
        metrics.ccg += g;
        metrics.cdcg += g / std::log2(position + 1.0);
        metrics.cmax = std::max(metrics.cmax, g);
    }
    metrics.ccg_per_click = metrics.ccg / static_cast<double>(counted);
    metrics.cdcg_per_click = metrics.cdcg / static_cast<double>(counted);
    return metrics;
}

FeatureMatrix assemble_features(const std::vector<SearchSession>& sessions,
                                const std::optional<LabelSet>& labels,
                                const std::vector<int>& cutoffs, const OrdinalScale& scale,
                                const std::string& label_tag, GainKind gain) {
    FeatureMatrix matrix;
    for (const char* name : BehaviorVector::feature_names()) matrix.columns.push_back(name);
    if (labels) {
        for (int cutoff : cutoffs) {
            const std::string at =
                cutoff == kNoCutoff ? "all" : std::to_string(cutoff);
            for (const char* metric :
                 {"ccg", "cdcg", "cmax", "ccg_per_click", "cdcg_per_click"}) {
                matrix.columns.push_back(label_tag + "_" + metric + "_at_" + at);
            }
        }
    }

    for (const auto& session : sessions) {
        for (const auto& query : session.queries) {
            if (!query.satisfaction) {
                ++matrix.dropped_no_satisfaction;
                continue;
            }
            std::vector<double> row;
            const auto behavior = extract_behavior_vector(query, session).values();
            row.insert(row.end(), behavior.begin(), behavior.end());
            if (labels) {
                for (int cutoff : cutoffs) {
                    const SessionMetricVector m = click_metrics(query, *labels, cutoff, scale, gain);
                    row.push_back(m.ccg);
                    row.push_back(m.cdcg);
                    row.push_back(m.cmax);
                    row.push_back(m.ccg_per_click);
                    row.push_back(m.cdcg_per_click);
                }
            }
            matrix.query_ids.push_back(query.query_id);
            matrix.rows.push_back(std::move(row));
            matrix.target.push_back(*query.satisfaction);
        }
    }
    return matrix;
}

std::string feature_matrix_to_csv(const FeatureMatrix& matrix) {
    std::string out = "query_id";
    for (const auto& column : matrix.columns) out += "," + column;
    out += ",satisfaction\n";
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        out += matrix.query_ids[i];
        for (double value : matrix.rows[i]) out += "," + format_double(value);
        out += "," + std::to_string(matrix.target[i]) + "\n";
    }
    return out;
}

LogisticRegressionClassifier::LogisticRegressionClassifier() : options_() {}

LogisticRegressionClassifier::LogisticRegressionClassifier(Options options)
    : options_(options) {}

void LogisticRegressionClassifier::fit(const std::vector<std::vector<double>>& train_x,
                                       const std::vector<int>& train_y,
                                       const std::vector<std::vector<double>>& holdout_x,
                                       const std::vector<int>& holdout_y) {
    const std::size_t m = train_x.size();
    const std::size_t dims = m == 0 ? 0 : train_x.front().size();

    std::set<int> class_set(train_y.begin(), train_y.end());
    classes_.assign(class_set.begin(), class_set.end());
    const std::size_t k = classes_.size();
    weights_.assign(k, std::vector<double>(dims, 0.0));
    biases_.assign(k, 0.0);
    if (m == 0 || k <= 1) return;  // constant predictor

    std::vector<std::size_t> class_index_of(train_y.size());
    for (std::size_t i = 0; i < train_y.size(); ++i) {
        class_index_of[i] = static_cast<std::size_t>(
            std::lower_bound(classes_.begin(), classes_.end(), train_y[i]) - classes_.begin());
    }

    const auto nll_of = [&](const std::vector<std::vector<double>>& xs,
                            const std::vector<int>& ys) {
        if (xs.empty()) return 0.0;
        double total = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::vector<double> logits(k);
            double max_logit = -1e300;
            for (std::size_t c = 0; c < k; ++c) {
                double z = biases_[c];
                for (std::size_t d = 0; d < dims; ++d) z += weights_[c][d] * xs[i][d];
                logits[c] = z;
                max_logit = std::max(max_logit, z);
            }
            double denom = 0.0;
            for (std::size_t c = 0; c < k; ++c) denom += std::exp(logits[c] - max_logit);
            auto it = std::lower_bound(classes_.begin(), classes_.end(), ys[i]);
            // Unseen holdout classes contribute the full log-denominator.
            const double target_logit = (it != classes_.end() && *it == ys[i])
                                            ? logits[static_cast<std::size_t>(it - classes_.begin())]
                                            : max_logit - 50.0;
            total += std::log(denom) + max_logit - target_logit;
        }
        return total / static_cast<double>(xs.size());
    };

    std::vector<std::vector<double>> best_weights = weights_;
    std::vector<double> best_biases = biases_;
    double best_holdout = holdout_x.empty() ? 0.0 : nll_of(holdout_x, holdout_y);

    double previous_loss = 1e300;
    std::vector<std::vector<double>> grad_w(k, std::vector<double>(dims, 0.0));
    std::vector<double> grad_b(k, 0.0);
    std::vector<double> probs(k, 0.0);

    for (int iteration = 0; iteration < options_.max_iterations; ++iteration) {
        for (auto& row : grad_w) std::fill(row.begin(), row.end(), 0.0);
        std::fill(grad_b.begin(), grad_b.end(), 0.0);
        double loss = 0.0;

        for (std::size_t i = 0; i < m; ++i) {
            double max_logit = -1e300;
            for (std::size_t c = 0; c < k; ++c) {
                double z = biases_[c];
                for (std::size_t d = 0; d < dims; ++d) z += weights_[c][d] * train_x[i][d];
                probs[c] = z;
                max_logit = std::max(max_logit, z);
            }
            double denom = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                probs[c] = std::exp(probs[c] - max_logit);
                denom += probs[c];
            }
            for (std::size_t c = 0; c < k; ++c) probs[c] /= denom;
            loss -= std::log(std::max(probs[class_index_of[i]], 1e-300));

            for (std::size_t c = 0; c < k; ++c) {
                const double delta = probs[c] - (c == class_index_of[i] ? 1.0 : 0.0);
                grad_b[c] += delta;
                for (std::size_t d = 0; d < dims; ++d) grad_w[c][d] += delta * train_x[i][d];
            }
        }

        double penalty = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            for (std::size_t d = 0; d < dims; ++d) penalty += weights_[c][d] * weights_[c][d];
        }
        loss = loss / static_cast<double>(m) +
               options_.l2_lambda * penalty / (2.0 * static_cast<double>(m));

        const double scale = options_.learning_rate / static_cast<double>(m);
        for (std::size_t c = 0; c < k; ++c) {
            biases_[c] -= scale * grad_b[c];
            for (std::size_t d = 0; d < dims; ++d) {
                weights_[c][d] -= scale * (grad_w[c][d] + options_.l2_lambda * weights_[c][d]);
            }
        }

        if (!holdout_x.empty()) {
            const double holdout_loss = nll_of(holdout_x, holdout_y);
            if (holdout_loss < best_holdout) {
                best_holdout = holdout_loss;
                best_weights = weights_;
                best_biases = biases_;
            }
        }
        if (previous_loss - loss < options_.tolerance && previous_loss >= loss) break;
        previous_loss = loss;
    }

    if (!holdout_x.empty()) {
        weights_ = best_weights;
        biases_ = best_biases;
    }
}

int LogisticRegressionClassifier::predict(const std::vector<double>& x) const {
    if (classes_.empty()) return 1;
    if (classes_.size() == 1) return classes_.front();
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
        double z = biases_[c];
        for (std::size_t d = 0; d < x.size(); ++d) z += weights_[c][d] * x[d];
        if (z > best_score) {
            best_score = z;
            best = c;
        }
    }
    return classes_[best];
}

CvReport train_eval_cv(const FeatureMatrix& matrix, int folds, std::uint64_t seed,
                       const ClassifierFactory& factory) {
    if (matrix.rows.size() < 50) {
        throw ConfigError("cross-validation needs at least 50 rows, got " +
                          std::to_string(matrix.rows.size()));
    }
    std::set<int> classes(matrix.target.begin(), matrix.target.end());
    if (classes.size() < 2) {
        throw DegenerateTargetError("satisfaction target has a single class");
    }
    const int num_levels = *std::max_element(matrix.target.begin(), matrix.target.end());

    const ClassifierFactory make = factory ? factory : [] {
        return std::make_unique<LogisticRegressionClassifier>();
    };

    const auto shuffled = shuffled_indices(matrix.rows.size(), seed);
    std::vector<std::vector<std::size_t>> fold_members(static_cast<std::size_t>(folds));
    for (std::size_t i = 0; i < shuffled.size(); ++i) {
        fold_members[i % static_cast<std::size_t>(folds)].push_back(shuffled[i]);
    }

    CvReport report;
    report.seed = seed;
    report.fold_count = folds;

    for (int fold = 0; fold < folds; ++fold) {
        std::vector<std::size_t> train_indices;
        for (int other = 0; other < folds; ++other) {
            if (other == fold) continue;
            train_indices.insert(train_indices.end(), fold_members[static_cast<std::size_t>(other)].begin(),
                                 fold_members[static_cast<std::size_t>(other)].end());
        }
        const auto& test_indices = fold_members[static_cast<std::size_t>(fold)];

        const ZStats stats = z_stats(matrix.rows, train_indices);

        // Inner 8:2 split of the training fold for early stopping.
        const auto inner_order = shuffled_indices(
            train_indices.size(), mix_seed(seed, "inner-fold-" + std::to_string(fold)));
        const std::size_t subtrain_count =
            std::max<std::size_t>(1, (train_indices.size() * 8) / 10);

        std::vector<std::vector<double>> train_x, holdout_x;
        std::vector<int> train_y, holdout_y;
        for (std::size_t i = 0; i < inner_order.size(); ++i) {
            const std::size_t row = train_indices[inner_order[i]];
            if (i < subtrain_count) {
                train_x.push_back(z_apply(stats, matrix.rows[row]));
                train_y.push_back(matrix.target[row]);
            } else {
                holdout_x.push_back(z_apply(stats, matrix.rows[row]));
                holdout_y.push_back(matrix.target[row]);
            }
        }

        auto classifier = make();
        classifier->fit(train_x, train_y, holdout_x, holdout_y);

        std::vector<int> gold, pred;
        for (std::size_t row : test_indices) {
            gold.push_back(matrix.target[row]);
            pred.push_back(classifier->predict(z_apply(stats, matrix.rows[row])));
        }
        report.folds.push_back(score_predictions(gold, pred, num_levels));
    }

    for (const auto& fold : report.folds) {
        report.means.precision += fold.precision / static_cast<double>(folds);
        report.means.recall += fold.recall / static_cast<double>(folds);
        report.means.f1 += fold.f1 / static_cast<double>(folds);
        report.means.mae += fold.mae / static_cast<double>(folds);
    }
    return report;
}

namespace {

// Regularized incomplete beta I_x(a, b) via Lentz's continued fraction.
double beta_continued_fraction(double a, double b, double x) {
    const double tiny = 1e-300;
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 300; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-12) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(1.0 - x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

}  // namespace

double student_t_two_sided_p(double t, int df) {
    if (df < 1) throw ConfigError("degrees of freedom must be >= 1");
    const double x = static_cast<double>(df) / (static_cast<double>(df) + t * t);
    return regularized_incomplete_beta(static_cast<double>(df) / 2.0, 0.5, x);
}

TTestResult paired_t_test(const std::vector<double>& scores_a,
                          const std::vector<double>& scores_b) {
    if (scores_a.size() != scores_b.size()) {
        throw ConfigError("paired t-test needs equal-length score vectors");
    }
    const std::size_t m = scores_a.size();
    if (m < 2) throw ConfigError("paired t-test needs at least two pairs");

    std::vector<double> diffs(m);
    for (std::size_t i = 0; i < m; ++i) diffs[i] = scores_a[i] - scores_b[i];
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(m);
    double variance = 0.0;
    for (double d : diffs) variance += (d - mean) * (d - mean);
    variance /= static_cast<double>(m - 1);
    if (variance == 0.0) {
        throw ZeroVarianceError("all paired differences are identical");
    }

    TTestResult result;
    result.df = static_cast<int>(m) - 1;
    result.t = mean / std::sqrt(variance / static_cast<double>(m));
    result.p = student_t_two_sided_p(result.t, result.df);
    return result;
}

ComparisonReport compare_feature_sets(const std::vector<NamedMatrix>& variants,
                                      std::uint64_t seed, const ClassifierFactory& factory) {
    if (variants.empty()) throw ConfigError("no feature-set variants given");
    for (std::size_t i = 1; i < variants.size(); ++i) {
        if (variants[i].matrix.query_ids != variants.front().matrix.query_ids) {
            throw RowMismatchError("variant '" + variants[i].name +
                                   "' covers different query rows than '" +
                                   variants.front().name + "'");
        }
    }

    ComparisonReport report;
    report.seed = seed;
    for (const auto& variant : variants) {
        report.variants.push_back(
            VariantResult{variant.name, train_eval_cv(variant.matrix, 5, seed, factory)});
    }

    for (std::size_t i = 0; i < report.variants.size(); ++i) {
        for (std::size_t j = i + 1; j < report.variants.size(); ++j) {
            PairwiseComparison comparison;
            comparison.variant_a = report.variants[i].name;
            comparison.variant_b = report.variants[j].name;
            std::vector<double> f1_a, f1_b;
            for (const auto& fold : report.variants[i].report.folds) f1_a.push_back(fold.f1);
            for (const auto& fold : report.variants[j].report.folds) f1_b.push_back(fold.f1);
            try {
                comparison.f1_test = paired_t_test(f1_a, f1_b);
            } catch (const ZeroVarianceError&) {
                comparison.note = "zero variance";
            }
            report.tests.push_back(std::move(comparison));
        }
    }
    return report;
}

std::string comparison_report_to_json(const ComparisonReport& report) {
    nlohmann::json variants = nlohmann::json::array();
    for (const auto& variant : report.variants) {
        nlohmann::json folds = nlohmann::json::array();
        for (const auto& fold : variant.report.folds) {
            folds.push_back({{"precision", fold.precision},
                             {"recall", fold.recall},
                             {"f1", fold.f1},
                             {"mae", fold.mae}});
        }
        variants.push_back({{"name", variant.name},
                            {"folds", folds},
                            {"means",
                             {{"precision", variant.report.means.precision},
                              {"recall", variant.report.means.recall},
                              {"f1", variant.report.means.f1},
                              {"mae", variant.report.means.mae}}}});
    }
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& test : report.tests) {
        nlohmann::json entry = {{"a", test.variant_a}, {"b", test.variant_b}};
        if (test.f1_test) {
            entry["t"] = test.f1_test->t;
            entry["p"] = test.f1_test->p;
            entry["df"] = test.f1_test->df;
        } else {
            entry["t"] = nullptr;
            entry["p"] = nullptr;
            entry["df"] = nullptr;
            entry["note"] = test.note;
        }
        tests.push_back(std::move(entry));
    }
    return nlohmann::json{{"seed", report.seed}, {"variants", variants}, {"tests", tests}}.dump(2);
}

}  // namespace clue
