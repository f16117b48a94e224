#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "clue/labels.hpp"
#include "clue/log_io.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

namespace clue {

/// Gain assigned to a label value v on an n-level scale.
enum class GainKind {
    Linear,       // g = v - 1
    Exponential,  // g = 2^(v-1) - 1
};

inline constexpr int kNoCutoff = std::numeric_limits<int>::max();

/// Click-sequence quality metrics of one query: cumulative gain, discounted
/// cumulative gain (position discount 1/log2(i+1) over click order), maximum
/// gain, and the per-click normalizations. All zero when nothing was clicked.
struct SessionMetricVector {
    double ccg = 0.0;
    double cdcg = 0.0;
    double cmax = 0.0;
    double ccg_per_click = 0.0;
    double cdcg_per_click = 0.0;
    int cutoff_k = kNoCutoff;
};

/// Computes the metrics over the first min(cutoff_k, num_clicks) clicks in
/// click order, reading one label per clicked document from `labels`
/// (source-agnostic lookup). Throws MissingLabelError when a counted click
/// has no label.
SessionMetricVector click_metrics(const QueryRecord& query, const LabelSet& labels, int cutoff_k,
                                  const OrdinalScale& scale, GainKind gain = GainKind::Linear);

/// Rectangular feature matrix with the query-level satisfaction target.
struct FeatureMatrix {
    std::vector<std::string> query_ids;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<int> target;  // satisfaction ordinal per row
    std::size_t dropped_no_satisfaction = 0;
};

/// Assembles behavior features for every query carrying satisfaction, plus —
/// when a label set is given — the five click metrics at each requested
/// cutoff, with columns named "<label_tag>_<metric>_at_<k>". Queries without
/// satisfaction are dropped and counted. Throws MissingLabelError when the
/// label set is given but incomplete.
FeatureMatrix assemble_features(const std::vector<SearchSession>& sessions,
                                const std::optional<LabelSet>& labels,
                                const std::vector<int>& cutoffs, const OrdinalScale& scale,
                                const std::string& label_tag = "u",
                                GainKind gain = GainKind::Linear);

/// Serializes as CSV: header row, query_id first column, target last.
std::string feature_matrix_to_csv(const FeatureMatrix& matrix);

struct FoldScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;  // macro
    double mae = 0.0;
};

struct CvReport {
    std::vector<FoldScore> folds;
    FoldScore means;
    std::uint64_t seed = 0;
    int fold_count = 5;
};

/// Pluggable satisfaction classifier. fit() receives z-scored features.
class SatisfactionClassifier {
public:
    virtual ~SatisfactionClassifier() = default;

    virtual void fit(const std::vector<std::vector<double>>& train_x,
                     const std::vector<int>& train_y,
                     const std::vector<std::vector<double>>& holdout_x,
                     const std::vector<int>& holdout_y) = 0;

    virtual int predict(const std::vector<double>& x) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<SatisfactionClassifier>()>;

/// Multinomial logistic regression: L2 strength 0.1, full-batch gradient
/// descent at learning rate 0.1, at most 2000 iterations, stopping when the
/// training loss improves by less than 1e-7; the holdout picks the iterate
/// kept (early stopping).
class LogisticRegressionClassifier : public SatisfactionClassifier {
public:
    struct Options {
        double l2_lambda = 0.1;
        double learning_rate = 0.1;
        int max_iterations = 2000;
        double tolerance = 1e-7;
    };

    LogisticRegressionClassifier();
    explicit LogisticRegressionClassifier(Options options);

    void fit(const std::vector<std::vector<double>>& train_x, const std::vector<int>& train_y,
             const std::vector<std::vector<double>>& holdout_x,
             const std::vector<int>& holdout_y) override;

    int predict(const std::vector<double>& x) const override;

private:
    Options options_;
    std::vector<int> classes_;                 // sorted distinct target values
    std::vector<std::vector<double>> weights_; // [class][feature]
    std::vector<double> biases_;
};

/// Shuffles queries by seed into `folds` folds; per fold trains on the other
/// folds (with an inner 8:2 train/holdout split for early stopping), z-scores
/// features with training-fold statistics, and evaluates on the held fold.
/// Throws DegenerateTargetError when the target has a single class and
/// ConfigError when the matrix has fewer than 50 rows.
CvReport train_eval_cv(const FeatureMatrix& matrix, int folds, std::uint64_t seed,
                       const ClassifierFactory& factory = {});

struct TTestResult {
    double t = 0.0;
    double p = 0.0;  // two-tailed
    int df = 0;
};

/// Two-tailed paired t-test on per-fold scores. Throws ZeroVarianceError when
/// every difference is identical and ConfigError on length mismatch or m < 2.
TTestResult paired_t_test(const std::vector<double>& scores_a,
                          const std::vector<double>& scores_b);

/// Two-sided Student-t tail probability P(|T| >= |t|) with df degrees of
/// freedom, accurate to 1e-6 (regularized incomplete beta).
double student_t_two_sided_p(double t, int df);

struct NamedMatrix {
    std::string name;
    FeatureMatrix matrix;
};

struct VariantResult {
    std::string name;
    CvReport report;
};

struct PairwiseComparison {
    std::string variant_a;
    std::string variant_b;
    std::optional<TTestResult> f1_test;  // null when the differences have zero variance
    std::string note;
};

struct ComparisonReport {
    std::vector<VariantResult> variants;
    std::vector<PairwiseComparison> tests;
    std::uint64_t seed = 0;
};

/// Runs train_eval_cv per variant with the SAME fold assignment (variants must
/// share identical query rows; RowMismatchError otherwise) and paired t-tests
/// on per-fold macro F1 for every variant pair.
ComparisonReport compare_feature_sets(const std::vector<NamedMatrix>& variants,
                                      std::uint64_t seed,
                                      const ClassifierFactory& factory = {});

std::string comparison_report_to_json(const ComparisonReport& report);

}  // namespace clue
