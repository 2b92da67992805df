#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace roadsound::eval {

// Confusion counts with rows indexed by the true label and columns by the
// predicted one.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t n_classes);
    void add(int truth, int predicted);
    std::size_t at(std::size_t truth, std::size_t predicted) const;
    std::size_t n_classes() const { return n_classes_; }
    std::size_t total() const { return total_; }
    std::size_t row_sum(std::size_t truth) const;
    std::size_t col_sum(std::size_t predicted) const;

private:
    std::size_t n_classes_;
    std::size_t total_ = 0;
    std::vector<std::size_t> counts_;
};

// One-vs-rest scores for a single class. `degenerate` is set when any
// denominator was zero; the affected score is reported as 0.
struct ClassMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double specificity = 0.0;
    double false_positive_rate = 0.0;  // fp / (fp + tn) = 1 - specificity
    double f1 = 0.0;
    bool degenerate = false;
};

struct MetricsReport {
    ConfusionMatrix confusion{1};
    std::vector<ClassMetrics> per_class;
    double accuracy = 0.0;  // trace / total
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    double macro_fpr = 0.0;  // the "overall" false positive rate
    bool any_degenerate = false;
};

double f1_score(double precision, double recall);

MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                              std::size_t n_classes);

// Fixed-format text rendering (labels optional); used for report files, so
// the layout is stable across runs.
std::string format_report(const MetricsReport& report,
                          const std::vector<std::string>& labels = {});

// The same report as a JSON document (confusion matrix, per-class table,
// macro averages), with stable key order for reproducible files.
std::string format_report_json(const MetricsReport& report,
                               const std::vector<std::string>& labels = {});

// Repeated stratified hold-out evaluation. The callback trains on the first
// index set, evaluates on the second, and returns (accuracy, macro-F1); this
// keeps the splitter testable with cheap stand-in evaluators.
struct SplitScore {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

using SplitEvaluator = std::function<SplitScore(const std::vector<std::size_t>& train_idx,
                                                const std::vector<std::size_t>& test_idx)>;

// min / first quartile / median / third quartile / max / mean, with quartiles
// by linear interpolation between order statistics.
struct Distribution {
    double min = 0.0;
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    double max = 0.0;
    double mean = 0.0;
};

struct CvSummary {
    std::vector<SplitScore> runs;
    Distribution accuracy;
    Distribution macro_f1;
};

Distribution summarize(std::vector<double> values);

CvSummary repeated_split_cv(const std::vector<int>& labels, double train_fraction,
                            std::size_t n_repeats, std::uint64_t seed,
                            const SplitEvaluator& evaluate);

}  // namespace roadsound::eval
