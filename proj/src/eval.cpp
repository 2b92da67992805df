#include "roadsound/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "roadsound/nn/train.hpp"

namespace roadsound::eval {

ConfusionMatrix::ConfusionMatrix(std::size_t n_classes)
    : n_classes_(n_classes), counts_(n_classes * n_classes, 0) {
    if (n_classes == 0) throw std::invalid_argument("ConfusionMatrix: n_classes must be > 0");
}

void ConfusionMatrix::add(int truth, int predicted) {
    if (truth < 0 || predicted < 0 || static_cast<std::size_t>(truth) >= n_classes_ ||
        static_cast<std::size_t>(predicted) >= n_classes_) {
        throw std::invalid_argument("ConfusionMatrix: label out of range");
    }
    ++counts_[static_cast<std::size_t>(truth) * n_classes_ + static_cast<std::size_t>(predicted)];
    ++total_;
}

std::size_t ConfusionMatrix::at(std::size_t truth, std::size_t predicted) const {
    return counts_[truth * n_classes_ + predicted];
}

std::size_t ConfusionMatrix::row_sum(std::size_t truth) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < n_classes_; ++j) s += at(truth, j);
    return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t predicted) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < n_classes_; ++i) s += at(i, predicted);
    return s;
}

double f1_score(double precision, double recall) {
    const double denom = precision + recall;
    if (denom <= 0.0) return 0.0;
    return 2.0 * precision * recall / denom;
}

MetricsReport compute_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                              std::size_t n_classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("compute_metrics: size mismatch");
    }
    MetricsReport report;
    report.confusion = ConfusionMatrix(n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) report.confusion.add(truth[i], predicted[i]);

    const auto total = static_cast<double>(report.confusion.total());
    std::size_t trace = 0;
    for (std::size_t k = 0; k < n_classes; ++k) trace += report.confusion.at(k, k);
    report.accuracy = total > 0.0 ? static_cast<double>(trace) / total : 0.0;

    report.per_class.resize(n_classes);
    for (std::size_t k = 0; k < n_classes; ++k) {
        const double tp = static_cast<double>(report.confusion.at(k, k));
        const double fn = static_cast<double>(report.confusion.row_sum(k)) - tp;
        const double fp = static_cast<double>(report.confusion.col_sum(k)) - tp;
        const double tn = total - tp - fn - fp;
        ClassMetrics& m = report.per_class[k];

        auto ratio = [&m](double num, double denom) {
            if (denom <= 0.0) {
                m.degenerate = true;
                return 0.0;
            }
            return num / denom;
        };
        m.accuracy = ratio(tp + tn, total);
        m.precision = ratio(tp, tp + fp);
        m.recall = ratio(tp, tp + fn);
        m.specificity = ratio(tn, tn + fp);
        m.false_positive_rate = ratio(fp, fp + tn);
        if (m.precision + m.recall <= 0.0) {
            m.f1 = 0.0;
            m.degenerate = true;
        } else {
            m.f1 = f1_score(m.precision, m.recall);
        }

        report.macro_precision += m.precision;
        report.macro_recall += m.recall;
        report.macro_f1 += m.f1;
        report.macro_fpr += m.false_positive_rate;
        report.any_degenerate = report.any_degenerate || m.degenerate;
    }
    const auto k = static_cast<double>(n_classes);
    report.macro_precision /= k;
    report.macro_recall /= k;
    report.macro_f1 /= k;
    report.macro_fpr /= k;
    return report;
}

std::string format_report(const MetricsReport& report, const std::vector<std::string>& labels) {
    const std::size_t n = report.confusion.n_classes();
    auto name = [&](std::size_t k) {
        if (k < labels.size()) return labels[k];
        return "class" + std::to_string(k);
    };
    std::size_t width = 8;
    for (std::size_t k = 0; k < n; ++k) width = std::max(width, name(k).size() + 1);

    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "samples: %zu\n", report.confusion.total());
    out += buf;
    std::snprintf(buf, sizeof(buf), "accuracy: %.6f\n\n", report.accuracy);
    out += buf;

    out += "confusion matrix (rows = true, cols = predicted)\n";
    out += std::string(width, ' ');
    for (std::size_t j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof(buf), "%*s", static_cast<int>(width), name(j).c_str());
        out += buf;
    }
    out += '\n';
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(buf, sizeof(buf), "%-*s", static_cast<int>(width), name(i).c_str());
        out += buf;
        for (std::size_t j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof(buf), "%*zu", static_cast<int>(width),
                          report.confusion.at(i, j));
            out += buf;
        }
        out += '\n';
    }

    out += "\nper-class (one vs rest)\n";
    std::snprintf(buf, sizeof(buf), "%-*s %9s %9s %9s %9s %9s %9s\n", static_cast<int>(width),
                  "class", "acc", "prec", "recall", "spec", "fpr", "f1");
    out += buf;
    for (std::size_t k = 0; k < n; ++k) {
        const ClassMetrics& m = report.per_class[k];
        std::snprintf(buf, sizeof(buf), "%-*s %9.6f %9.6f %9.6f %9.6f %9.6f %9.6f%s\n",
                      static_cast<int>(width), name(k).c_str(), m.accuracy, m.precision,
                      m.recall, m.specificity, m.false_positive_rate, m.f1,
                      m.degenerate ? "  [degenerate]" : "");
        out += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "\nmacro precision: %.6f\nmacro recall: %.6f\nmacro f1: %.6f\n"
                  "macro fpr: %.6f\n",
                  report.macro_precision, report.macro_recall, report.macro_f1,
                  report.macro_fpr);
    out += buf;
    return out;
}

std::string format_report_json(const MetricsReport& report,
                               const std::vector<std::string>& labels) {
    const std::size_t n = report.confusion.n_classes();
    auto name = [&](std::size_t k) {
        if (k < labels.size()) return labels[k];
        return "class" + std::to_string(k);
    };

    nlohmann::json doc;
    doc["samples"] = report.confusion.total();
    doc["accuracy"] = report.accuracy;
    doc["any_degenerate"] = report.any_degenerate;

    nlohmann::json label_list = nlohmann::json::array();
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        label_list.push_back(name(i));
        nlohmann::json row = nlohmann::json::array();
        for (std::size_t j = 0; j < n; ++j) row.push_back(report.confusion.at(i, j));
        confusion.push_back(std::move(row));
    }
    doc["labels"] = std::move(label_list);
    doc["confusion"] = std::move(confusion);

    nlohmann::json per_class = nlohmann::json::array();
    for (std::size_t k = 0; k < n; ++k) {
        const ClassMetrics& m = report.per_class[k];
        per_class.push_back({{"label", name(k)},
                             {"accuracy", m.accuracy},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"specificity", m.specificity},
                             {"false_positive_rate", m.false_positive_rate},
                             {"f1", m.f1},
                             {"degenerate", m.degenerate}});
    }
    doc["per_class"] = std::move(per_class);
    doc["macro"] = {{"precision", report.macro_precision},
                    {"recall", report.macro_recall},
                    {"f1", report.macro_f1},
                    {"fpr", report.macro_fpr}};
    return doc.dump(2) + "\n";
}

Distribution summarize(std::vector<double> values) {
    Distribution d;
    if (values.empty()) return d;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(n - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(n - 1, lo + 1);
        const double frac = pos - static_cast<double>(lo);
        return values[lo] * (1.0 - frac) + values[hi] * frac;
    };
    d.min = values.front();
    d.q1 = quantile(0.25);
    d.median = quantile(0.5);
    d.q3 = quantile(0.75);
    d.max = values.back();
    for (double v : values) d.mean += v;
    d.mean /= static_cast<double>(n);
    return d;
}

CvSummary repeated_split_cv(const std::vector<int>& labels, double train_fraction,
                            std::size_t n_repeats, std::uint64_t seed,
                            const SplitEvaluator& evaluate) {
    if (n_repeats == 0) throw std::invalid_argument("repeated_split_cv: n_repeats must be > 0");
    if (!evaluate) throw std::invalid_argument("repeated_split_cv: evaluator required");
    CvSummary summary;
    std::vector<double> accs, f1s;
    for (std::size_t r = 0; r < n_repeats; ++r) {
        const nn::SplitIndices split =
            nn::stratified_split(labels, train_fraction, seed + r);
        const SplitScore score = evaluate(split.first, split.second);
        summary.runs.push_back(score);
        accs.push_back(score.accuracy);
        f1s.push_back(score.macro_f1);
    }
    summary.accuracy = summarize(std::move(accs));
    summary.macro_f1 = summarize(std::move(f1s));
    return summary;
}

}  // namespace roadsound::eval
