#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csls/json.hpp"
#include "csls/labels.hpp"

namespace csls {

/// Equal-width confidence bins. Bin b (1-based) covers ((b-1)/B, b/B] for
/// b >= 2 and [0, 1/B] for b = 1, with edges compared as the doubles b/B.
struct BinningConfig {
    std::size_t num_bins = 10;

    /// 1-based bin for a confidence in [0, 1].
    std::size_t bin_of(double confidence) const;
};

/// Which class a sample counts toward.
///   predicted_class: argmax of its scores; confidence = max score;
///                    correct iff the label equals the argmax.
///   true_class:      its label; confidence = score of that label;
///                    correct iff the argmax equals the label.
enum class Grouping { predicted_class, true_class };

std::string to_string(Grouping g);
Grouping grouping_from_string(const std::string& s);

struct BinStat {
    std::size_t cls = 0;
    std::size_t bin = 0;  // 1-based
    std::size_t count = 0;
    std::optional<double> acc;   // absent when count == 0
    std::optional<double> conf;
};

struct CalibrationReport {
    Grouping grouping = Grouping::predicted_class;
    std::size_t num_bins = 10;
    std::size_t num_classes = 0;
    std::vector<BinStat> bins;               // class-major, every (class, bin) pair
    std::vector<std::size_t> class_counts;   // N_i under the grouping
    std::vector<double> delta;               // signed per-class error, Δ_i
    std::vector<double> class_ece;           // same bins with |acc - conf|
    std::vector<std::size_t> unobserved;     // classes with N_i == 0
    double ece = 0.0;

    const BinStat& at(std::size_t cls, std::size_t bin) const { return bins[cls * num_bins + (bin - 1)]; }
};

/// Per-class, per-bin counts and within-bin means. Fills bins and class_counts.
CalibrationReport reliability_bins(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg,
                                   Grouping grouping = Grouping::predicted_class);

/// Δ_i = Σ_b (N_ib / N_i) (acc_ib - conf_ib); 0 for classes with N_i == 0.
/// Negative means overconfident.
std::vector<double> ccece(const CalibrationReport& bins);

std::vector<double> class_ece(const CalibrationReport& bins);

/// Aggregate ECE over all samples using max-confidence grouping.
double ece(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg);

/// Bins, Δ, per-class ECE, unobserved classes and aggregate ECE together.
CalibrationReport calibrate(const SoftLabels& scores, const LabelSet& labels, const BinningConfig& cfg,
                            Grouping grouping = Grouping::predicted_class);

Json report_to_json(const CalibrationReport& report);

/// Reads back the delta vector (and bin table) of a report_to_json document.
CalibrationReport report_from_json(const Json& doc);

}  // namespace csls
