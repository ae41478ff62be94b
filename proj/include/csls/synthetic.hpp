#pragma once

#include <cstddef>
#include <vector>

#include "csls/labels.hpp"
#include "csls/matrix.hpp"
#include "csls/rng.hpp"

namespace csls {

/// Long-tailed Gaussian-mixture classification data.
///
/// Class sizes follow (i+1)^-s with class 0 largest. Class centers sit on a
/// sphere of radius `class_center_scale`; classes are grouped (`group_size`
/// per group, pairing head classes with tail classes) and members of a
/// group share a direction up to cosine `sibling_similarity`, so
/// semantically close class pairs exist.
struct SyntheticDatasetSpec {
    std::size_t num_classes = 20;
    double zipf_exponent = 1.5;
    std::size_t total_labeled = 2000;
    std::size_t total_unlabeled = 4000;
    std::size_t dim = 16;
    double cluster_spread = 1.0;
    double class_center_scale = 5.0;
    std::size_t group_size = 2;
    double sibling_similarity = 0.8;
    std::size_t test_per_class = 100;
    double validation_fraction = 0.15;
    std::size_t rare_threshold = 10;
    Seed seed = 0;

    /// Throws a usage error for an infeasible spec.
    void validate() const;
};

struct LabeledSplit {
    Matrix x;
    LabelSet y;
};

struct SyntheticData {
    LabeledSplit train;       // labeled training split
    LabeledSplit validation;  // held out from the labeled data
    Matrix unlabeled;
    LabelSet unlabeled_truth;  // never used for training
    LabeledSplit test;         // balanced across classes
    Matrix centers;            // C x D
    std::vector<std::size_t> class_sizes;  // labeled count per class before the split
};

/// Sizes proportional to (i+1)^-s summing to `total`, each >= 1 (largest
/// remainder rounding).
std::vector<std::size_t> zipf_class_sizes(std::size_t num_classes, double exponent, std::size_t total);

SyntheticData generate_synthetic(const SyntheticDatasetSpec& spec);

/// Keeps the first max(1, round(fraction * N_i)) instances of every class.
/// Nested across fractions: a smaller fraction keeps a subset.
LabeledSplit label_fraction_subset(const LabeledSplit& split, double fraction);

/// Classes whose count is at or below `threshold`.
std::vector<std::size_t> rare_classes(const LabelSet& labels, std::size_t threshold);

}  // namespace csls
