#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csls/labels.hpp"
#include "csls/matrix.hpp"

namespace csls {

enum class Repair { clamp_renormalize, none };

struct CorrectionConfig {
    double lambda = 2.0;
    Repair repair = Repair::clamp_renormalize;
};

struct CorrectedLabels {
    SoftLabels labels;
    /// Rows whose clamped values summed to zero; these keep the teacher row.
    std::vector<std::size_t> fallback_rows;
};

/// teacher + lambda * delta per row, clamped to [0, 1] and renormalized.
CorrectedLabels correct_pseudo_labels(const SoftLabels& teacher, std::span<const double> delta, double lambda);

/// teacher + lambda * delta with no repair. Rows are generally not
/// distributions; for analysis only.
Matrix correct_pseudo_labels_raw(const SoftLabels& teacher, std::span<const double> delta, double lambda);

struct PseudoLabelBatch {
    SoftLabels corrected;
    std::vector<bool> keep_mask;  // keep_mask[m] == (max(corrected[m]) >= threshold)
    double threshold = 0.5;

    std::size_t kept() const noexcept;
    std::vector<std::size_t> kept_indices() const;
};

PseudoLabelBatch filter_by_confidence(SoftLabels batch, double tau);

/// Exact cosine k-NN: for each query, the k pool rows of highest cosine
/// similarity in descending order, ties broken by lower pool index.
std::vector<std::vector<std::size_t>> knn_cosine(const Matrix& pool, const Matrix& queries, std::size_t k);

/// Union of every query's k nearest pool rows, duplicates removed, in
/// first-occurrence order (query by query, nearest first).
std::vector<std::size_t> retrieve_unlabeled(const Matrix& pool, const Matrix& queries, std::size_t k);

}  // namespace csls
