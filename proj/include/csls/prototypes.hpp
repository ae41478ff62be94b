#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "csls/labels.hpp"
#include "csls/matrix.hpp"

namespace csls {

/// One mean embedding per class. Classes without instances (or whose mean
/// is the zero vector) are marked invalid and hold an all-zero row.
struct PrototypeSet {
    Matrix prototypes;                 // C x D
    std::vector<bool> valid;           // length C
    std::vector<std::size_t> counts;   // N_i used for each mean

    std::size_t num_classes() const noexcept { return prototypes.rows(); }
    bool all_valid() const noexcept;
};

/// Cosine similarities between prototypes, and optionally the
/// count-modulated, row-stochastic version of them.
struct SimilarityMatrix {
    Matrix raw;                       // C x C, symmetric, unit diagonal
    std::optional<Matrix> modulated;  // C x C, rows sum to 1
    double gamma = 0.0;

    std::size_t num_classes() const noexcept { return raw.rows(); }
};

PrototypeSet compute_prototypes(const Matrix& embeddings, const LabelSet& labels);

/// Throws a numerical error naming the first invalid class.
SimilarityMatrix cosine_similarity(const PrototypeSet& protos);

/// S'_ij = exp(S_ij / N_j^gamma) / sum_k exp(S_ik / N_k^gamma), evaluated
/// with the row maximum subtracted before exponentiation.
SimilarityMatrix modulate_similarity(SimilarityMatrix sim, std::span<const std::size_t> counts, double gamma);

/// Result of removing invalid classes and renumbering the rest densely.
struct ReindexedPrototypes {
    PrototypeSet protos;
    std::vector<std::size_t> kept_classes;  // new index -> original class
};

ReindexedPrototypes drop_invalid_classes(const PrototypeSet& protos);

/// Prototypes -> cosine -> modulation in one call. Requires every class valid.
SimilarityMatrix class_similarity(const Matrix& embeddings, const LabelSet& labels, double gamma);

}  // namespace csls
