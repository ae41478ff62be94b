#pragma once

#include "csls/labels.hpp"
#include "csls/prototypes.hpp"

namespace csls {

enum class SmoothingMode { uniform, similarity };

/// Which slice of S' supplies the smoothing distribution for true class c.
///   row:                  row c of S' (already a distribution)
///   column_renormalized:  column c of S', divided by its sum
enum class Orientation { row, column_renormalized };

struct SmoothingConfig {
    double epsilon = 0.1;
    SmoothingMode mode = SmoothingMode::similarity;
    Orientation orientation = Orientation::row;
};

/// (1 - eps) * y + eps / C.
SoftLabels smooth_uniform(const SoftLabels& targets, double epsilon);

/// (1 - eps) * y + eps * s_c, where s_c is the class-c smoothing
/// distribution taken from sim.modulated per cfg.orientation.
/// The diagonal of S' is kept, so the true class ends at (1-eps) + eps*S'_cc.
SoftLabels smooth_similarity(const SoftLabels& targets, const SimilarityMatrix& sim, const SmoothingConfig& cfg);

/// Dispatches on cfg.mode; `sim` is ignored for uniform smoothing.
SoftLabels smooth(const SoftLabels& targets, const SimilarityMatrix* sim, const SmoothingConfig& cfg);

}  // namespace csls
