#include "csls/smoothing.hpp"

#include <cmath>
#include <string>

#include "csls/error.hpp"

namespace csls {

namespace {

void check_epsilon(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail_usage("epsilon must lie in [0, 1]");
}

// Targets must be one-hot; returns the hot index of each row.
std::vector<std::size_t> hot_indices(const SoftLabels& targets) {
    std::vector<std::size_t> hot(targets.rows());
    for (std::size_t n = 0; n < targets.rows(); ++n) {
        const auto row = targets.row(n);
        std::size_t ones = 0;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (row[c] == 1.0) {
                hot[n] = c;
                ++ones;
            } else if (row[c] != 0.0) {
                ones = 2;
                break;
            }
        }
        if (ones != 1) fail_data("target row " + std::to_string(n) + " is not one-hot");
    }
    return hot;
}

}  // namespace

SoftLabels smooth_uniform(const SoftLabels& targets, double epsilon) {
    check_epsilon(epsilon);
    hot_indices(targets);
    const double floor = epsilon / static_cast<double>(targets.cols());
    Matrix out(targets.rows(), targets.cols());
    for (std::size_t n = 0; n < targets.rows(); ++n) {
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            out(n, c) = (1.0 - epsilon) * targets(n, c) + floor;
        }
    }
    return SoftLabels(std::move(out));
}

SoftLabels smooth_similarity(const SoftLabels& targets, const SimilarityMatrix& sim, const SmoothingConfig& cfg) {
    check_epsilon(cfg.epsilon);
    if (!sim.modulated) fail_data("similarity smoothing needs the modulated similarity matrix");
    const Matrix& mod = *sim.modulated;
    const std::size_t classes = targets.cols();
    if (mod.rows() != classes || mod.cols() != classes) {
        fail_data("similarity matrix is " + std::to_string(mod.rows()) + "x" + std::to_string(mod.cols()) +
                  " but targets have " + std::to_string(classes) + " classes");
    }
    const auto hot = hot_indices(targets);

    // Smoothing distribution per class.
    Matrix dist(classes, classes);
    for (std::size_t c = 0; c < classes; ++c) {
        if (cfg.orientation == Orientation::row) {
            for (std::size_t j = 0; j < classes; ++j) dist(c, j) = mod(c, j);
        } else {
            double sum = 0.0;
            for (std::size_t j = 0; j < classes; ++j) sum += mod(j, c);
            for (std::size_t j = 0; j < classes; ++j) dist(c, j) = mod(j, c) / sum;
        }
    }

    Matrix out(targets.rows(), classes);
    for (std::size_t n = 0; n < targets.rows(); ++n) {
        const auto s = dist.row(hot[n]);
        for (std::size_t j = 0; j < classes; ++j) {
            out(n, j) = (1.0 - cfg.epsilon) * targets(n, j) + cfg.epsilon * s[j];
        }
    }
    return SoftLabels(std::move(out));
}

SoftLabels smooth(const SoftLabels& targets, const SimilarityMatrix* sim, const SmoothingConfig& cfg) {
    if (cfg.mode == SmoothingMode::uniform) return smooth_uniform(targets, cfg.epsilon);
    if (sim == nullptr) fail_data("similarity smoothing needs a similarity matrix");
    return smooth_similarity(targets, *sim, cfg);
}

}  // namespace csls
