#include "csls/prototypes.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csls/error.hpp"
#include "csls/kernels.hpp"

namespace csls {

bool PrototypeSet::all_valid() const noexcept {
    return std::all_of(valid.begin(), valid.end(), [](bool v) { return v; });
}

PrototypeSet compute_prototypes(const Matrix& embeddings, const LabelSet& labels) {
    if (embeddings.rows() != labels.size()) {
        fail_data("embeddings have " + std::to_string(embeddings.rows()) + " rows but " +
                  std::to_string(labels.size()) + " labels were given");
    }
    if (embeddings.cols() == 0) fail_data("embeddings must have at least one column");

    const std::size_t classes = labels.num_classes();
    PrototypeSet out;
    out.prototypes = kernels::class_sums(embeddings, labels.labels(), classes);
    out.counts.assign(labels.counts().begin(), labels.counts().end());
    out.valid.assign(classes, false);

    const auto norms_before = kernels::row_norms(out.prototypes);
    for (std::size_t i = 0; i < classes; ++i) {
        auto row = out.prototypes.row(i);
        if (out.counts[i] == 0) continue;
        const double inv = 1.0 / static_cast<double>(out.counts[i]);
        for (double& v : row) v *= inv;
        if (norms_before[i] > 0.0) {
            out.valid[i] = true;
        } else {
            std::fill(row.begin(), row.end(), 0.0);
        }
    }
    return out;
}

SimilarityMatrix cosine_similarity(const PrototypeSet& protos) {
    const std::size_t classes = protos.num_classes();
    const auto norms = kernels::row_norms(protos.prototypes);
    for (std::size_t i = 0; i < classes; ++i) {
        if (protos.counts.size() == classes && protos.counts[i] == 0) {
            fail_numerical("class " + std::to_string(i) + " has no instances; drop it before computing similarity");
        }
        if (!protos.valid[i] || !(norms[i] > 0.0)) {
            fail_numerical("singular prototype: class " + std::to_string(i) + " has a zero-norm prototype");
        }
    }

    Matrix cos = kernels::cosine_scores(protos.prototypes, protos.prototypes);
    for (std::size_t i = 0; i < classes; ++i) {
        cos(i, i) = 1.0;
        for (std::size_t j = i + 1; j < classes; ++j) {
            const double v = std::clamp(cos(i, j), -1.0, 1.0);
            cos(i, j) = v;
            cos(j, i) = v;
        }
    }
    return SimilarityMatrix{std::move(cos), std::nullopt, 0.0};
}

SimilarityMatrix modulate_similarity(SimilarityMatrix sim, std::span<const std::size_t> counts, double gamma) {
    const std::size_t classes = sim.num_classes();
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail_usage("gamma must be a finite value >= 0");
    if (counts.size() != classes) {
        fail_data("got " + std::to_string(counts.size()) + " class counts for " + std::to_string(classes) +
                  " classes");
    }

    std::vector<double> scale(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        if (counts[j] == 0) {
            fail_numerical("rare-class modulation undefined: class " + std::to_string(j) + " has zero instances");
        }
        scale[j] = 1.0 / std::pow(static_cast<double>(counts[j]), gamma);
    }

    Matrix mod(classes, classes);
    for (std::size_t i = 0; i < classes; ++i) {
        auto out = mod.row(i);
        double mx = -INFINITY;
        for (std::size_t j = 0; j < classes; ++j) {
            out[j] = sim.raw(i, j) * scale[j];
            mx = std::max(mx, out[j]);
        }
        double sum = 0.0;
        for (double& v : out) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : out) v /= sum;
    }
    sim.modulated = std::move(mod);
    sim.gamma = gamma;
    return sim;
}

ReindexedPrototypes drop_invalid_classes(const PrototypeSet& protos) {
    ReindexedPrototypes out;
    for (std::size_t i = 0; i < protos.num_classes(); ++i) {
        if (protos.valid[i]) out.kept_classes.push_back(i);
    }
    const std::size_t dim = protos.prototypes.cols();
    out.protos.prototypes = Matrix(out.kept_classes.size(), dim);
    for (std::size_t k = 0; k < out.kept_classes.size(); ++k) {
        const std::size_t orig = out.kept_classes[k];
        std::copy_n(protos.prototypes.row(orig).begin(), dim, out.protos.prototypes.row(k).begin());
        out.protos.valid.push_back(true);
        out.protos.counts.push_back(protos.counts[orig]);
    }
    return out;
}

SimilarityMatrix class_similarity(const Matrix& embeddings, const LabelSet& labels, double gamma) {
    const PrototypeSet protos = compute_prototypes(embeddings, labels);
    return modulate_similarity(cosine_similarity(protos), protos.counts, gamma);
}

}  // namespace csls
