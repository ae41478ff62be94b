#include "csls/pseudo_label.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "csls/error.hpp"
#include "csls/kernels.hpp"

namespace csls {

namespace {

void check_correction(const SoftLabels& teacher, std::span<const double> delta, double lambda) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail_usage("lambda must be a finite value >= 0");
    if (delta.size() != teacher.cols()) {
        fail_data("delta has " + std::to_string(delta.size()) + " entries but scores have " +
                  std::to_string(teacher.cols()) + " classes");
    }
    for (double d : delta) {
        if (!std::isfinite(d)) fail_data("delta contains a non-finite value");
    }
}

}  // namespace

Matrix correct_pseudo_labels_raw(const SoftLabels& teacher, std::span<const double> delta, double lambda) {
    check_correction(teacher, delta, lambda);
    Matrix out = teacher.matrix();
    for (std::size_t m = 0; m < out.rows(); ++m) {
        auto row = out.row(m);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += lambda * delta[c];
    }
    return out;
}

CorrectedLabels correct_pseudo_labels(const SoftLabels& teacher, std::span<const double> delta, double lambda) {
    Matrix out = correct_pseudo_labels_raw(teacher, delta, lambda);
    std::vector<std::size_t> fallback;
    for (std::size_t m = 0; m < out.rows(); ++m) {
        auto row = out.row(m);
        double sum = 0.0;
        for (double& v : row) {
            v = std::clamp(v, 0.0, 1.0);
            sum += v;
        }
        if (sum > 0.0) {
            for (double& v : row) v /= sum;
        } else {
            const auto orig = teacher.row(m);
            std::copy(orig.begin(), orig.end(), row.begin());
            fallback.push_back(m);
        }
    }
    return CorrectedLabels{SoftLabels(std::move(out)), std::move(fallback)};
}

std::size_t PseudoLabelBatch::kept() const noexcept {
    return static_cast<std::size_t>(std::count(keep_mask.begin(), keep_mask.end(), true));
}

std::vector<std::size_t> PseudoLabelBatch::kept_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t m = 0; m < keep_mask.size(); ++m) {
        if (keep_mask[m]) out.push_back(m);
    }
    return out;
}

PseudoLabelBatch filter_by_confidence(SoftLabels batch, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) fail_usage("threshold must lie in [0, 1]");
    std::vector<bool> keep(batch.rows());
    for (std::size_t m = 0; m < batch.rows(); ++m) {
        const auto row = batch.row(m);
        keep[m] = *std::max_element(row.begin(), row.end()) >= tau;
    }
    return PseudoLabelBatch{std::move(batch), std::move(keep), tau};
}

std::vector<std::vector<std::size_t>> knn_cosine(const Matrix& pool, const Matrix& queries, std::size_t k) {
    if (pool.cols() != queries.cols()) {
        fail_data("pool has dimension " + std::to_string(pool.cols()) + " but queries have " +
                  std::to_string(queries.cols()));
    }
    if (k == 0) fail_usage("k must be positive");
    if (k > pool.rows()) {
        fail_usage("k = " + std::to_string(k) + " exceeds pool size " + std::to_string(pool.rows()));
    }
    const auto pool_norms = kernels::row_norms(pool);
    for (std::size_t p = 0; p < pool.rows(); ++p) {
        if (!(pool_norms[p] > 0.0)) fail_data("pool row " + std::to_string(p) + " has zero norm");
    }
    const auto query_norms = kernels::row_norms(queries);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        if (!(query_norms[q] > 0.0)) fail_data("query row " + std::to_string(q) + " has zero norm");
    }

    const Matrix scores = kernels::cosine_scores(queries, pool);
    std::vector<std::vector<std::size_t>> out(queries.rows());
    std::vector<std::size_t> order(pool.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        const auto s = scores.row(q);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                          [&](std::size_t a, std::size_t b) { return s[a] > s[b] || (s[a] == s[b] && a < b); });
        out[q].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    }
    return out;
}

std::vector<std::size_t> retrieve_unlabeled(const Matrix& pool, const Matrix& queries, std::size_t k) {
    const auto per_query = knn_cosine(pool, queries, k);
    std::vector<bool> seen(pool.rows(), false);
    std::vector<std::size_t> out;
    for (const auto& ids : per_query) {
        for (std::size_t p : ids) {
            if (!seen[p]) {
                seen[p] = true;
                out.push_back(p);
            }
        }
    }
    return out;
}

}  // namespace csls
