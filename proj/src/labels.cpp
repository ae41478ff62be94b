#include "csls/labels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csls/error.hpp"

namespace csls {

LabelSet::LabelSet(std::vector<std::size_t> labels, std::size_t num_classes)
    : labels_(std::move(labels)), num_classes_(num_classes), counts_(num_classes, 0) {
    for (std::size_t n = 0; n < labels_.size(); ++n) {
        if (labels_[n] >= num_classes_) {
            fail_data("label " + std::to_string(labels_[n]) + " at index " + std::to_string(n) +
                      " out of range for " + std::to_string(num_classes_) + " classes");
        }
        ++counts_[labels_[n]];
    }
}

LabelSet LabelSet::infer(std::vector<std::size_t> labels) {
    std::size_t c = 0;
    for (std::size_t l : labels) c = std::max(c, l + 1);
    return LabelSet(std::move(labels), c);
}

LabelSet LabelSet::subset(std::span<const std::size_t> indices) const {
    std::vector<std::size_t> picked;
    picked.reserve(indices.size());
    for (std::size_t i : indices) picked.push_back(labels_.at(i));
    return LabelSet(std::move(picked), num_classes_);
}

namespace {

void check_distribution_rows(const Matrix& m, double tolerance) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            const double v = m(r, c);
            if (!(v >= 0.0 && v <= 1.0)) {
                fail_data("soft label entry (" + std::to_string(r) + ", " + std::to_string(c) +
                          ") = " + std::to_string(v) + " outside [0, 1]");
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > tolerance) {
            fail_data("row " + std::to_string(r) + " sums to " + std::to_string(sum) +
                      ", not a distribution");
        }
    }
}

}  // namespace

SoftLabels::SoftLabels(Matrix m) : m_(std::move(m)) {
    m_.require_finite("soft labels");
    check_distribution_rows(m_, kRowSumTolerance);
}

SoftLabels SoftLabels::normalized(Matrix m, double tolerance) {
    m.require_finite("scores");
    check_distribution_rows(m, tolerance);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        double sum = 0.0;
        for (double v : row) sum += v;
        for (double& v : row) v /= sum;
    }
    return SoftLabels(std::move(m));
}

SoftLabels one_hot(const LabelSet& labels) {
    Matrix m(labels.size(), labels.num_classes());
    for (std::size_t n = 0; n < labels.size(); ++n) m(n, labels[n]) = 1.0;
    return SoftLabels(std::move(m));
}

std::size_t argmax(std::span<const double> row) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
        if (row[c] > row[best]) best = c;
    }
    return best;
}

}  // namespace csls
