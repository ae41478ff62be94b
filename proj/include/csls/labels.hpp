#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "csls/matrix.hpp"

namespace csls {

/// Class index per instance plus per-class instance counts.
class LabelSet {
public:
    LabelSet() = default;
    LabelSet(std::vector<std::size_t> labels, std::size_t num_classes);

    /// Uses max(label) + 1 as the class count.
    static LabelSet infer(std::vector<std::size_t> labels);

    std::size_t size() const noexcept { return labels_.size(); }
    std::size_t num_classes() const noexcept { return num_classes_; }
    std::size_t operator[](std::size_t n) const { return labels_[n]; }
    std::span<const std::size_t> labels() const noexcept { return labels_; }
    std::span<const std::size_t> counts() const noexcept { return counts_; }

    LabelSet subset(std::span<const std::size_t> indices) const;

    friend bool operator==(const LabelSet&, const LabelSet&) = default;

private:
    std::vector<std::size_t> labels_;
    std::size_t num_classes_ = 0;
    std::vector<std::size_t> counts_;
};

/// N x C matrix whose rows are probability distributions.
class SoftLabels {
public:
    static constexpr double kRowSumTolerance = 1e-9;

    SoftLabels() = default;
    /// Validates entries in [0, 1] and row sums within kRowSumTolerance.
    explicit SoftLabels(Matrix m);

    /// Accepts rows summing to 1 within `tolerance` (e.g. scores stored at
    /// 32-bit precision) and renormalizes them exactly.
    static SoftLabels normalized(Matrix m, double tolerance);

    const Matrix& matrix() const noexcept { return m_; }
    std::size_t rows() const noexcept { return m_.rows(); }
    std::size_t cols() const noexcept { return m_.cols(); }
    double operator()(std::size_t r, std::size_t c) const { return m_(r, c); }
    std::span<const double> row(std::size_t r) const { return m_.row(r); }

    friend bool operator==(const SoftLabels&, const SoftLabels&) = default;

private:
    Matrix m_;
};

SoftLabels one_hot(const LabelSet& labels);

/// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> row);

}  // namespace csls
