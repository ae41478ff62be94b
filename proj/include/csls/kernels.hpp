#pragma once

// Dense inner loops shared by the similarity, retrieval and training code.
//
// Two implementations with identical signatures:
//   csls::kernels            OpenMP-parallel over output rows
//   csls::kernels::reference plain serial loops
// Both accumulate every output element in the same fixed order, so their
// results are bitwise equal regardless of thread count. The test suite and
// bench/ compare them.

#include <cstddef>
#include <span>
#include <vector>

#include "csls/matrix.hpp"

namespace csls::kernels {

/// x (N x D) times w^T (C x D) plus bias (length C or empty) -> N x C.
Matrix affine_nt(const Matrix& x, const Matrix& w, std::span<const double> bias);

/// Numerically stable row softmax, in place.
void softmax_rows(Matrix& logits);

/// g^T (N x C) times x (N x D) -> C x D.
Matrix matmul_tn(const Matrix& g, const Matrix& x);

std::vector<double> column_sums(const Matrix& m);

std::vector<double> row_norms(const Matrix& m);

/// Cosine similarity of every query row against every pool row -> Q x P.
/// Callers must ensure no row has zero norm.
Matrix cosine_scores(const Matrix& queries, const Matrix& pool);

/// Per-class sums of instance rows -> C x D.
Matrix class_sums(const Matrix& x, std::span<const std::size_t> labels, std::size_t num_classes);

namespace reference {

Matrix affine_nt(const Matrix& x, const Matrix& w, std::span<const double> bias);
void softmax_rows(Matrix& logits);
Matrix matmul_tn(const Matrix& g, const Matrix& x);
std::vector<double> column_sums(const Matrix& m);
std::vector<double> row_norms(const Matrix& m);
Matrix cosine_scores(const Matrix& queries, const Matrix& pool);
Matrix class_sums(const Matrix& x, std::span<const std::size_t> labels, std::size_t num_classes);

}  // namespace reference

/// Threads OpenMP will use for the parallel kernels (1 without OpenMP).
int max_threads();

}  // namespace csls::kernels
