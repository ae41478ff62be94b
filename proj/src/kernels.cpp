#include "csls/kernels.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace csls::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

using Index = std::ptrdiff_t;

}  // namespace

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

Matrix affine_nt(const Matrix& x, const Matrix& w, std::span<const double> bias) {
    const std::size_t rows = x.rows(), classes = w.rows(), dim = x.cols();
    // W^T lets the inner loop run across classes; each output still sums
    // over d in ascending order, as the reference does.
    std::vector<double> wt(dim * classes);
    for (std::size_t c = 0; c < classes; ++c) {
        for (std::size_t d = 0; d < dim; ++d) wt[d * classes + c] = w(c, d);
    }
    Matrix out(rows, classes);
    const double* xp = x.values().data();
    const double* wp = wt.data();
    double* op = out.values().data();
    const bool has_bias = !bias.empty();

#pragma omp parallel for schedule(static) if (rows * classes * dim > kParallelWork)
    for (Index n = 0; n < static_cast<Index>(rows); ++n) {
        const double* xr = xp + n * dim;
        double* orow = op + n * classes;
        for (std::size_t d = 0; d < dim; ++d) {
            const double xv = xr[d];
            const double* wr = wp + d * classes;
            for (std::size_t c = 0; c < classes; ++c) orow[c] += xv * wr[c];
        }
        if (has_bias) {
            for (std::size_t c = 0; c < classes; ++c) orow[c] += bias[c];
        }
    }
    return out;
}

void softmax_rows(Matrix& logits) {
    const std::size_t rows = logits.rows(), cols = logits.cols();
    double* p = logits.values().data();

#pragma omp parallel for schedule(static) if (rows * cols * 8 > kParallelWork)
    for (Index n = 0; n < static_cast<Index>(rows); ++n) {
        double* r = p + n * cols;
        const double mx = *std::max_element(r, r + cols);
        double sum = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            r[c] = std::exp(r[c] - mx);
            sum += r[c];
        }
        for (std::size_t c = 0; c < cols; ++c) r[c] /= sum;
    }
}

Matrix matmul_tn(const Matrix& g, const Matrix& x) {
    const std::size_t rows = g.rows(), classes = g.cols(), dim = x.cols();
    Matrix out(classes, dim);
    const double* gp = g.values().data();
    const double* xp = x.values().data();
    double* op = out.values().data();

#pragma omp parallel for schedule(static) if (rows * classes * dim > kParallelWork)
    for (Index c = 0; c < static_cast<Index>(classes); ++c) {
        double* acc = op + c * dim;
        for (std::size_t n = 0; n < rows; ++n) {
            const double gnc = gp[n * classes + c];
            const double* xr = xp + n * dim;
            for (std::size_t d = 0; d < dim; ++d) acc[d] += gnc * xr[d];
        }
    }
    return out;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t n = 0; n < m.rows(); ++n) {
        const auto r = m.row(n);
        for (std::size_t c = 0; c < r.size(); ++c) out[c] += r[c];
    }
    return out;
}

std::vector<double> row_norms(const Matrix& m) {
    const std::size_t rows = m.rows(), dim = m.cols();
    std::vector<double> out(rows);
    const double* p = m.values().data();

#pragma omp parallel for schedule(static) if (rows * dim > kParallelWork)
    for (Index n = 0; n < static_cast<Index>(rows); ++n) {
        const double* r = p + n * dim;
        double acc = 0.0;
        for (std::size_t d = 0; d < dim; ++d) acc += r[d] * r[d];
        out[n] = std::sqrt(acc);
    }
    return out;
}

Matrix cosine_scores(const Matrix& queries, const Matrix& pool) {
    const auto qn = row_norms(queries);
    const auto pn = row_norms(pool);
    const std::size_t nq = queries.rows(), np = pool.rows(), dim = queries.cols();
    Matrix out(nq, np);
    const double* qp = queries.values().data();
    const double* pp = pool.values().data();
    double* op = out.values().data();

#pragma omp parallel for schedule(static) if (nq * np * dim > kParallelWork)
    for (Index q = 0; q < static_cast<Index>(nq); ++q) {
        const double* qr = qp + q * dim;
        double* orow = op + q * np;
        for (std::size_t p = 0; p < np; ++p) {
            const double* pr = pp + p * dim;
            double dot = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dot += qr[d] * pr[d];
            orow[p] = dot / (qn[q] * pn[p]);
        }
    }
    return out;
}

Matrix class_sums(const Matrix& x, std::span<const std::size_t> labels, std::size_t num_classes) {
    const std::size_t rows = x.rows(), dim = x.cols();
    Matrix out(num_classes, dim);
    const double* xp = x.values().data();
    double* op = out.values().data();

#pragma omp parallel for schedule(static) if (rows * dim > kParallelWork)
    for (Index d = 0; d < static_cast<Index>(dim); ++d) {
        for (std::size_t n = 0; n < rows; ++n) op[labels[n] * dim + d] += xp[n * dim + d];
    }
    return out;
}

}  // namespace csls::kernels
