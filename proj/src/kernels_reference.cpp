#include <algorithm>
#include <cmath>

#include "csls/kernels.hpp"

namespace csls::kernels::reference {

Matrix affine_nt(const Matrix& x, const Matrix& w, std::span<const double> bias) {
    Matrix out(x.rows(), w.rows());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        for (std::size_t c = 0; c < w.rows(); ++c) {
            double acc = 0.0;
            for (std::size_t d = 0; d < x.cols(); ++d) acc += x(n, d) * w(c, d);
            out(n, c) = bias.empty() ? acc : acc + bias[c];
        }
    }
    return out;
}

void softmax_rows(Matrix& logits) {
    for (std::size_t n = 0; n < logits.rows(); ++n) {
        double mx = logits(n, 0);
        for (std::size_t c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits(n, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < logits.cols(); ++c) {
            logits(n, c) = std::exp(logits(n, c) - mx);
            sum += logits(n, c);
        }
        for (std::size_t c = 0; c < logits.cols(); ++c) logits(n, c) /= sum;
    }
}

Matrix matmul_tn(const Matrix& g, const Matrix& x) {
    Matrix out(g.cols(), x.cols());
    for (std::size_t c = 0; c < g.cols(); ++c) {
        for (std::size_t d = 0; d < x.cols(); ++d) {
            double acc = 0.0;
            for (std::size_t n = 0; n < g.rows(); ++n) acc += g(n, c) * x(n, d);
            out(c, d) = acc;
        }
    }
    return out;
}

std::vector<double> column_sums(const Matrix& m) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        for (std::size_t n = 0; n < m.rows(); ++n) out[c] += m(n, c);
    }
    return out;
}

std::vector<double> row_norms(const Matrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t n = 0; n < m.rows(); ++n) {
        double acc = 0.0;
        for (std::size_t d = 0; d < m.cols(); ++d) acc += m(n, d) * m(n, d);
        out[n] = std::sqrt(acc);
    }
    return out;
}

Matrix cosine_scores(const Matrix& queries, const Matrix& pool) {
    const auto qn = row_norms(queries);
    const auto pn = row_norms(pool);
    Matrix out(queries.rows(), pool.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        for (std::size_t p = 0; p < pool.rows(); ++p) {
            double dot = 0.0;
            for (std::size_t d = 0; d < queries.cols(); ++d) dot += queries(q, d) * pool(p, d);
            out(q, p) = dot / (qn[q] * pn[p]);
        }
    }
    return out;
}

Matrix class_sums(const Matrix& x, std::span<const std::size_t> labels, std::size_t num_classes) {
    Matrix out(num_classes, x.cols());
    for (std::size_t n = 0; n < x.rows(); ++n) {
        for (std::size_t d = 0; d < x.cols(); ++d) out(labels[n], d) += x(n, d);
    }
    return out;
}

}  // namespace csls::kernels::reference
