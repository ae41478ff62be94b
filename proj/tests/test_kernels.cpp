#include <doctest.h>

#include <omp.h>

#include "csls/kernels.hpp"
#include "helpers.hpp"

using namespace csls;
namespace ref = csls::kernels::reference;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) { return Matrix::from_rows(oracle::random_mat(rng, r, c)); }

struct ThreadGuard {
    int saved = omp_get_max_threads();
    ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("parallel kernels equal the serial reference bit for bit") {
    ThreadGuard guard;
    Rng rng(107);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t N = 1 + rng.below(300), D = 1 + rng.below(20), C = 1 + rng.below(12);
        const Matrix x = random_matrix(rng, N, D);
        const Matrix w = random_matrix(rng, C, D);
        const Matrix g = random_matrix(rng, N, C);
        std::vector<double> bias(C);
        for (double& b : bias) b = rng.normal();
        std::vector<std::size_t> labels = testing::random_labels(rng, N, C);
        const Matrix pool = random_matrix(rng, 1 + rng.below(100), D);

        for (int threads : {1, 2, 3, 8}) {
            omp_set_num_threads(threads);
            CHECK(kernels::affine_nt(x, w, bias) == ref::affine_nt(x, w, bias));
            CHECK(kernels::affine_nt(x, w, {}) == ref::affine_nt(x, w, {}));
            CHECK(kernels::matmul_tn(g, x) == ref::matmul_tn(g, x));
            CHECK(kernels::column_sums(x) == ref::column_sums(x));
            CHECK(kernels::row_norms(x) == ref::row_norms(x));
            CHECK(kernels::cosine_scores(x, pool) == ref::cosine_scores(x, pool));
            CHECK(kernels::class_sums(x, labels, C) == ref::class_sums(x, labels, C));
            Matrix a = g, b = g;
            kernels::softmax_rows(a);
            ref::softmax_rows(b);
            CHECK(a == b);
        }
    }
}

TEST_CASE("reference kernels against direct formulas") {
    const Matrix x = Matrix::from_rows({{1, 2}, {3, 4}});
    const Matrix w = Matrix::from_rows({{1, 0}, {0, 1}, {1, 1}});
    const std::vector<double> bias{0.5, 0, -1};
    CHECK(ref::affine_nt(x, w, bias) == Matrix::from_rows({{1.5, 2, 2}, {3.5, 4, 6}}));
    CHECK(ref::matmul_tn(Matrix::from_rows({{1, 0}, {1, 1}}), x) == Matrix::from_rows({{4, 6}, {3, 4}}));
    CHECK(ref::column_sums(x) == std::vector<double>{4, 6});
    CHECK(ref::row_norms(Matrix::from_rows({{3, 4}})) == std::vector<double>{5});
    CHECK(ref::class_sums(x, std::vector<std::size_t>{1, 1}, 2) == Matrix::from_rows({{0, 0}, {4, 6}}));

    Matrix big = Matrix::from_rows({{1000, 1000}, {0, std::log(3.0)}});
    ref::softmax_rows(big);
    CHECK(big(0, 0) == 0.5);
    CHECK(big(1, 1) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(kernels::max_threads() >= 1);
}
