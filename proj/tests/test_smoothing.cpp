#include <doctest.h>

#include "csls/smoothing.hpp"
#include "helpers.hpp"

using namespace csls;
using testing::error_kind_of;

namespace {

SimilarityMatrix with_modulated(const Matrix& sp) { return SimilarityMatrix{Matrix(sp.rows(), sp.cols()), sp, 0.0}; }

SmoothingConfig similarity_cfg(double eps, Orientation o = Orientation::row) {
    SmoothingConfig cfg;
    cfg.epsilon = eps;
    cfg.mode = SmoothingMode::similarity;
    cfg.orientation = o;
    return cfg;
}

Matrix random_row_stochastic(Rng& rng, std::size_t C) {
    return Matrix::from_rows(oracle::random_distributions(rng, C, C));
}

}  // namespace

TEST_CASE("uniform smoothing examples") {
    const SoftLabels y = one_hot(LabelSet({0, 1}, 2));
    CHECK(smooth_uniform(y, 0.0) == y);
    CHECK(smooth_uniform(one_hot(LabelSet({3}, 4)), 1.0).matrix() == Matrix(1, 4, 0.25));
    const SoftLabels s = smooth_uniform(y, 0.1);
    CHECK(s(0, 0) == doctest::Approx(0.95).epsilon(1e-15));
    CHECK(s(0, 1) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(error_kind_of([&] { smooth_uniform(y, 1.5); }) == ErrorKind::usage);
    CHECK(error_kind_of([&] { smooth_uniform(y, -0.1); }) == ErrorKind::usage);
}

TEST_CASE("similarity smoothing examples") {
    const Matrix sp = Matrix::from_rows({{0.7059, 0.2941}, {0.2941, 0.7059}});
    const SoftLabels y = one_hot(LabelSet({0}, 2));
    const SoftLabels s = smooth_similarity(y, with_modulated(sp), similarity_cfg(0.1));
    CHECK(s(0, 0) == doctest::Approx(0.97059).epsilon(1e-12));
    CHECK(s(0, 1) == doctest::Approx(0.02941).epsilon(1e-12));

    CHECK(smooth_similarity(y, with_modulated(sp), similarity_cfg(0.0)) == y);

    const SoftLabels u = smooth_similarity(one_hot(LabelSet({1}, 3)), with_modulated(Matrix(3, 3, 1.0 / 3.0)),
                                           similarity_cfg(1.0));
    for (std::size_t c = 0; c < 3; ++c) CHECK(u(0, c) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("similarity smoothing input checks") {
    const SoftLabels y = one_hot(LabelSet({0}, 2));
    SimilarityMatrix no_mod{Matrix(2, 2, 1.0), std::nullopt, 0.0};
    CHECK(error_kind_of([&] { smooth_similarity(y, no_mod, similarity_cfg(0.1)); }) == ErrorKind::data);
    CHECK(error_kind_of([&] { smooth_similarity(y, with_modulated(Matrix(3, 3, 1.0 / 3)), similarity_cfg(0.1)); }) ==
          ErrorKind::data);
    const SoftLabels soft(Matrix::from_rows({{0.5, 0.5}}));
    CHECK(error_kind_of([&] { smooth_uniform(soft, 0.1); }) == ErrorKind::data);
    CHECK(error_kind_of([&] { smooth(y, nullptr, similarity_cfg(0.1)); }) == ErrorKind::data);
}

TEST_CASE("smoothing matches the naive oracle in both orientations") {
    Rng rng(41);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t C = 2 + rng.below(7);
        const std::size_t N = 1 + rng.below(50);
        const auto labels = testing::random_labels(rng, N, C);
        const double eps = rng.uniform();
        const Matrix sp = random_row_stochastic(rng, C);
        const SoftLabels y = one_hot(LabelSet(labels, C));
        const auto sp_rows = testing::to_rows(sp);

        const SoftLabels r = smooth_similarity(y, with_modulated(sp), similarity_cfg(eps));
        CHECK(testing::max_abs_diff(r.matrix(), oracle::smooth_similarity(labels, sp_rows, eps, false)) < 1e-9);

        const SoftLabels c = smooth_similarity(y, with_modulated(sp), similarity_cfg(eps, Orientation::column_renormalized));
        CHECK(testing::max_abs_diff(c.matrix(), oracle::smooth_similarity(labels, sp_rows, eps, true)) < 1e-9);

        const SoftLabels u = smooth_uniform(y, eps);
        CHECK(testing::max_abs_diff(u.matrix(), oracle::smooth_uniform(labels, C, eps)) < 1e-9);
    }
}

TEST_CASE("smoothing properties") {
    Rng rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t C = 2 + rng.below(6);
        const auto labels = testing::random_labels(rng, 20, C);
        const Matrix sp = random_row_stochastic(rng, C);
        const SoftLabels y = one_hot(LabelSet(labels, C));
        const auto sim = with_modulated(sp);

        // The true class keeps at least 1 - eps at eps = 0.1 and stays the argmax.
        const SoftLabels s = smooth_similarity(y, sim, similarity_cfg(0.1));
        for (std::size_t n = 0; n < labels.size(); ++n) {
            CHECK(s(n, labels[n]) >= 0.9);
            CHECK(argmax(s.row(n)) == labels[n]);
        }

        // Affine in eps.
        const SoftLabels a = smooth_similarity(y, sim, similarity_cfg(0.0));
        const SoftLabels b = smooth_similarity(y, sim, similarity_cfg(1.0));
        const SoftLabels mid = smooth_similarity(y, sim, similarity_cfg(0.5));
        for (std::size_t n = 0; n < labels.size(); ++n) {
            for (std::size_t c = 0; c < C; ++c) CHECK(std::abs(mid(n, c) - 0.5 * (a(n, c) + b(n, c))) < 1e-12);
        }

        // A uniform S' gives uniform smoothing.
        const SoftLabels via_sim = smooth_similarity(y, with_modulated(Matrix(C, C, 1.0 / double(C))), similarity_cfg(0.3));
        CHECK(testing::max_abs_diff(via_sim.matrix(), testing::to_rows(smooth_uniform(y, 0.3).matrix())) < 1e-12);
    }
}

TEST_CASE("dispatch by mode") {
    const SoftLabels y = one_hot(LabelSet({1, 0}, 2));
    SmoothingConfig cfg;
    cfg.epsilon = 0.2;
    cfg.mode = SmoothingMode::uniform;
    CHECK(smooth(y, nullptr, cfg) == smooth_uniform(y, 0.2));
    const auto sim = with_modulated(Matrix::from_rows({{0.6, 0.4}, {0.1, 0.9}}));
    CHECK(smooth(y, &sim, similarity_cfg(0.2)) == smooth_similarity(y, sim, similarity_cfg(0.2)));
}
