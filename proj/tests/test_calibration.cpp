#include <doctest.h>

#include "csls/calibration.hpp"
#include "helpers.hpp"

using namespace csls;
using testing::error_kind_of;

namespace {

// n rows predicting class `cls` of C at confidence `conf`, the rest spread evenly.
Matrix rows_at(std::size_t n, std::size_t C, std::size_t cls, double conf) {
    Matrix m(n, C, (1.0 - conf) / double(C - 1));
    for (std::size_t r = 0; r < n; ++r) m(r, cls) = conf;
    return m;
}

SoftLabels stack(const std::vector<Matrix>& parts) {
    std::vector<std::vector<double>> rows;
    for (const Matrix& p : parts) {
        for (std::size_t r = 0; r < p.rows(); ++r) rows.emplace_back(p.row(r).begin(), p.row(r).end());
    }
    return SoftLabels(Matrix::from_rows(rows));
}

}  // namespace

TEST_CASE("bin edges are closed on the right") {
    const BinningConfig b{10};
    CHECK(b.bin_of(0.0) == 1);
    CHECK(b.bin_of(0.1) == 1);
    CHECK(b.bin_of(0.10000001) == 2);
    CHECK(b.bin_of(0.5) == 5);
    CHECK(b.bin_of(0.9) == 9);
    CHECK(b.bin_of(1.0) == 10);
    for (std::size_t B : {1, 3, 7, 10, 15}) {
        const BinningConfig cfg{B};
        for (std::size_t k = 1; k <= B; ++k) CHECK(cfg.bin_of(double(k) / double(B)) == k);
    }
}

TEST_CASE("four predictions at 0.9 with three correct") {
    const SoftLabels s(rows_at(4, 2, 0, 0.9));
    const LabelSet y({0, 0, 0, 1}, 2);
    const CalibrationReport r = calibrate(s, y, BinningConfig{10});
    const BinStat& b = r.at(0, 9);
    CHECK(b.count == 4);
    CHECK(*b.acc == doctest::Approx(0.75));
    CHECK(*b.conf == doctest::Approx(0.9));
    CHECK(r.delta[0] == doctest::Approx(-0.15).epsilon(1e-12));
    CHECK(r.delta[1] == 0.0);
    CHECK(r.unobserved == std::vector<std::size_t>{1});
    CHECK_FALSE(r.at(0, 1).acc.has_value());
}

TEST_CASE("an underconfident class has positive delta") {
    // 10 samples at confidence 0.6, 9 correct.
    const SoftLabels s(rows_at(10, 2, 1, 0.6));
    std::vector<std::size_t> labels(10, 1);
    labels[0] = 0;
    const CalibrationReport r = calibrate(s, LabelSet(labels, 2), BinningConfig{10});
    CHECK(r.delta[1] == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("perfect and all-wrong extremes") {
    const SoftLabels sure = one_hot(LabelSet({0, 1, 2}, 3));
    CHECK(ece(sure, LabelSet({0, 1, 2}, 3), BinningConfig{10}) == 0.0);
    const CalibrationReport r = calibrate(sure, LabelSet({0, 1, 2}, 3), BinningConfig{10});
    for (double d : r.delta) CHECK(d == 0.0);
    for (const BinStat& b : r.bins) {
        if (b.count > 0) CHECK(*b.acc == *b.conf);
    }
    CHECK(ece(sure, LabelSet({1, 2, 0}, 3), BinningConfig{10}) == 1.0);
}

TEST_CASE("true-class grouping") {
    // Sample 0: label 1 scored 0.3, predicted 0 -> class 1, conf 0.3, wrong.
    const SoftLabels s(Matrix::from_rows({{0.7, 0.3}, {0.2, 0.8}}));
    const CalibrationReport r = calibrate(s, LabelSet({1, 1}, 2), BinningConfig{10}, Grouping::true_class);
    CHECK(r.class_counts[1] == 2);
    CHECK(r.at(1, 3).count == 1);
    CHECK(*r.at(1, 3).acc == 0.0);
    CHECK(r.at(1, 8).count == 1);
    CHECK(*r.at(1, 8).acc == 1.0);
    CHECK(grouping_from_string("true-class") == Grouping::true_class);
    CHECK(to_string(Grouping::predicted_class) == "predicted-class");
    CHECK(error_kind_of([] { grouping_from_string("per-bin"); }) == ErrorKind::usage);
}

TEST_CASE("input checks") {
    const SoftLabels s(Matrix::from_rows({{0.5, 0.5}}));
    CHECK(error_kind_of([&] { calibrate(s, LabelSet({0, 1}, 2), BinningConfig{10}); }) == ErrorKind::data);
    CHECK(error_kind_of([&] { calibrate(s, LabelSet({0}, 3), BinningConfig{10}); }) == ErrorKind::data);
    CHECK(error_kind_of([&] { calibrate(s, LabelSet({0}, 2), BinningConfig{0}); }) == ErrorKind::usage);
}

TEST_CASE("calibration matches the naive oracle") {
    Rng rng(61);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t C = 2 + rng.below(7);
        const std::size_t N = 1 + rng.below(50);
        const std::size_t B = 1 + rng.below(15);
        const auto scores = oracle::random_distributions(rng, N, C);
        const auto labels = testing::random_labels(rng, N, C);
        const SoftLabels s(Matrix::from_rows(scores));
        const LabelSet y(labels, C);

        for (bool true_class : {false, true}) {
            const auto g = true_class ? Grouping::true_class : Grouping::predicted_class;
            const CalibrationReport r = calibrate(s, y, BinningConfig{B}, g);
            const auto rel = oracle::reliability(scores, labels, B, true_class);
            for (std::size_t i = 0; i < C; ++i) {
                std::size_t total = 0;
                for (std::size_t b = 1; b <= B; ++b) {
                    const BinStat& st = r.at(i, b);
                    const oracle::Bin& ob = rel[i][b - 1];
                    CHECK(st.count == ob.count);
                    total += st.count;
                    if (ob.count > 0) {
                        CHECK(std::abs(*st.acc - ob.acc) < 1e-9);
                        CHECK(std::abs(*st.conf - ob.conf) < 1e-9);
                    }
                }
                CHECK(total == r.class_counts[i]);
            }
            const auto d = oracle::ccece(rel);
            for (std::size_t i = 0; i < C; ++i) {
                CHECK(std::abs(r.delta[i] - d[i]) < 1e-9);
                CHECK(std::abs(r.delta[i]) <= r.class_ece[i] + 1e-12);
                CHECK(r.delta[i] >= -1.0);
                CHECK(r.delta[i] <= 1.0);
            }
            CHECK(std::abs(r.ece - oracle::ece(scores, labels, B)) < 1e-9);
            CHECK(r.ece >= 0.0);
        }
    }
}

TEST_CASE("delta is invariant to sample order") {
    Rng rng(67);
    const auto scores = oracle::random_distributions(rng, 40, 5);
    const auto labels = testing::random_labels(rng, 40, 5);
    std::vector<std::size_t> perm(40);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    oracle::Mat s2;
    std::vector<std::size_t> y2;
    for (std::size_t i : perm) {
        s2.push_back(scores[i]);
        y2.push_back(labels[i]);
    }
    const auto a = calibrate(SoftLabels(Matrix::from_rows(scores)), LabelSet(labels, 5), BinningConfig{10});
    const auto b = calibrate(SoftLabels(Matrix::from_rows(s2)), LabelSet(y2, 5), BinningConfig{10});
    for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(a.delta[i] - b.delta[i]) < 1e-12);
}

TEST_CASE("refining bins leaves delta unchanged for bin-centred confidences") {
    // Confidences at the centres of the B = 5 bins are also interior to the
    // B = 10 bins, and each coarse bin maps onto a single fine bin.
    std::vector<Matrix> parts;
    std::vector<std::size_t> labels;
    const double confs[] = {0.7, 0.9};
    const std::size_t correct[] = {5, 2};
    for (int k = 0; k < 2; ++k) {
        parts.push_back(rows_at(6, 2, 0, confs[k]));
        for (std::size_t i = 0; i < 6; ++i) labels.push_back(i < correct[k] ? 0 : 1);
    }
    const SoftLabels s = stack(parts);
    const auto coarse = calibrate(s, LabelSet(labels, 2), BinningConfig{5});
    const auto fine = calibrate(s, LabelSet(labels, 2), BinningConfig{10});
    CHECK(std::abs(coarse.delta[0] - fine.delta[0]) < 1e-12);
}

TEST_CASE("report json round trip and layout") {
    const SoftLabels s(rows_at(4, 3, 0, 0.9));
    const CalibrationReport r = calibrate(s, LabelSet({0, 0, 0, 1}, 3), BinningConfig{10});
    const Json doc = report_to_json(r);
    std::vector<std::string> keys;
    for (auto it = doc.begin(); it != doc.end(); ++it) keys.push_back(it.key());
    CHECK(keys == std::vector<std::string>{"grouping", "num_bins", "ece", "delta", "unobserved", "bins"});
    CHECK(doc["bins"].size() == 30);
    CHECK(doc["bins"][0]["acc"].is_null());
    CHECK(doc["bins"][8]["count"] == 4);
    const CalibrationReport back = report_from_json(Json::parse(dump_json(doc)));
    CHECK(back.delta == r.delta);
    CHECK(back.num_bins == 10);
    CHECK(back.unobserved == r.unobserved);
    CHECK(error_kind_of([] { report_from_json(Json::parse("{\"delta\": 3}")); }) == ErrorKind::data);
}

TEST_CASE("sampled-label predictor is calibrated") {
    Rng rng(71);
    const std::size_t C = 4, per_class = 2000;
    Matrix m(C * per_class, C);
    std::vector<std::size_t> labels;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t k = 0; k < per_class; ++k) {
            const std::size_t n = c * per_class + k;
            const double conf = 0.3 + 0.7 * rng.uniform();
            for (std::size_t j = 0; j < C; ++j) m(n, j) = j == c ? conf : (1.0 - conf) / double(C - 1);
            const bool hit = rng.uniform() < conf;
            labels.push_back(hit ? c : (c + 1 + rng.below(C - 1)) % C);
        }
    }
    const auto r = calibrate(SoftLabels(std::move(m)), LabelSet(labels, C), BinningConfig{10});
    for (double d : r.delta) CHECK(std::abs(d) < 0.05);
    CHECK(r.ece < 0.05);
}
