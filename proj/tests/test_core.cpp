#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "csls/io.hpp"
#include "csls/json.hpp"
#include "csls/labels.hpp"
#include "csls/matrix.hpp"
#include "csls/rng.hpp"
#include "helpers.hpp"

using namespace csls;
using testing::error_kind_of;

TEST_CASE("matrix construction validates shape and finiteness") {
    Matrix m(2, 3, 1.5);
    CHECK(m.rows() == 2);
    CHECK(m.cols() == 3);
    CHECK(m(1, 2) == 1.5);
    CHECK(error_kind_of([] { Matrix(2, 2, std::vector<double>{1, 2, 3}); }) == ErrorKind::data);
    CHECK(error_kind_of([] { Matrix(1, 1, std::vector<double>{std::nan("")}); }) == ErrorKind::data);
    CHECK(error_kind_of([] { Matrix(1, 1, std::numeric_limits<double>::infinity()); }) == ErrorKind::data);
    CHECK(error_kind_of([] { Matrix::from_rows({{1, 2}, {3}}); }) == ErrorKind::data);
}

TEST_CASE("label set counts and range checks") {
    const LabelSet y({0, 2, 2, 1}, 3);
    CHECK(y.counts()[0] == 1);
    CHECK(y.counts()[1] == 1);
    CHECK(y.counts()[2] == 2);
    CHECK(LabelSet::infer({0, 4}).num_classes() == 5);
    CHECK(error_kind_of([] { LabelSet({1}, 1); }) == ErrorKind::data);
    const LabelSet sub = y.subset(std::vector<std::size_t>{1, 2});
    CHECK(sub.size() == 2);
    CHECK(sub.counts()[2] == 2);
}

TEST_CASE("one_hot places a single unit per row") {
    const SoftLabels h = one_hot(LabelSet({0, 2}, 3));
    CHECK(h.matrix() == Matrix::from_rows({{1, 0, 0}, {0, 0, 1}}));

    Rng rng(3);
    const auto labels = testing::random_labels(rng, 40, 6);
    const SoftLabels big = one_hot(LabelSet(labels, 6));
    for (std::size_t n = 0; n < labels.size(); ++n) CHECK(argmax(big.row(n)) == labels[n]);
}

TEST_CASE("soft labels reject rows that are not distributions") {
    CHECK(error_kind_of([] { SoftLabels(Matrix::from_rows({{0.5, 0.6}})); }) == ErrorKind::data);
    CHECK(error_kind_of([] { SoftLabels(Matrix::from_rows({{1.5, -0.5}})); }) == ErrorKind::data);
    const SoftLabels ok = SoftLabels::normalized(Matrix::from_rows({{0.50001, 0.5}}), 1e-4);
    CHECK(ok(0, 0) + ok(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("argmax breaks ties toward the lower index") {
    const std::vector<double> v{0.2, 0.4, 0.4};
    CHECK(argmax(v) == 1);
}

TEST_CASE("csv parsing") {
    CHECK(io::parse_csv_matrix("1.0,2.0\n3.0,4.0") == Matrix::from_rows({{1, 2}, {3, 4}}));
    CHECK(io::parse_csv_matrix("1,0\n0,1\n") == Matrix::from_rows({{1, 0}, {0, 1}}));

    try {
        io::parse_csv_matrix("1,2\n3,4,5\n");
        FAIL("ragged rows must be rejected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::data);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(error_kind_of([] { io::parse_csv_matrix("1,abc\n"); }) == ErrorKind::data);
    CHECK(error_kind_of([] { io::parse_csv_matrix("1,nan\n"); }) == ErrorKind::data);
}

TEST_CASE("csv round trip keeps 17 significant digits") {
    Rng rng(11);
    Matrix m(5, 4);
    for (double& v : m.values()) v = rng.normal() * 1e3;
    CHECK(io::parse_csv_matrix(io::format_csv_matrix(m)) == m);
    CHECK(io::format_csv_matrix(Matrix::from_rows({{1, 0}, {0, 1}})) == "1,0\n0,1\n");
}

TEST_CASE("binary format layout and round trip") {
    const Matrix zeros(3, 1);
    const auto bytes = io::encode_binary_matrix(zeros);
    CHECK(bytes.size() == io::kHeaderBytes + 12);
    CHECK(bytes.size() == 25);
    CHECK(std::memcmp(bytes.data(), "CSLS", 4) == 0);
    CHECK(bytes[4] == 0x01);
    CHECK(bytes[5] == 3);
    CHECK(bytes[9] == 1);

    // Values representable in binary32 survive exactly.
    Rng rng(5);
    Matrix m(7, 3);
    for (double& v : m.values()) v = static_cast<double>(static_cast<float>(rng.normal()));
    CHECK(io::decode_binary_matrix(io::encode_binary_matrix(m)) == m);

    const auto dir = testing::scratch_dir("binary");
    io::write_matrix(m, dir / "m.bin", io::MatrixFormat::binary);
    CHECK(io::read_matrix(dir / "m.bin", io::MatrixFormat::binary) == m);
    CHECK(io::format_for_path("x.bin") == io::MatrixFormat::binary);
    CHECK(io::format_for_path("x.csv") == io::MatrixFormat::csv);
}

TEST_CASE("binary decoding reports the failing position") {
    auto bytes = io::encode_binary_matrix(Matrix(2, 2, 1.0));

    auto bad_magic = bytes;
    bad_magic[0] = 'X';
    CHECK(error_kind_of([&] { io::decode_binary_matrix(bad_magic); }) == ErrorKind::data);

    auto bad_version = bytes;
    bad_version[4] = 2;
    CHECK(error_kind_of([&] { io::decode_binary_matrix(bad_version); }) == ErrorKind::data);

    auto truncated = bytes;
    truncated.resize(truncated.size() - 3);
    try {
        io::decode_binary_matrix(truncated);
        FAIL("truncation must be rejected");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }

    auto trailing = bytes;
    trailing.push_back(0);
    CHECK(error_kind_of([&] { io::decode_binary_matrix(trailing); }) == ErrorKind::data);

    auto nan_payload = bytes;
    const float nan = std::numeric_limits<float>::quiet_NaN();
    std::memcpy(nan_payload.data() + io::kHeaderBytes, &nan, 4);
    CHECK(error_kind_of([&] { io::decode_binary_matrix(nan_payload); }) == ErrorKind::data);
}

TEST_CASE("values that overflow binary32 are rejected before writing") {
    CHECK(error_kind_of([] { io::encode_binary_matrix(Matrix(1, 1, 1e300)); }) == ErrorKind::data);
}

TEST_CASE("label and index files") {
    const auto dir = testing::scratch_dir("labels");
    io::write_labels(LabelSet({2, 0, 1}, 4), dir / "y.csv");
    const LabelSet back = io::read_labels(dir / "y.csv", 4);
    CHECK(back == LabelSet({2, 0, 1}, 4));
    CHECK(io::read_labels(dir / "y.csv", std::nullopt).num_classes() == 3);
    CHECK(error_kind_of([&] { io::read_labels(dir / "y.csv", 2); }) == ErrorKind::data);

    io::write_text(dir / "bad.csv", "1\n-2\n");
    CHECK(error_kind_of([&] { io::read_labels(dir / "bad.csv", 4); }) == ErrorKind::data);

    const std::vector<std::size_t> idx{5, 1, 9};
    io::write_indices(idx, dir / "i.csv");
    CHECK(io::read_indices(dir / "i.csv") == idx);
}

TEST_CASE("double formatting parses back exactly") {
    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const double v = rng.normal() * std::pow(10.0, static_cast<int>(rng.below(20)) - 10);
        CHECK(std::stod(io::format_double(v)) == v);
    }
    CHECK(io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("json emitter keeps key order and renders floats at full precision") {
    Json doc;
    doc["b"] = 0.1;
    doc["a"] = std::vector<int>{1, 2};
    doc["n"] = std::nan("");
    const std::string text = dump_json(doc);
    CHECK(text.find("\"b\"") < text.find("\"a\""));
    CHECK(text.find("0.10000000000000001") != std::string::npos);
    CHECK(text.find("null") != std::string::npos);
    CHECK(text.back() == '\n');
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    Rng s1 = Rng::stream(1, 1), s2 = Rng::stream(1, 2);
    CHECK(s1.next_u64() != s2.next_u64());

    Rng u(7);
    for (int i = 0; i < 1000; ++i) {
        const double x = u.uniform();
        CHECK(x >= 0.0);
        CHECK(x < 1.0);
        CHECK(u.below(3) < 3);
    }

    Rng g(9);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double x = g.normal();
        sum += x;
        sq += x * x;
    }
    CHECK(std::abs(sum / n) < 0.05);
    CHECK(std::abs(sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation") {
    Rng rng(4);
    std::vector<std::size_t> v(50);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
    rng.shuffle(std::span<std::size_t>(v));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(sorted[i] == i);
}
