#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "csls/error.hpp"
#include "csls/labels.hpp"
#include "csls/matrix.hpp"
#include "oracles.hpp"

namespace testing {

inline csls::Matrix to_matrix(const oracle::Mat& m) { return csls::Matrix::from_rows(m); }

inline oracle::Mat to_rows(const csls::Matrix& m) {
    oracle::Mat out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) out[r].assign(m.row(r).begin(), m.row(r).end());
    return out;
}

inline double max_abs_diff(const csls::Matrix& a, const oracle::Mat& b) {
    double worst = 0.0;
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) worst = std::max(worst, std::abs(a(r, c) - b[r][c]));
    }
    return worst;
}

inline std::vector<std::size_t> random_labels(csls::Rng& rng, std::size_t n, std::size_t classes) {
    std::vector<std::size_t> y(n);
    for (auto& v : y) v = rng.below(classes);
    return y;
}

// Every class appears at least once (first C rows are 0..C-1, then random).
inline std::vector<std::size_t> covering_labels(csls::Rng& rng, std::size_t n, std::size_t classes) {
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = i < classes ? i : rng.below(classes);
    return y;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("csls_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

template <typename F>
csls::ErrorKind error_kind_of(F&& f) {
    try {
        f();
    } catch (const csls::Error& e) {
        return e.kind();
    }
    throw std::logic_error("expected a csls::Error");
}

}  // namespace testing
