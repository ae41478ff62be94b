#include "csls/matrix.hpp"

#include <cmath>
#include <string>

#include "csls/error.hpp"

namespace csls {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    if (!std::isfinite(fill)) fail_data("matrix fill value is not finite");
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        fail_data("matrix data length " + std::to_string(data_.size()) + " != " +
                  std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    require_finite("matrix");
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
    const std::size_t cols = rows.empty() ? 0 : rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols) {
            fail_data("ragged row " + std::to_string(r) + ": expected " + std::to_string(cols) +
                      " values, got " + std::to_string(rows[r].size()));
        }
        flat.insert(flat.end(), rows[r].begin(), rows[r].end());
    }
    return Matrix(rows.size(), cols, std::move(flat));
}

bool Matrix::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Matrix::require_finite(const char* what) const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            fail_data(std::string(what) + ": non-finite value at row " + std::to_string(i / cols_) +
                      ", column " + std::to_string(i % cols_));
        }
    }
}

}  // namespace csls
