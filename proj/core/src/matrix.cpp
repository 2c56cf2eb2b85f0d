#include "graylearn/matrix.hpp"

#include <cmath>
#include <string>

#include "graylearn/errors.hpp"

namespace graylearn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw ShapeError("Matrix: data length " + std::to_string(data_.size()) + " != " +
                         std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void Matrix::append_row(std::span<const double> values) {
    if (rows_ == 0 && cols_ == 0) {
        cols_ = values.size();
    } else if (values.size() != cols_) {
        throw ShapeError("Matrix::append_row: expected " + std::to_string(cols_) + " values, got " +
                         std::to_string(values.size()));
    }
    data_.insert(data_.end(), values.begin(), values.end());
    ++rows_;
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

double Matrix::frobenius_norm() const {
    double sum = 0.0;
    for (double v : data_) sum += v * v;
    return std::sqrt(sum);
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.cols()) {
        throw ShapeError("matvec: matrix has " + std::to_string(a.cols()) + " columns, vector has " +
                         std::to_string(x.size()) + " entries");
    }
    std::vector<double> y(a.rows(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto row = a.row(r);
        double acc = 0.0;
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * x[c];
        y[r] = acc;
    }
    return y;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
    if (x.size() != a.rows()) {
        throw ShapeError("matvec_transposed: matrix has " + std::to_string(a.rows()) +
                         " rows, vector has " + std::to_string(x.size()) + " entries");
    }
    std::vector<double> y(a.cols(), 0.0);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double xr = x[r];
        if (xr == 0.0) continue;
        auto row = a.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) y[c] += row[c] * xr;
    }
    return y;
}

void add_outer(Matrix& a, std::span<const double> u, std::span<const double> v, double scale) {
    if (u.size() != a.rows() || v.size() != a.cols()) throw ShapeError("add_outer: shape mismatch");
    for (std::size_t r = 0; r < a.rows(); ++r) {
        const double ur = scale * u[r];
        if (ur == 0.0) continue;
        auto row = a.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += ur * v[c];
    }
}

}  // namespace graylearn
