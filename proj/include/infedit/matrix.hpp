#pragma once

#include <cstddef>
#include <vector>

namespace infedit {

// Minimal dense row-major matrix of doubles; just enough linear algebra for
// the attention operators.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    static Matrix zeros(std::size_t r, std::size_t c) { return Matrix(r, c); }
    static Matrix full(std::size_t r, std::size_t c, double value);

    std::size_t numel() const { return data.size(); }
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
bool same_dims(const Matrix& a, const Matrix& b);
bool bitwise_equal(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);
void require_finite(const Matrix& a, const char* context);

// Row-wise softmax, the numerically shifted form; every output row sums to 1.
Matrix softmax_rows(const Matrix& logits);

}  // namespace infedit
