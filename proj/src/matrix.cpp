#include "infedit/matrix.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace infedit {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != r * c) {
        throw std::invalid_argument("Matrix: " + std::to_string(r) + "x" + std::to_string(c) +
                                    " expects " + std::to_string(r * c) + " values, got " +
                                    std::to_string(data.size()));
    }
}

Matrix Matrix::full(std::size_t r, std::size_t c, double value) {
    Matrix m(r, c);
    for (double& v : m.data) v = value;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) {
        throw std::invalid_argument("matmul: inner dimensions disagree, " + std::to_string(a.cols) +
                                    " vs " + std::to_string(b.rows));
    }
    Matrix out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a.at(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols; ++j) {
                out.at(i, j) += aik * b.at(k, j);
            }
        }
    }
    return out;
}

Matrix transpose(const Matrix& a) {
    Matrix out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) {
            out.at(j, i) = a.at(i, j);
        }
    }
    return out;
}

bool same_dims(const Matrix& a, const Matrix& b) { return a.rows == b.rows && a.cols == b.cols; }

bool bitwise_equal(const Matrix& a, const Matrix& b) {
    if (!same_dims(a, b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!same_dims(a, b)) {
        throw std::invalid_argument("max_abs_diff: matrix dimensions disagree");
    }
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    }
    return m;
}

void require_finite(const Matrix& a, const char* context) {
    for (double v : a.data) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(std::string(context) + ": matrix contains a non-finite value");
        }
    }
}

Matrix softmax_rows(const Matrix& logits) {
    require_finite(logits, "softmax_rows");
    if (logits.cols == 0 || logits.rows == 0) {
        throw std::invalid_argument("softmax_rows: empty matrix");
    }
    Matrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        double row_max = logits.at(i, 0);
        for (std::size_t j = 1; j < logits.cols; ++j) row_max = std::max(row_max, logits.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) {
            const double e = std::exp(logits.at(i, j) - row_max);
            out.at(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < logits.cols; ++j) out.at(i, j) /= sum;
    }
    return out;
}

}  // namespace infedit
