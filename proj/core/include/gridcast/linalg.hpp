#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace gridcast {

// Dense row-major matrix. Problem sizes here are tens of rows, so no
// sparse machinery.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool operator==(const Matrix& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// Solves a.x = b by LU with partial pivoting; throws std::runtime_error on
// a singular system. `a` and `b` are consumed.
std::vector<double> solve_linear(Matrix a, std::vector<double> b);

}  // namespace gridcast
