#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "activehne/error.hpp"

namespace ahne {

// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Compressed sparse row matrix. Column indices are strictly increasing
// within each row.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // length rows + 1
    std::vector<std::size_t> col_idx;
    std::vector<double> values;

    SparseMatrix() = default;
    SparseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return values.size(); }

    // Builds from (row, col, value) triplets; duplicates are summed.
    static SparseMatrix from_triplets(
        std::size_t rows, std::size_t cols,
        std::vector<std::tuple<std::size_t, std::size_t, double>> triplets);

    SparseMatrix transposed() const;
    DenseMatrix to_dense() const;
};

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);

// s * x with s sparse.
DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x);

// Each row with positive sum is divided by its sum; zero rows stay zero.
// Negative entries are rejected.
SparseMatrix row_normalize(const SparseMatrix& a);

// Row-wise softmax with per-row max subtraction.
DenseMatrix softmax_rows(const DenseMatrix& x);

DenseMatrix relu(const DenseMatrix& x);
// 1 where x > 0, else 0.
DenseMatrix relu_mask(const DenseMatrix& x);

struct AdamState {
    DenseMatrix m;  // first moment
    DenseMatrix v;  // second moment
    long step = 0;
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(std::size_t rows, std::size_t cols, double learning_rate = 0.01)
        : m(rows, cols), v(rows, cols), lr(learning_rate) {}
};

// In-place Adam update with bias correction.
void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state);

double euclidean_distance(std::span<const double> x, std::span<const double> y);

// Distance between row i of a and row j of b.
double row_distance(const DenseMatrix& a, std::size_t i, const DenseMatrix& b, std::size_t j);

double frobenius_norm_sq(const DenseMatrix& a);

}  // namespace ahne
