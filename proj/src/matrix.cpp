#include "activehne/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace ahne {

SparseMatrix SparseMatrix::from_triplets(
    std::size_t rows, std::size_t cols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
    for (const auto& [r, c, v] : triplets) {
        if (r >= rows || c >= cols)
            throw DataError("sparse triplet index out of bounds");
        if (!std::isfinite(v))
            throw NumericError("non-finite sparse value");
    }
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    SparseMatrix s(rows, cols);
    s.col_idx.reserve(triplets.size());
    s.values.reserve(triplets.size());
    std::vector<std::size_t> per_row(rows, 0);
    for (std::size_t i = 0; i < triplets.size(); ++i) {
        const auto& [r, c, v] = triplets[i];
        if (i > 0 && std::get<0>(triplets[i - 1]) == r && std::get<1>(triplets[i - 1]) == c) {
            s.values.back() += v;  // duplicate entry: sum
            continue;
        }
        s.col_idx.push_back(c);
        s.values.push_back(v);
        ++per_row[r];
    }
    for (std::size_t r = 0; r < rows; ++r)
        s.row_ptr[r + 1] = s.row_ptr[r] + per_row[r];
    return s;
}

SparseMatrix SparseMatrix::transposed() const {
    SparseMatrix t(cols, rows);
    std::vector<std::size_t> count(cols, 0);
    for (std::size_t c : col_idx) ++count[c];
    t.row_ptr.assign(cols + 1, 0);
    for (std::size_t i = 0; i < cols; ++i) t.row_ptr[i + 1] = t.row_ptr[i] + count[i];
    t.col_idx.resize(nnz());
    t.values.resize(nnz());
    std::vector<std::size_t> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
            std::size_t pos = next[col_idx[k]]++;
            t.col_idx[pos] = r;
            t.values[pos] = values[k];
        }
    }
    return t;
}

DenseMatrix SparseMatrix::to_dense() const {
    DenseMatrix d(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k)
            d(r, col_idx[k]) = values[k];
    return d;
}

DenseMatrix dense_matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw Error("dense_matmul: dimension mismatch");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* arow = a.data.data() + i * a.cols;
        double* crow = c.data.data() + i * c.cols;
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = arow[k];
            if (aik == 0.0) continue;
            const double* brow = b.data.data() + k * b.cols;
            for (std::size_t j = 0; j < b.cols; ++j)
                crow[j] += aik * brow[j];
        }
    }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j)
            t(j, i) = a(i, j);
    return t;
}

DenseMatrix spmm(const SparseMatrix& s, const DenseMatrix& x) {
    if (s.cols != x.rows)
        throw Error("spmm: dimension mismatch");
    DenseMatrix y(s.rows, x.cols);
    for (std::size_t r = 0; r < s.rows; ++r) {
        double* yrow = y.data.data() + r * y.cols;
        for (std::size_t k = s.row_ptr[r]; k < s.row_ptr[r + 1]; ++k) {
            double v = s.values[k];
            const double* xrow = x.data.data() + s.col_idx[k] * x.cols;
            for (std::size_t j = 0; j < x.cols; ++j)
                yrow[j] += v * xrow[j];
        }
    }
    return y;
}

SparseMatrix row_normalize(const SparseMatrix& a) {
    SparseMatrix p = a;
    for (std::size_t r = 0; r < a.rows; ++r) {
        double sum = 0.0;
        for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k) {
            if (a.values[k] < 0.0)
                throw DataError("row_normalize: negative entry");
            sum += a.values[k];
        }
        if (sum > 0.0)
            for (std::size_t k = a.row_ptr[r]; k < a.row_ptr[r + 1]; ++k)
                p.values[k] /= sum;
    }
    return p;
}

DenseMatrix softmax_rows(const DenseMatrix& x) {
    DenseMatrix y(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols; ++j) mx = std::max(mx, x(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            double e = std::exp(x(i, j) - mx);
            y(i, j) = e;
            sum += e;
        }
        for (std::size_t j = 0; j < x.cols; ++j) y(i, j) /= sum;
    }
    return y;
}

DenseMatrix relu(const DenseMatrix& x) {
    DenseMatrix y = x;
    for (double& v : y.data) v = std::max(0.0, v);
    return y;
}

DenseMatrix relu_mask(const DenseMatrix& x) {
    DenseMatrix m(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i)
        m.data[i] = x.data[i] > 0.0 ? 1.0 : 0.0;
    return m;
}

void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state) {
    if (!params.same_shape(grads) || !params.same_shape(state.m))
        throw Error("adam_step: shape mismatch");
    for (double g : grads.data)
        if (!std::isfinite(g))
            throw NumericError("adam_step: non-finite gradient");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.data.size(); ++i) {
        double g = grads.data[i];
        state.m.data[i] = state.beta1 * state.m.data[i] + (1.0 - state.beta1) * g;
        state.v.data[i] = state.beta2 * state.v.data[i] + (1.0 - state.beta2) * g * g;
        double mhat = state.m.data[i] / bc1;
        double vhat = state.v.data[i] / bc2;
        params.data[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

double euclidean_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw Error("euclidean_distance: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - y[i];
        s += d * d;
    }
    return std::sqrt(s);
}

double row_distance(const DenseMatrix& a, std::size_t i, const DenseMatrix& b, std::size_t j) {
    return euclidean_distance(a.row(i), b.row(j));
}

double frobenius_norm_sq(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return s;
}

}  // namespace ahne
