#pragma once
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "gsinfonce/error.hpp"

namespace gsinfonce {

inline constexpr double kZeroNormThreshold = 1e-12;

// Dense row-major matrix of embedding coordinates; one row per sentence or
// noise vector. All arithmetic in this library is double precision.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;

    // Zero-initialized rows x dim matrix.
    EmbeddingMatrix(std::size_t rows, std::size_t dim)
        : rows_(rows), dim_(dim), data_(rows * dim, 0.0) {
        if (dim == 0) {
            throw GsError(ErrorKind::InvalidConfig, "embedding dim must be >= 1");
        }
    }

    // Adopts row-major data; rejects size mismatches and non-finite entries.
    EmbeddingMatrix(std::size_t rows, std::size_t dim, std::vector<double> data)
        : rows_(rows), dim_(dim), data_(std::move(data)) {
        if (dim == 0) {
            throw GsError(ErrorKind::InvalidConfig, "embedding dim must be >= 1");
        }
        if (data_.size() != rows * dim) {
            throw GsError(ErrorKind::DimensionMismatch,
                          "data length " + std::to_string(data_.size()) +
                              " != rows*dim " + std::to_string(rows * dim));
        }
        for (double v : data_) {
            if (!std::isfinite(v)) {
                throw GsError(ErrorKind::NonFiniteInput,
                              "non-finite entry in embedding matrix");
            }
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t dim() const noexcept { return dim_; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dim_, dim_};
    }
    std::span<double> row(std::size_t i) {
        return {data_.data() + i * dim_, dim_};
    }

    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    bool all_finite() const noexcept {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    std::size_t rows_ = 0;
    std::size_t dim_ = 1;
    std::vector<double> data_;
};

// N x N (or N x K) matrix of cosine similarities, clamped to [-1, 1].
class SimilarityMatrix {
public:
    SimilarityMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows * cols) {
            throw GsError(ErrorKind::DimensionMismatch,
                          "similarity values length != rows*cols");
        }
        constexpr double slack = 1e-9;
        for (double& v : values_) {
            if (!(v >= -1.0 - slack && v <= 1.0 + slack)) {
                throw GsError(ErrorKind::NonFiniteInput,
                              "similarity value outside [-1,1] slack: " +
                                  std::to_string(v));
            }
            v = std::clamp(v, -1.0, 1.0);
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    double at(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> values_;
};

namespace detail {

// Single accumulation kernel shared by every cosine path. Keeping one loop
// order makes cosine_similarity and similarity_matrix agree bit-for-bit.
inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// Single sqrt of the product keeps cosine(v, v) exactly 1.0: the dot loop
// gives d == na2 == nb2 bit-for-bit and IEEE sqrt(fl(x*x)) == x.
inline double cosine_from_parts(double d, double na2, double nb2) {
    return std::clamp(d / std::sqrt(na2 * nb2), -1.0, 1.0);
}

} // namespace detail

// Cosine similarity of two vectors, clamped to [-1, 1]. A norm below 1e-12
// is an error: cosine is undefined at zero and a silent 0 would corrupt
// downstream loss gradients.
inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw GsError(ErrorKind::DimensionMismatch,
                      "vector lengths differ: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()));
    }
    const double na2 = detail::dot(a, a);
    const double nb2 = detail::dot(b, b);
    if (std::sqrt(na2) < kZeroNormThreshold || std::sqrt(nb2) < kZeroNormThreshold) {
        throw GsError(ErrorKind::ZeroNorm, "zero-norm vector in cosine similarity");
    }
    return detail::cosine_from_parts(detail::dot(a, b), na2, nb2);
}

// Entry (i,j) = cosine_similarity(A.row(i), B.row(j)), computed with the
// same kernel and arithmetic order.
inline SimilarityMatrix similarity_matrix(const EmbeddingMatrix& a,
                                          const EmbeddingMatrix& b) {
    if (a.dim() != b.dim()) {
        throw GsError(ErrorKind::DimensionMismatch,
                      "embedding dims differ: " + std::to_string(a.dim()) + " vs " +
                          std::to_string(b.dim()));
    }
    std::vector<double> na2(a.rows()), nb2(b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        na2[i] = detail::dot(a.row(i), a.row(i));
        if (std::sqrt(na2[i]) < kZeroNormThreshold) {
            throw GsError(ErrorKind::ZeroNorm,
                          "zero-norm row " + std::to_string(i) + " in left matrix");
        }
    }
    for (std::size_t j = 0; j < b.rows(); ++j) {
        nb2[j] = detail::dot(b.row(j), b.row(j));
        if (std::sqrt(nb2[j]) < kZeroNormThreshold) {
            throw GsError(ErrorKind::ZeroNorm,
                          "zero-norm row " + std::to_string(j) + " in right matrix");
        }
    }
    std::vector<double> values(a.rows() * b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < b.rows(); ++j) {
            values[i * b.rows() + j] =
                detail::cosine_from_parts(detail::dot(a.row(i), b.row(j)), na2[i], nb2[j]);
        }
    }
    return SimilarityMatrix(a.rows(), b.rows(), std::move(values));
}

inline double row_norm(std::span<const double> v) {
    return std::sqrt(detail::dot(v, v));
}

} // namespace gsinfonce
