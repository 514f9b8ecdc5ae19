#pragma once
#include <cstdint>
#include <string>
#include <utility>

#include "gsinfonce/error.hpp"
#include "gsinfonce/matrix.hpp"
#include "gsinfonce/rng.hpp"

namespace gsinfonce {

// Parameters for one batch worth of Gaussian noise embeddings.
struct NoiseConfig {
    double mean = 0.0;
    double std_dev = 1.0;
    std::size_t count = 0; // M; 0 means no smoothing
    std::size_t dim = 1;
    std::uint64_t seed = 0;
};

namespace detail {
// Entry stream layout: attempt 0 of entry (k,j) sits at index k*dim+j;
// retries of a rejected row move to a disjoint high slice of the stream.
inline constexpr std::uint64_t kRetryStride = 1ULL << 40;
} // namespace detail

// Samples a count x dim matrix of i.i.d. N(mean, std_dev^2) draws.
// Deterministic: the value of entry (k,j) depends only on (seed, k, j),
// via the SplitMix64 counter stream and the Box-Muller transform (rng.hpp).
// A row whose norm lands below 1e-12 is resampled from a fresh stream
// slice so the loss never sees a zero-norm negative; configs that cannot
// produce a nonzero row (mean = 0, std_dev = 0) are rejected after a
// bounded number of attempts.
inline EmbeddingMatrix sample_noise(const NoiseConfig& cfg) {
    if (cfg.std_dev < 0.0) {
        throw GsError(ErrorKind::InvalidConfig,
                      "noise std_dev must be >= 0, got " + std::to_string(cfg.std_dev));
    }
    if (cfg.dim == 0) {
        throw GsError(ErrorKind::InvalidConfig, "noise dim must be >= 1");
    }
    EmbeddingMatrix out(cfg.count, cfg.dim);
    for (std::size_t k = 0; k < cfg.count; ++k) {
        auto row = out.row(k);
        for (std::uint64_t attempt = 0;; ++attempt) {
            if (attempt >= 64) {
                throw GsError(ErrorKind::InvalidConfig,
                              "noise config cannot produce a nonzero row " +
                                  std::to_string(k));
            }
            const std::uint64_t base = attempt * detail::kRetryStride;
            for (std::size_t j = 0; j < cfg.dim; ++j) {
                row[j] = cfg.mean +
                         cfg.std_dev * rng::normal_at(cfg.seed, base + k * cfg.dim + j);
            }
            if (row_norm(row) >= kZeroNormThreshold) break;
        }
    }
    return out;
}

// Mean and minimum Euclidean row norm; a diagnostic for how far noise rows
// sit from the data.
inline std::pair<double, double> noise_norm_stats(const EmbeddingMatrix& mat) {
    if (mat.rows() == 0) {
        throw GsError(ErrorKind::EmptyMatrix, "norm stats need at least one row");
    }
    double sum = 0.0;
    double min_norm = row_norm(mat.row(0));
    for (std::size_t k = 0; k < mat.rows(); ++k) {
        const double n = row_norm(mat.row(k));
        sum += n;
        if (n < min_norm) min_norm = n;
    }
    return {sum / static_cast<double>(mat.rows()), min_norm};
}

} // namespace gsinfonce
