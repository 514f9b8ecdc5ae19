#pragma once
#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "gsinfonce/encoder.hpp"
#include "gsinfonce/error.hpp"
#include "gsinfonce/matrix.hpp"
#include "gsinfonce/rng.hpp"
#include "gsinfonce/vocab.hpp"

namespace gsinfonce {

// The batch-size probe: how the mean cosine similarity of each sentence's
// top-k in-batch neighbours grows with the batch size.

struct ProbeConfig {
    std::vector<std::size_t> batch_sizes{8, 16, 32, 64, 128, 256, 512};
    std::size_t repeats = 100;
    std::size_t top_k = 4;
    std::uint64_t seed = 42;
    // synthetic-clustered source
    std::size_t cluster_count = 50;
    double cluster_spread = 0.3;
    std::size_t dim = 64;
};

struct ProbeReport {
    std::vector<std::size_t> batch_sizes;
    std::size_t top_k = 0;
    // means[size_index][rank], rank 0 = closest neighbour
    std::vector<std::vector<double>> means;
};

// Anything that can produce a deterministic batch of embeddings from a
// derived seed.
class BatchSource {
public:
    virtual ~BatchSource() = default;
    virtual EmbeddingMatrix draw(std::uint64_t batch_seed, std::size_t n) const = 0;
};

namespace detail {
inline constexpr std::uint64_t kTagCenters = 0x70C5;
inline constexpr std::uint64_t kTagPick = 0x70C6;
inline constexpr std::uint64_t kTagJitter = 0x70C7;
inline constexpr std::uint64_t kTagRepeat = 0x70C8;
inline constexpr std::uint64_t kTagSize = 0x70C9;
inline constexpr std::uint64_t kJitterRetryStride = 1ULL << 40;
} // namespace detail

// Unit-normalized draws of (cluster center + spread * standard normal);
// centers are standard normal, fixed per seed.
class SyntheticClusteredSource : public BatchSource {
public:
    SyntheticClusteredSource(std::size_t cluster_count, double spread, std::size_t dim,
                             std::uint64_t seed)
        : spread_(spread), centers_(cluster_count, dim) {
        if (cluster_count == 0 || dim == 0) {
            throw GsError(ErrorKind::InvalidConfig,
                          "cluster_count and dim must be >= 1");
        }
        if (spread < 0.0) {
            throw GsError(ErrorKind::InvalidConfig, "cluster_spread must be >= 0");
        }
        const std::uint64_t center_seed = rng::derive(seed, detail::kTagCenters);
        for (std::size_t i = 0; i < centers_.data().size(); ++i) {
            centers_.data()[i] = rng::normal_at(center_seed, i);
        }
    }

    EmbeddingMatrix draw(std::uint64_t batch_seed, std::size_t n) const override {
        const std::size_t d = centers_.dim();
        const std::uint64_t pick_seed = rng::derive(batch_seed, detail::kTagPick);
        const std::uint64_t jitter_seed = rng::derive(batch_seed, detail::kTagJitter);
        EmbeddingMatrix out(n, d);
        for (std::size_t t = 0; t < n; ++t) {
            const std::size_t cluster =
                rng::uniform_index_at(pick_seed, t, centers_.rows());
            const auto center = centers_.row(cluster);
            auto row = out.row(t);
            for (std::uint64_t attempt = 0;; ++attempt) {
                if (attempt >= 64) {
                    throw GsError(ErrorKind::InvalidConfig,
                                  "source cannot produce a nonzero draw");
                }
                const std::uint64_t base = attempt * detail::kJitterRetryStride;
                for (std::size_t c = 0; c < d; ++c) {
                    row[c] = center[c] +
                             spread_ * rng::normal_at(jitter_seed, base + t * d + c);
                }
                const double norm = row_norm(row);
                if (norm >= kZeroNormThreshold) {
                    for (std::size_t c = 0; c < d; ++c) row[c] /= norm;
                    break;
                }
            }
        }
        return out;
    }

private:
    double spread_;
    EmbeddingMatrix centers_;
};

// Draws inference-mode encodings of distinct corpus sentences under a
// trained checkpoint. Distinct within a batch (a duplicate sentence would
// fake a perfect neighbour); batches are independent across draws.
class EncodedCorpusSource : public BatchSource {
public:
    EncodedCorpusSource(EncoderParams params, Vocabulary vocab,
                        std::vector<std::string> sentences)
        : params_(std::move(params)), vocab_(std::move(vocab)) {
        for (const auto& s : sentences) tokens_.push_back(vocab_.encode(s));
    }

    EmbeddingMatrix draw(std::uint64_t batch_seed, std::size_t n) const override {
        if (tokens_.size() < n) {
            throw GsError(ErrorKind::SourceExhausted,
                          "corpus has " + std::to_string(tokens_.size()) +
                              " sentences, batch needs " + std::to_string(n));
        }
        // partial Fisher-Yates: first n elements of a seeded permutation
        std::vector<std::size_t> ids(tokens_.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j =
                i + rng::uniform_index_at(batch_seed, i, ids.size() - i);
            std::swap(ids[i], ids[j]);
        }
        TokenBatch batch;
        for (std::size_t i = 0; i < n; ++i) batch.sequences.push_back(tokens_[ids[i]]);
        return encode(params_, batch, 0, false);
    }

private:
    EncoderParams params_;
    Vocabulary vocab_;
    std::vector<std::vector<std::uint32_t>> tokens_;
};

// Top-k mean neighbour similarities of one batch: build the N x N cosine
// matrix, drop the diagonal, take each column's top_k values in descending
// order and average across columns per rank.
inline std::vector<double> probe_batch(const EmbeddingMatrix& batch, std::size_t top_k) {
    const std::size_t n = batch.rows();
    if (top_k == 0) {
        throw GsError(ErrorKind::InvalidConfig, "top_k must be >= 1");
    }
    if (n <= top_k) {
        throw GsError(ErrorKind::BatchTooSmall,
                      "batch of " + std::to_string(n) + " rows cannot rank top " +
                          std::to_string(top_k) + " neighbours");
    }
    const auto sim = similarity_matrix(batch, batch);
    std::vector<double> sums(top_k, 0.0);
    std::vector<double> column;
    column.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
        column.clear();
        for (std::size_t i = 0; i < n; ++i) {
            if (i != j) column.push_back(sim.at(i, j));
        }
        std::partial_sort(column.begin(), column.begin() + top_k, column.end(),
                          std::greater<>());
        for (std::size_t r = 0; r < top_k; ++r) sums[r] += column[r];
    }
    for (double& s : sums) s /= static_cast<double>(n);
    return sums;
}

// For each batch size: draw `repeats` independent batches, probe each and
// average per rank. Per-repeat seeds are pre-derived from (seed, size
// index, repeat), so results are schedule independent.
inline ProbeReport probe_sweep(const ProbeConfig& cfg, const BatchSource& source) {
    if (cfg.batch_sizes.empty()) {
        throw GsError(ErrorKind::InvalidConfig, "no batch sizes given");
    }
    if (cfg.repeats == 0) {
        throw GsError(ErrorKind::InvalidConfig, "repeats must be >= 1");
    }
    const std::size_t min_size =
        *std::min_element(cfg.batch_sizes.begin(), cfg.batch_sizes.end());
    if (cfg.top_k >= min_size) {
        throw GsError(ErrorKind::InvalidConfig,
                      "top_k " + std::to_string(cfg.top_k) +
                          " must be < smallest batch size " + std::to_string(min_size));
    }
    ProbeReport report;
    report.batch_sizes = cfg.batch_sizes;
    report.top_k = cfg.top_k;
    for (std::size_t si = 0; si < cfg.batch_sizes.size(); ++si) {
        const std::size_t n = cfg.batch_sizes[si];
        std::vector<double> acc(cfg.top_k, 0.0);
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            const std::uint64_t batch_seed =
                rng::derive(rng::derive(cfg.seed, detail::kTagSize, si),
                            detail::kTagRepeat, r);
            const auto values = probe_batch(source.draw(batch_seed, n), cfg.top_k);
            for (std::size_t k = 0; k < cfg.top_k; ++k) acc[k] += values[k];
        }
        for (double& v : acc) v /= static_cast<double>(cfg.repeats);
        report.means.push_back(std::move(acc));
    }
    return report;
}

} // namespace gsinfonce
