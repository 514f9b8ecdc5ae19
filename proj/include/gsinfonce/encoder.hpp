#pragma once
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "gsinfonce/error.hpp"
#include "gsinfonce/matrix.hpp"
#include "gsinfonce/rng.hpp"

namespace gsinfonce {

// Toy sentence encoder: mean-pooled token embeddings -> one affine layer ->
// tanh -> inverted dropout. Small on purpose; two forward passes of the same
// batch under different dropout seeds produce the positive pair.
struct EncoderParams {
    std::uint32_t vocab_size = 0;
    std::uint32_t dim = 0;
    std::vector<double> token_embeddings; // vocab_size x dim, row-major
    std::vector<double> hidden_weight;    // dim x dim, row-major
    std::vector<double> hidden_bias;      // dim
    double dropout_p = 0.1;

    bool all_finite() const noexcept {
        for (double v : token_embeddings)
            if (!std::isfinite(v)) return false;
        for (double v : hidden_weight)
            if (!std::isfinite(v)) return false;
        for (double v : hidden_bias)
            if (!std::isfinite(v)) return false;
        return std::isfinite(dropout_p);
    }
};

struct TokenBatch {
    std::vector<std::vector<std::uint32_t>> sequences;
};

struct ParamGrads {
    std::vector<double> token_embeddings;
    std::vector<double> hidden_weight;
    std::vector<double> hidden_bias;

    explicit ParamGrads(const EncoderParams& p)
        : token_embeddings(p.token_embeddings.size(), 0.0),
          hidden_weight(p.hidden_weight.size(), 0.0),
          hidden_bias(p.hidden_bias.size(), 0.0) {}
};

namespace detail {

struct EncodeCache {
    EmbeddingMatrix pooled;    // mean token embedding per sequence
    EmbeddingMatrix activated; // tanh output before dropout
    std::vector<std::uint8_t> mask; // kept units, n*dim, train mode only
};

inline void check_batch(const EncoderParams& params, const TokenBatch& batch) {
    for (std::size_t i = 0; i < batch.sequences.size(); ++i) {
        const auto& seq = batch.sequences[i];
        if (seq.empty()) {
            throw GsError(ErrorKind::EmptySequence,
                          "sequence " + std::to_string(i) + " is empty");
        }
        for (std::uint32_t id : seq) {
            if (id >= params.vocab_size) {
                throw GsError(ErrorKind::TokenOutOfRange,
                              "token id " + std::to_string(id) + " >= vocab size " +
                                  std::to_string(params.vocab_size));
            }
        }
    }
}

// Unit (i, r) is kept iff uniform(seed, i*dim + r) >= p; p = 0 keeps all.
inline bool keep_unit(std::uint64_t seed, std::size_t flat_index, double p) {
    return rng::uniform_at(seed, flat_index) >= p;
}

inline EmbeddingMatrix encode_impl(const EncoderParams& params, const TokenBatch& batch,
                                   std::uint64_t dropout_seed, bool train_mode,
                                   EncodeCache* cache) {
    check_batch(params, batch);
    const std::size_t n = batch.sequences.size();
    const std::size_t d = params.dim;
    EmbeddingMatrix out(n, d);
    if (cache) {
        cache->pooled = EmbeddingMatrix(n, d);
        cache->activated = EmbeddingMatrix(n, d);
        cache->mask.assign(train_mode ? n * d : 0, 1);
    }
    const double keep_prob = 1.0 - params.dropout_p;
    std::vector<double> pooled(d), act(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& seq = batch.sequences[i];
        std::fill(pooled.begin(), pooled.end(), 0.0);
        for (std::uint32_t id : seq) {
            const double* emb = params.token_embeddings.data() + std::size_t(id) * d;
            for (std::size_t c = 0; c < d; ++c) pooled[c] += emb[c];
        }
        const double inv_len = 1.0 / static_cast<double>(seq.size());
        for (std::size_t c = 0; c < d; ++c) pooled[c] *= inv_len;

        for (std::size_t r = 0; r < d; ++r) {
            double y = params.hidden_bias[r];
            const double* wrow = params.hidden_weight.data() + r * d;
            for (std::size_t c = 0; c < d; ++c) y += wrow[c] * pooled[c];
            act[r] = std::tanh(y);
        }

        auto out_row = out.row(i);
        for (std::size_t r = 0; r < d; ++r) {
            double v = act[r];
            if (train_mode) {
                const bool keep = keep_unit(dropout_seed, i * d + r, params.dropout_p);
                v = keep ? v / keep_prob : 0.0;
                if (cache) cache->mask[i * d + r] = keep ? 1 : 0;
            }
            out_row[r] = v;
        }
        if (cache) {
            std::copy(pooled.begin(), pooled.end(), cache->pooled.row(i).begin());
            std::copy(act.begin(), act.end(), cache->activated.row(i).begin());
        }
    }
    return out;
}

} // namespace detail

inline EmbeddingMatrix encode(const EncoderParams& params, const TokenBatch& batch,
                              std::uint64_t dropout_seed, bool train_mode) {
    return detail::encode_impl(params, batch, dropout_seed, train_mode, nullptr);
}

// The unsup-SimCSE mechanism: same batch encoded twice under independent
// dropout masks; row i of the two outputs forms the positive pair.
inline std::pair<EmbeddingMatrix, EmbeddingMatrix> encode_pair(
    const EncoderParams& params, const TokenBatch& batch, std::uint64_t seed1,
    std::uint64_t seed2) {
    return {encode(params, batch, seed1, true), encode(params, batch, seed2, true)};
}

// Uniform [-0.1, 0.1] embeddings and weights, zero bias.
inline EncoderParams init_params(std::size_t vocab_size, std::size_t dim,
                                 std::uint64_t init_seed, double dropout_p = 0.1) {
    if (vocab_size == 0 || dim == 0) {
        throw GsError(ErrorKind::InvalidConfig, "vocab_size and dim must be >= 1");
    }
    if (!(dropout_p >= 0.0 && dropout_p < 1.0)) {
        throw GsError(ErrorKind::InvalidConfig, "dropout_p must be in [0, 1)");
    }
    EncoderParams p;
    p.vocab_size = static_cast<std::uint32_t>(vocab_size);
    p.dim = static_cast<std::uint32_t>(dim);
    p.dropout_p = dropout_p;
    p.token_embeddings.resize(vocab_size * dim);
    p.hidden_weight.resize(dim * dim);
    p.hidden_bias.assign(dim, 0.0);
    std::size_t idx = 0;
    for (double& v : p.token_embeddings) {
        v = 0.1 * (2.0 * rng::uniform_at(init_seed, idx++) - 1.0);
    }
    for (double& v : p.hidden_weight) {
        v = 0.1 * (2.0 * rng::uniform_at(init_seed, idx++) - 1.0);
    }
    return p;
}

// Backward pass of encode() for one view: accumulates d(loss)/d(params)
// into `grads` given d(loss)/d(output rows). The dropout mask is replayed
// from the same seed the forward used.
inline void encode_backward(const EncoderParams& params, const TokenBatch& batch,
                            std::uint64_t dropout_seed, bool train_mode,
                            const EmbeddingMatrix& grad_output, ParamGrads& grads) {
    detail::check_batch(params, batch);
    const std::size_t n = batch.sequences.size();
    const std::size_t d = params.dim;
    if (grad_output.rows() != n || grad_output.dim() != d) {
        throw GsError(ErrorKind::DimensionMismatch, "grad_output shape mismatch");
    }
    detail::EncodeCache cache;
    (void)detail::encode_impl(params, batch, dropout_seed, train_mode, &cache);

    const double keep_prob = 1.0 - params.dropout_p;
    std::vector<double> g_y(d), g_e(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto g_out = grad_output.row(i);
        const auto act = cache.activated.row(i);
        const auto pooled = cache.pooled.row(i);
        for (std::size_t r = 0; r < d; ++r) {
            double g = g_out[r];
            if (train_mode) {
                g = cache.mask[i * d + r] ? g / keep_prob : 0.0;
            }
            g_y[r] = g * (1.0 - act[r] * act[r]);
        }
        for (std::size_t r = 0; r < d; ++r) {
            grads.hidden_bias[r] += g_y[r];
            double* gw = grads.hidden_weight.data() + r * d;
            for (std::size_t c = 0; c < d; ++c) gw[c] += g_y[r] * pooled[c];
        }
        for (std::size_t c = 0; c < d; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                acc += params.hidden_weight[r * d + c] * g_y[r];
            }
            g_e[c] = acc;
        }
        const auto& seq = batch.sequences[i];
        const double inv_len = 1.0 / static_cast<double>(seq.size());
        for (std::uint32_t id : seq) {
            double* ge = grads.token_embeddings.data() + std::size_t(id) * d;
            for (std::size_t c = 0; c < d; ++c) ge[c] += g_e[c] * inv_len;
        }
    }
}

// ---- checkpoint io ---------------------------------------------------
//
// Layout: 16-byte header (magic "GSIK", format version u32, vocab_size u32,
// dim u32, all little-endian), then little-endian IEEE-754 doubles:
// token_embeddings, hidden_weight, hidden_bias, dropout_p.

namespace detail {

inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32_le(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
    out.push_back(static_cast<char>((v >> 16) & 0xFF));
    out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_f64_le(std::string& out, double d) {
    const auto bits = std::bit_cast<std::uint64_t>(d);
    for (int b = 0; b < 8; ++b) {
        out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
           (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

inline double get_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= std::uint64_t(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

} // namespace detail

inline void save_checkpoint(const EncoderParams& params, const std::string& path) {
    std::string buf;
    buf.reserve(16 + 8 * (params.token_embeddings.size() + params.hidden_weight.size() +
                          params.hidden_bias.size() + 1));
    buf += "GSIK";
    detail::put_u32_le(buf, detail::kCheckpointVersion);
    detail::put_u32_le(buf, params.vocab_size);
    detail::put_u32_le(buf, params.dim);
    for (double v : params.token_embeddings) detail::put_f64_le(buf, v);
    for (double v : params.hidden_weight) detail::put_f64_le(buf, v);
    for (double v : params.hidden_bias) detail::put_f64_le(buf, v);
    detail::put_f64_le(buf, params.dropout_p);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !out.write(buf.data(), static_cast<std::streamsize>(buf.size()))) {
        throw GsError(ErrorKind::IoError, "cannot write checkpoint: " + path);
    }
}

inline EncoderParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw GsError(ErrorKind::IoError, "cannot open checkpoint: " + path);
    }
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || buf.compare(0, 4, "GSIK") != 0) {
        throw GsError(ErrorKind::IoError, "bad checkpoint magic: " + path);
    }
    const auto* p = reinterpret_cast<const unsigned char*>(buf.data());
    const std::uint32_t version = detail::get_u32_le(p + 4);
    if (version != detail::kCheckpointVersion) {
        throw GsError(ErrorKind::IoError,
                      "unsupported checkpoint version " + std::to_string(version));
    }
    EncoderParams params;
    params.vocab_size = detail::get_u32_le(p + 8);
    params.dim = detail::get_u32_le(p + 12);
    const std::size_t doubles = std::size_t(params.vocab_size) * params.dim +
                                std::size_t(params.dim) * params.dim + params.dim + 1;
    if (buf.size() != 16 + 8 * doubles) {
        throw GsError(ErrorKind::IoError, "checkpoint size mismatch: " + path);
    }
    const unsigned char* cur = p + 16;
    params.token_embeddings.resize(std::size_t(params.vocab_size) * params.dim);
    for (double& v : params.token_embeddings) { v = detail::get_f64_le(cur); cur += 8; }
    params.hidden_weight.resize(std::size_t(params.dim) * params.dim);
    for (double& v : params.hidden_weight) { v = detail::get_f64_le(cur); cur += 8; }
    params.hidden_bias.resize(params.dim);
    for (double& v : params.hidden_bias) { v = detail::get_f64_le(cur); cur += 8; }
    params.dropout_p = detail::get_f64_le(cur);
    return params;
}

} // namespace gsinfonce
