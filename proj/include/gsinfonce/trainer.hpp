#pragma once
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "gsinfonce/encoder.hpp"
#include "gsinfonce/error.hpp"
#include "gsinfonce/evaluation.hpp"
#include "gsinfonce/loss.hpp"
#include "gsinfonce/noise.hpp"
#include "gsinfonce/rng.hpp"
#include "gsinfonce/vocab.hpp"

namespace gsinfonce {

// Seed streams derived off the master seed; child = rng::derive(master,
// tag, index). One documented scheme, no shared mutable generator.
namespace stream {
inline constexpr std::uint64_t kInit = 1;     // parameter init
inline constexpr std::uint64_t kShuffle = 2;  // per-epoch corpus order
inline constexpr std::uint64_t kDropout1 = 3; // per-step view-1 mask
inline constexpr std::uint64_t kDropout2 = 4; // per-step view-2 mask
inline constexpr std::uint64_t kNoise = 5;    // per-step noise batch
} // namespace stream

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t steps = 2000;
    double learning_rate = 0.05;
    GsLossConfig loss; // noise.count is the resolved M for every step
    std::size_t embed_dim = 32;
    double dropout_p = 0.1;
    std::string corpus_path;
    std::string validation_path; // empty: evaluate nothing, keep final params
    std::string checkpoint_path; // empty: do not write a checkpoint
    std::uint64_t master_seed = 42;
    std::size_t eval_every = 100; // 0: only the final step is evaluated
};

inline constexpr double kDefaultNoiseMultiplier = 3.0;

inline std::size_t resolve_noise_count(double multiplier, std::size_t batch_size) {
    if (multiplier < 0.0) {
        throw GsError(ErrorKind::InvalidConfig, "noise multiplier must be >= 0");
    }
    return static_cast<std::size_t>(
        std::llround(multiplier * static_cast<double>(batch_size)));
}

// Defaults: batch 64, lambda 1, tau 0.05, standard-normal noise with
// M = 3 x batch_size.
inline TrainConfig default_train_config() {
    TrainConfig cfg;
    cfg.loss.noise.count = resolve_noise_count(kDefaultNoiseMultiplier, cfg.batch_size);
    return cfg;
}

struct StepRecord {
    std::size_t step = 0; // 1-based
    double mean_loss = 0.0;
    double ms = 0.0; // wall time of the step
};

struct EvalRecord {
    std::size_t step = 0;
    double spearman = 0.0;
};

struct TrainLog {
    std::vector<StepRecord> steps;
    std::vector<EvalRecord> evals;
};

// Shapes observed by the most recent train_step; lets integration tests
// assert the loss consumed the configured noise batch.
struct StepTrace {
    std::size_t noise_rows = 0;
    std::size_t noise_dim = 0;
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (cfg.batch_size == 0) {
        throw GsError(ErrorKind::InvalidConfig, "batch_size must be >= 1");
    }
    if (cfg.steps == 0) {
        throw GsError(ErrorKind::InvalidConfig, "steps must be >= 1");
    }
    if (!(cfg.learning_rate > 0.0)) {
        throw GsError(ErrorKind::InvalidConfig, "learning_rate must be > 0");
    }
    if (cfg.embed_dim == 0) {
        throw GsError(ErrorKind::InvalidConfig, "embed_dim must be >= 1");
    }
    if (!(cfg.dropout_p >= 0.0 && cfg.dropout_p < 1.0)) {
        throw GsError(ErrorKind::InvalidConfig, "dropout_p must be in [0, 1)");
    }
}

// One SGD step: derive per-step seeds, encode the batch twice, sample a
// fresh noise batch, evaluate the smoothed loss, backpropagate through both
// encoder passes and update in place. Returns the pre-update mean loss.
inline double train_step(EncoderParams& params, const TokenBatch& batch,
                         const TrainConfig& cfg, std::size_t step_index,
                         StepTrace* trace = nullptr) {
    const std::uint64_t seed1 = rng::derive(cfg.master_seed, stream::kDropout1, step_index);
    const std::uint64_t seed2 = rng::derive(cfg.master_seed, stream::kDropout2, step_index);

    const auto [view1, view2] = encode_pair(params, batch, seed1, seed2);

    NoiseConfig noise_cfg = cfg.loss.noise;
    noise_cfg.dim = params.dim;
    noise_cfg.seed = rng::derive(cfg.master_seed, stream::kNoise, step_index);
    const EmbeddingMatrix noise = sample_noise(noise_cfg);
    if (trace) {
        trace->noise_rows = noise.rows();
        trace->noise_dim = noise.dim();
    }

    const LossResult loss =
        gs_info_nce(view1, view2, noise, cfg.loss.temperature, cfg.loss.lambda);

    ParamGrads grads(params);
    encode_backward(params, batch, seed1, true, loss.grad_view1, grads);
    encode_backward(params, batch, seed2, true, loss.grad_view2, grads);

    const double lr = cfg.learning_rate;
    for (std::size_t i = 0; i < params.token_embeddings.size(); ++i) {
        params.token_embeddings[i] -= lr * grads.token_embeddings[i];
    }
    for (std::size_t i = 0; i < params.hidden_weight.size(); ++i) {
        params.hidden_weight[i] -= lr * grads.hidden_weight[i];
    }
    for (std::size_t i = 0; i < params.hidden_bias.size(); ++i) {
        params.hidden_bias[i] -= lr * grads.hidden_bias[i];
    }
    if (!params.all_finite()) {
        throw GsError(ErrorKind::Divergence,
                      "non-finite parameter after update at step " +
                          std::to_string(step_index));
    }
    return loss.mean_loss;
}

// Fisher-Yates order of 0..n-1 for one epoch.
inline std::vector<std::size_t> shuffled_epoch_order(std::size_t n,
                                                     std::uint64_t master_seed,
                                                     std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::uint64_t seed = rng::derive(master_seed, stream::kShuffle, epoch);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng::uniform_index_at(seed, n - i, i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

// Deterministic batch schedule: epochs are reshuffled, batches are taken in
// order, and the last incomplete batch of an epoch is dropped so the
// negative-set size never varies.
class BatchSchedule {
public:
    BatchSchedule(std::size_t corpus_size, std::size_t batch_size,
                  std::uint64_t master_seed)
        : corpus_size_(corpus_size), batch_size_(batch_size), master_seed_(master_seed) {
        if (corpus_size_ < batch_size_) {
            throw GsError(ErrorKind::InvalidConfig,
                          "corpus has " + std::to_string(corpus_size_) +
                              " sentences, need >= batch_size " +
                              std::to_string(batch_size_));
        }
        order_ = shuffled_epoch_order(corpus_size_, master_seed_, epoch_);
    }

    std::vector<std::size_t> next_batch() {
        if (position_ + batch_size_ > corpus_size_) {
            ++epoch_;
            position_ = 0;
            order_ = shuffled_epoch_order(corpus_size_, master_seed_, epoch_);
        }
        std::vector<std::size_t> batch(order_.begin() + position_,
                                       order_.begin() + position_ + batch_size_);
        position_ += batch_size_;
        return batch;
    }

private:
    std::size_t corpus_size_;
    std::size_t batch_size_;
    std::uint64_t master_seed_;
    std::size_t epoch_ = 0;
    std::size_t position_ = 0;
    std::vector<std::size_t> order_;
};

struct TrainOutcome {
    EncoderParams final_params;
    EncoderParams best_params;
    double best_spearman = 0.0;
    std::size_t best_step = 0;
    TrainLog log;
    Vocabulary vocab;
};

// Full training run over a corpus file. Evaluates on the validation pair
// file every eval_every steps and at the final step; the checkpoint written
// is the one with the highest validation Spearman (earliest step wins ties).
inline TrainOutcome train_run(const TrainConfig& cfg) {
    validate_train_config(cfg);
    const auto lines = read_corpus_lines(cfg.corpus_path);
    TrainOutcome out;
    out.vocab = Vocabulary::build(lines);

    std::vector<std::vector<std::uint32_t>> tokens;
    tokens.reserve(lines.size());
    for (const auto& line : lines) tokens.push_back(out.vocab.encode(line));

    std::vector<StsPair> validation;
    if (!cfg.validation_path.empty()) validation = load_sts_pairs(cfg.validation_path);

    EncoderParams params =
        init_params(out.vocab.size(), cfg.embed_dim,
                    rng::derive(cfg.master_seed, stream::kInit), cfg.dropout_p);

    BatchSchedule schedule(tokens.size(), cfg.batch_size, cfg.master_seed);
    bool have_best = false;
    for (std::size_t step = 1; step <= cfg.steps; ++step) {
        TokenBatch batch;
        for (std::size_t idx : schedule.next_batch()) batch.sequences.push_back(tokens[idx]);

        const auto t0 = std::chrono::steady_clock::now();
        const double mean_loss = train_step(params, batch, cfg, step);
        const auto t1 = std::chrono::steady_clock::now();
        out.log.steps.push_back(
            {step, mean_loss, std::chrono::duration<double, std::milli>(t1 - t0).count()});

        const bool do_eval =
            !validation.empty() &&
            ((cfg.eval_every != 0 && step % cfg.eval_every == 0) || step == cfg.steps);
        if (do_eval) {
            const auto report = evaluate_pairs(params, out.vocab, validation, "validation");
            out.log.evals.push_back({step, report.spearman});
            if (!have_best || report.spearman > out.best_spearman) {
                have_best = true;
                out.best_spearman = report.spearman;
                out.best_step = step;
                out.best_params = params;
            }
        }
    }
    out.final_params = params;
    if (!have_best) {
        out.best_params = out.final_params;
        out.best_step = cfg.steps;
    }
    if (!cfg.checkpoint_path.empty()) save_checkpoint(out.best_params, cfg.checkpoint_path);
    return out;
}

} // namespace gsinfonce
