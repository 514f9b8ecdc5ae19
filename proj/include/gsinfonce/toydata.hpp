#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "gsinfonce/error.hpp"
#include "gsinfonce/evaluation.hpp"
#include "gsinfonce/report.hpp"
#include "gsinfonce/rng.hpp"

namespace gsinfonce {

// Self-contained synthetic corpus. Every sentence carries a fixed small
// number of cluster-specific topic tokens; the rest is filler drawn from a
// vocabulary shared by all clusters. The shared filler mass buries the
// cluster signal for an untrained encoder, while the per-sentence topic
// tokens guarantee the signal is present in every pair, so training has
// something real to recover. Pair files carry cluster-identity gold scores
// (same cluster 5, else 0).
struct ToyDataConfig {
    std::size_t sentences = 2000;
    std::size_t clusters = 50;
    std::size_t pair_count = 400; // per split
    std::size_t sentence_len = 10;
    std::size_t topic_tokens_per_sentence = 1;
    std::size_t topic_tokens_per_cluster = 1;
    std::size_t filler_tokens = 30;
    std::uint64_t seed = 42;
};

struct ToyData {
    std::vector<std::string> corpus;
    std::vector<StsPair> train_pairs;
    std::vector<StsPair> validation_pairs;
    std::vector<StsPair> test_pairs;
};

namespace detail {
inline constexpr std::uint64_t kTagCorpusSentence = 0x7D01;
inline constexpr std::uint64_t kTagPairSplit = 0x7D10; // +0 train, +1 val, +2 test

inline std::string toy_sentence(const ToyDataConfig& cfg, std::size_t cluster,
                                std::uint64_t sentence_seed) {
    const std::size_t topics = std::min(cfg.topic_tokens_per_sentence, cfg.sentence_len);
    // topic tokens sit at evenly spread positions; the pooled encoder is
    // order-blind anyway
    std::string out;
    std::size_t placed = 0;
    for (std::size_t t = 0; t < cfg.sentence_len; ++t) {
        if (!out.empty()) out += ' ';
        const bool topic_slot =
            placed < topics && t * topics >= placed * cfg.sentence_len;
        if (topic_slot) {
            out += 'c' + std::to_string(cluster) + 'w' +
                   std::to_string(rng::uniform_index_at(sentence_seed, 2 * t + 1,
                                                        cfg.topic_tokens_per_cluster));
            ++placed;
        } else {
            out += 'f' + std::to_string(
                             rng::uniform_index_at(sentence_seed, 2 * t + 1,
                                                   cfg.filler_tokens));
        }
    }
    return out;
}

inline std::vector<StsPair> toy_pairs(const ToyDataConfig& cfg, std::uint64_t split_seed) {
    std::vector<StsPair> pairs;
    for (std::size_t k = 0; k < cfg.pair_count; ++k) {
        const bool same = (k % 2 == 0);
        const std::size_t ca = rng::uniform_index_at(split_seed, 3 * k, cfg.clusters);
        std::size_t cb = ca;
        if (!same) {
            cb = rng::uniform_index_at(split_seed, 3 * k + 1, cfg.clusters - 1);
            if (cb >= ca) ++cb; // distinct cluster
        }
        StsPair pair;
        pair.sentence_a = toy_sentence(cfg, ca, rng::derive(split_seed, 1, k));
        pair.sentence_b = toy_sentence(cfg, cb, rng::derive(split_seed, 2, k));
        pair.gold_score = same ? 5.0 : 0.0;
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

} // namespace detail

inline ToyData make_toy_data(const ToyDataConfig& cfg) {
    if (cfg.sentences == 0 || cfg.clusters == 0 || cfg.sentence_len == 0 ||
        cfg.topic_tokens_per_cluster == 0 || cfg.filler_tokens == 0) {
        throw GsError(ErrorKind::InvalidConfig, "toy data sizes must be >= 1");
    }
    if (cfg.topic_tokens_per_sentence > cfg.sentence_len) {
        throw GsError(ErrorKind::InvalidConfig,
                      "topic_tokens_per_sentence must be <= sentence_len");
    }
    if (cfg.pair_count < 2) {
        throw GsError(ErrorKind::InvalidConfig, "pair_count must be >= 2");
    }
    ToyData data;
    for (std::size_t i = 0; i < cfg.sentences; ++i) {
        const std::size_t cluster = i % cfg.clusters; // even coverage
        data.corpus.push_back(detail::toy_sentence(
            cfg, cluster, rng::derive(cfg.seed, detail::kTagCorpusSentence, i)));
    }
    data.train_pairs = detail::toy_pairs(cfg, rng::derive(cfg.seed, detail::kTagPairSplit, 0));
    data.validation_pairs =
        detail::toy_pairs(cfg, rng::derive(cfg.seed, detail::kTagPairSplit, 1));
    data.test_pairs = detail::toy_pairs(cfg, rng::derive(cfg.seed, detail::kTagPairSplit, 2));
    return data;
}

inline std::string pairs_to_tsv(const std::vector<StsPair>& pairs) {
    std::string out;
    for (const auto& p : pairs) {
        out += p.sentence_a + '\t' + p.sentence_b + '\t' + format_real(p.gold_score) + '\n';
    }
    return out;
}

// Writes corpus.txt plus train/validation/test.tsv under dir.
inline void write_toy_data(const ToyData& data, const std::string& dir) {
    std::string corpus;
    for (const auto& line : data.corpus) corpus += line + '\n';
    write_text_file(dir + "/corpus.txt", corpus);
    write_text_file(dir + "/train.tsv", pairs_to_tsv(data.train_pairs));
    write_text_file(dir + "/validation.tsv", pairs_to_tsv(data.validation_pairs));
    write_text_file(dir + "/test.tsv", pairs_to_tsv(data.test_pairs));
}

} // namespace gsinfonce
