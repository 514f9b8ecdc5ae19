#pragma once
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "gsinfonce/encoder.hpp"
#include "gsinfonce/error.hpp"
#include "gsinfonce/matrix.hpp"
#include "gsinfonce/vocab.hpp"

namespace gsinfonce {

// One scored sentence pair; gold_score is on the dataset's own scale
// (typically 0-5) and is only ever used through its rank.
struct StsPair {
    std::string sentence_a;
    std::string sentence_b;
    double gold_score = 0.0;
};

struct EvalReport {
    std::string dataset_name;
    std::size_t n_pairs = 0;
    double spearman = 0.0;
};

// Fractional (average) ranks in 1..n; ties share the mean of the rank
// positions they span.
inline std::vector<double> rank_transform(const std::vector<double>& values) {
    if (values.empty()) {
        throw GsError(ErrorKind::DegenerateInput, "rank_transform needs >= 1 value");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw GsError(ErrorKind::NonFiniteInput, "non-finite value in rank input");
        }
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

// Spearman correlation: Pearson correlation of the two rank vectors,
// cov(rg_x, rg_y) / (sd(rg_x) * sd(rg_y)). Constant inputs are an error,
// never a NaN.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw GsError(ErrorKind::LengthMismatch,
                      "spearman inputs differ in length: " + std::to_string(x.size()) +
                          " vs " + std::to_string(y.size()));
    }
    if (x.size() < 2) {
        throw GsError(ErrorKind::DegenerateInput, "spearman needs >= 2 observations");
    }
    const auto rx = rank_transform(x);
    const auto ry = rank_transform(y);
    const double n = static_cast<double>(rx.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        cov += (rx[i] - mx) * (ry[i] - my);
        vx += (rx[i] - mx) * (rx[i] - mx);
        vy += (ry[i] - my) * (ry[i] - my);
    }
    if (vx == 0.0 || vy == 0.0) {
        throw GsError(ErrorKind::DegenerateInput,
                      "spearman undefined for constant ranks");
    }
    // Both rank vectors hold the same multiset (average ranks of 1..n), so
    // perfect (anti)correlation is exactly element-wise (anti)equality;
    // return the exact +-1 instead of a rounding-tarnished quotient.
    bool all_eq = true, all_anti = true;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        all_eq = all_eq && rx[i] == ry[i];
        all_anti = all_anti && rx[i] == n + 1.0 - ry[i];
    }
    if (all_eq) return 1.0;
    if (all_anti) return -1.0;
    return std::clamp(cov / std::sqrt(vx * vy), -1.0, 1.0);
}

// TSV: sentence_a TAB sentence_b TAB gold_score. Blank lines and lines
// starting with '#' are skipped.
inline std::vector<StsPair> load_sts_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw GsError(ErrorKind::IoError, "cannot open pair file: " + path);
    }
    std::vector<StsPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto tab1 = line.find('\t');
        const auto tab2 = tab1 == std::string::npos ? std::string::npos
                                                    : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw GsError(ErrorKind::ParseError,
                          path + ":" + std::to_string(line_no) +
                              ": expected 3 tab-separated fields");
        }
        StsPair pair;
        pair.sentence_a = line.substr(0, tab1);
        pair.sentence_b = line.substr(tab1 + 1, tab2 - tab1 - 1);
        const std::string score_text = line.substr(tab2 + 1);
        try {
            std::size_t consumed = 0;
            pair.gold_score = std::stod(score_text, &consumed);
            if (consumed != score_text.size()) throw std::invalid_argument(score_text);
        } catch (const std::exception&) {
            throw GsError(ErrorKind::ParseError,
                          path + ":" + std::to_string(line_no) +
                              ": bad gold score '" + score_text + "'");
        }
        if (!std::isfinite(pair.gold_score)) {
            throw GsError(ErrorKind::ParseError,
                          path + ":" + std::to_string(line_no) + ": non-finite gold score");
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

// Model score of each pair: cosine of the two inference-mode encodings.
inline std::vector<double> score_pairs(const EncoderParams& params,
                                       const Vocabulary& vocab,
                                       const std::vector<StsPair>& pairs) {
    if (pairs.empty()) {
        throw GsError(ErrorKind::DegenerateInput, "no pairs to score");
    }
    TokenBatch a, b;
    for (const auto& pair : pairs) {
        a.sequences.push_back(vocab.encode(pair.sentence_a));
        b.sequences.push_back(vocab.encode(pair.sentence_b));
    }
    const auto ea = encode(params, a, 0, false);
    const auto eb = encode(params, b, 0, false);
    std::vector<double> scores(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        scores[i] = cosine_similarity(ea.row(i), eb.row(i));
    }
    return scores;
}

inline EvalReport evaluate_pairs(const EncoderParams& params, const Vocabulary& vocab,
                                 const std::vector<StsPair>& pairs,
                                 const std::string& dataset_name) {
    if (pairs.size() < 2) {
        throw GsError(ErrorKind::DegenerateInput,
                      "dataset '" + dataset_name + "' has " +
                          std::to_string(pairs.size()) + " pairs, need >= 2");
    }
    const auto predicted = score_pairs(params, vocab, pairs);
    std::vector<double> gold(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) gold[i] = pairs[i].gold_score;
    EvalReport report;
    report.dataset_name = dataset_name;
    report.n_pairs = pairs.size();
    report.spearman = spearman(predicted, gold);
    return report;
}

inline EvalReport evaluate_sts(const EncoderParams& params, const Vocabulary& vocab,
                               const std::string& dataset_path) {
    const auto pairs = load_sts_pairs(dataset_path);
    std::string name = dataset_path;
    if (const auto slash = name.find_last_of('/'); slash != std::string::npos) {
        name = name.substr(slash + 1);
    }
    if (const auto dot = name.find_last_of('.'); dot != std::string::npos && dot > 0) {
        name = name.substr(0, dot);
    }
    return evaluate_pairs(params, vocab, pairs, name);
}

} // namespace gsinfonce
