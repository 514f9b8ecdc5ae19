#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "gsinfonce/probe.hpp"
#include "gsinfonce/rng.hpp"

using namespace gsinfonce;

namespace {

EmbeddingMatrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
    EmbeddingMatrix m(n, d);
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        m.data()[i] = rng::normal_at(seed, i);
    }
    return m;
}

// Exhaustive oracle: every off-diagonal cosine, per-column descending sort.
std::vector<double> oracle_probe(const EmbeddingMatrix& m, std::size_t top_k) {
    const std::size_t n = m.rows();
    std::vector<double> sums(top_k, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> col;
        for (std::size_t i = 0; i < n; ++i) {
            if (i != j) col.push_back(cosine_similarity(m.row(i), m.row(j)));
        }
        std::sort(col.rbegin(), col.rend());
        for (std::size_t r = 0; r < top_k; ++r) sums[r] += col[r];
    }
    for (double& s : sums) s /= static_cast<double>(n);
    return sums;
}

} // namespace

TEST_CASE("probe_batch on identical rows", "[probe]") {
    EmbeddingMatrix m(5, 3);
    for (std::size_t i = 0; i < 5; ++i) {
        m.row(i)[0] = 1.0;
        m.row(i)[1] = 2.0;
        m.row(i)[2] = -1.0;
    }
    const auto r = probe_batch(m, 4);
    REQUIRE(r == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("probe_batch on orthogonal rows", "[probe]") {
    EmbeddingMatrix m(5, 5);
    for (std::size_t i = 0; i < 5; ++i) m.row(i)[i] = 1.0;
    const auto r = probe_batch(m, 4);
    for (double v : r) REQUIRE(v == 0.0);
}

TEST_CASE("probe_batch matches exhaustive enumeration", "[probe]") {
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    EmbeddingMatrix m(4, 2,
                      {1.0, 0.0, 0.0, 1.0, inv_sqrt2, inv_sqrt2, -1.0, 0.0});
    const auto got = probe_batch(m, 2);
    const auto expected = oracle_probe(m, 2);
    REQUIRE(got.size() == 2);
    REQUIRE(got[0] == Catch::Approx(expected[0]).margin(1e-15));
    REQUIRE(got[1] == Catch::Approx(expected[1]).margin(1e-15));
    // hand value: rank-1 mean is 3*(1/sqrt(2))/4, rank-2 mean is 0
    REQUIRE(got[0] == Catch::Approx(3.0 * inv_sqrt2 / 4.0).margin(1e-12));
    REQUIRE(got[1] == Catch::Approx(0.0).margin(1e-15));

    const auto rnd = random_rows(9, 6, 41);
    const auto got_rnd = probe_batch(rnd, 4);
    const auto exp_rnd = oracle_probe(rnd, 4);
    for (std::size_t r = 0; r < 4; ++r) {
        REQUIRE(got_rnd[r] == Catch::Approx(exp_rnd[r]).margin(1e-12));
    }
}

TEST_CASE("probe_batch rejects small batches", "[probe]") {
    const auto m = random_rows(4, 3, 42);
    REQUIRE_THROWS_MATCHES(probe_batch(m, 4), GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::BatchTooSmall;
                           }));
    REQUIRE_THROWS_AS(probe_batch(m, 0), GsError);
}

TEST_CASE("probe_batch excludes self-similarity", "[probe]") {
    auto m = random_rows(8, 16, 43);
    const auto base = probe_batch(m, 2);
    REQUIRE(base[0] < 1.0); // no self-pairs: random rows stay below 1

    // duplicating a row is the only way to reach 1.0
    std::copy(m.row(0).begin(), m.row(0).end(), m.row(7).begin());
    const auto with_dup = probe_batch(m, 2);
    REQUIRE(with_dup[0] > base[0]);
    const auto sim = similarity_matrix(m, m);
    REQUIRE(sim.at(0, 7) == 1.0);
}

TEST_CASE("probe_batch rank means are descending", "[probe]") {
    const auto m = random_rows(20, 8, 44);
    const auto r = probe_batch(m, 6);
    for (std::size_t k = 1; k < r.size(); ++k) REQUIRE(r[k - 1] >= r[k]);
    for (double v : r) {
        REQUIRE(v >= -1.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("synthetic source degenerate configs", "[probe]") {
    SyntheticClusteredSource one_cluster(1, 0.0, 8, 7);
    const auto a = one_cluster.draw(1, 4);
    for (std::size_t i = 1; i < 4; ++i) {
        for (std::size_t c = 0; c < 8; ++c) {
            REQUIRE(a.row(i)[c] == a.row(0)[c]);
        }
    }
    const auto b = one_cluster.draw(2, 4);
    REQUIRE(a.data() == b.data()); // spread 0: each draw is the center

    SyntheticClusteredSource three(3, 0.0, 8, 7);
    std::set<std::vector<double>> distinct;
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto batch = three.draw(s, 4);
        for (std::size_t i = 0; i < 4; ++i) {
            distinct.insert({batch.row(i).begin(), batch.row(i).end()});
        }
    }
    REQUIRE(distinct.size() <= 3);

    REQUIRE_THROWS_AS(SyntheticClusteredSource(0, 0.3, 8, 7), GsError);
    REQUIRE_THROWS_AS(SyntheticClusteredSource(3, -0.1, 8, 7), GsError);
}

TEST_CASE("synthetic source draws are unit norm and deterministic", "[probe]") {
    SyntheticClusteredSource source(10, 0.3, 16, 99);
    const auto a = source.draw(5, 32);
    const auto b = source.draw(5, 32);
    REQUIRE(a.data() == b.data());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        REQUIRE(row_norm(a.row(i)) == Catch::Approx(1.0).margin(1e-12));
    }
    const auto c = source.draw(6, 32);
    REQUIRE(a.data() != c.data());
}

TEST_CASE("same-cluster draws are more similar than cross-cluster draws", "[probe]") {
    // one-cluster source: every pair is same-cluster; many-cluster source:
    // pairs are nearly always cross-cluster
    SyntheticClusteredSource same(1, 0.3, 32, 123);
    SyntheticClusteredSource cross(1000, 0.3, 32, 123);
    double same_acc = 0.0, cross_acc = 0.0;
    std::size_t count = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        const auto sa = same.draw(s, 10);
        const auto cr = cross.draw(s, 10);
        for (std::size_t i = 0; i < 10; ++i) {
            for (std::size_t j = i + 1; j < 10; ++j) {
                same_acc += cosine_similarity(sa.row(i), sa.row(j));
                cross_acc += cosine_similarity(cr.row(i), cr.row(j));
                ++count;
            }
        }
    }
    REQUIRE(same_acc / count > cross_acc / count + 0.2);
}

TEST_CASE("probe_sweep with one repeat equals a single probe_batch", "[probe]") {
    SyntheticClusteredSource source(5, 0.3, 8, 31);
    ProbeConfig cfg;
    cfg.batch_sizes = {16};
    cfg.repeats = 1;
    cfg.top_k = 4;
    cfg.seed = 77;
    const auto report = probe_sweep(cfg, source);
    const std::uint64_t batch_seed = rng::derive(
        rng::derive(cfg.seed, gsinfonce::detail::kTagSize, 0),
        gsinfonce::detail::kTagRepeat, 0);
    const auto expected = probe_batch(source.draw(batch_seed, 16), 4);
    REQUIRE(report.means.size() == 1);
    REQUIRE(report.means[0] == expected);
}

TEST_CASE("probe_sweep is deterministic with descending ranks", "[probe]") {
    SyntheticClusteredSource source(8, 0.25, 12, 3);
    ProbeConfig cfg;
    cfg.batch_sizes = {8, 16, 32};
    cfg.repeats = 5;
    cfg.top_k = 3;
    cfg.seed = 9;
    const auto a = probe_sweep(cfg, source);
    const auto b = probe_sweep(cfg, source);
    REQUIRE(a.means == b.means);
    for (const auto& per_size : a.means) {
        for (std::size_t k = 1; k < per_size.size(); ++k) {
            REQUIRE(per_size[k - 1] >= per_size[k]);
        }
    }
}

TEST_CASE("probe_sweep validates configuration", "[probe]") {
    SyntheticClusteredSource source(5, 0.3, 8, 1);
    ProbeConfig cfg;
    cfg.batch_sizes = {8};
    cfg.top_k = 8;
    REQUIRE_THROWS_AS(probe_sweep(cfg, source), GsError);
    cfg.top_k = 4;
    cfg.repeats = 0;
    REQUIRE_THROWS_AS(probe_sweep(cfg, source), GsError);
    cfg.repeats = 1;
    cfg.batch_sizes = {};
    REQUIRE_THROWS_AS(probe_sweep(cfg, source), GsError);
}

TEST_CASE("encoded corpus source draws distinct sentences", "[probe]") {
    const std::vector<std::string> corpus{"aa bb", "cc dd", "ee ff", "gg hh", "ii jj"};
    const auto vocab = Vocabulary::build(corpus);
    EncodedCorpusSource source(init_params(vocab.size(), 6, 4), vocab, corpus);
    const auto batch = source.draw(11, 4);
    REQUIRE(batch.rows() == 4);
    const auto again = source.draw(11, 4);
    REQUIRE(batch.data() == again.data());
    REQUIRE_THROWS_MATCHES(source.draw(1, 6), GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::SourceExhausted;
                           }));
}
