#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "gsinfonce/loss.hpp"
#include "gsinfonce/noise.hpp"
#include "gsinfonce/rng.hpp"

using namespace gsinfonce;

namespace {

// Independent scalar oracle: direct unstabilized evaluation of the loss
// definition, with its own cosine. Shares no code with loss.hpp internals.
double oracle_cos(std::span<const double> a, std::span<const double> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> oracle_per_example(const EmbeddingMatrix& v1,
                                       const EmbeddingMatrix& v2,
                                       const EmbeddingMatrix* noise, double tau,
                                       double lambda) {
    std::vector<double> out(v1.rows());
    for (std::size_t i = 0; i < v1.rows(); ++i) {
        const double num = std::exp(oracle_cos(v1.row(i), v2.row(i)) / tau);
        double den = 0.0;
        for (std::size_t j = 0; j < v2.rows(); ++j) {
            den += std::exp(oracle_cos(v1.row(i), v2.row(j)) / tau);
        }
        if (noise) {
            for (std::size_t k = 0; k < noise->rows(); ++k) {
                den += lambda * std::exp(oracle_cos(noise->row(k), v1.row(i)) / tau);
            }
        }
        out[i] = -std::log(num / den);
    }
    return out;
}

EmbeddingMatrix random_matrix(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    EmbeddingMatrix m(rows, dim);
    for (std::size_t i = 0; i < m.data().size(); ++i) {
        m.data()[i] = rng::normal_at(seed, i);
    }
    return m;
}

EmbeddingMatrix standard_noise(std::size_t count, std::size_t dim, std::uint64_t seed) {
    NoiseConfig cfg;
    cfg.count = count;
    cfg.dim = dim;
    cfg.seed = seed;
    return sample_noise(cfg);
}

} // namespace

TEST_CASE("info_nce single pair is zero loss", "[loss]") {
    EmbeddingMatrix v1(1, 3, {0.2, -0.7, 1.1});
    EmbeddingMatrix v2(1, 3, {1.0, 0.3, -0.4});
    const auto r = info_nce(v1, v2, 1.0);
    REQUIRE(r.per_example.size() == 1);
    REQUIRE(r.per_example[0] == 0.0);
    REQUIRE(r.mean_loss == 0.0);
    for (double g : r.grad_view1.data()) REQUIRE(g == Catch::Approx(0.0).margin(1e-15));
    for (double g : r.grad_view2.data()) REQUIRE(g == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("info_nce orthonormal pair batch", "[loss]") {
    // s11 = s22 = 1, s12 = s21 = 0, tau = 1: l = log(1 + e^-1)
    EmbeddingMatrix v(2, 2, {1.0, 0.0, 0.0, 1.0});
    const auto r = info_nce(v, v, 1.0);
    const double expected = std::log(1.0 + std::exp(-1.0)); // 0.3132616875182228
    REQUIRE(r.per_example[0] == Catch::Approx(expected).epsilon(1e-14));
    REQUIRE(r.per_example[1] == Catch::Approx(expected).epsilon(1e-14));
    REQUIRE(r.mean_loss == Catch::Approx(expected).epsilon(1e-14));
}

TEST_CASE("info_nce matches scalar oracle", "[loss]") {
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        const auto v1 = random_matrix(6, 10, rng::derive(seed, 1));
        const auto v2 = random_matrix(6, 10, rng::derive(seed, 2));
        for (double tau : {0.05, 1.0}) {
            const auto r = info_nce(v1, v2, tau);
            const auto expected = oracle_per_example(v1, v2, nullptr, tau, 0.0);
            for (std::size_t i = 0; i < expected.size(); ++i) {
                REQUIRE(r.per_example[i] == Catch::Approx(expected[i]).margin(1e-12));
            }
            const double mean =
                std::accumulate(expected.begin(), expected.end(), 0.0) / expected.size();
            REQUIRE(r.mean_loss == Catch::Approx(mean).margin(1e-12));
        }
    }
}

TEST_CASE("gs_info_nce matches scalar oracle", "[loss]") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        const auto v1 = random_matrix(5, 8, rng::derive(seed, 1));
        const auto v2 = random_matrix(5, 8, rng::derive(seed, 2));
        const auto g = standard_noise(9, 8, rng::derive(seed, 3));
        for (double lambda : {0.5, 1.0, 2.5}) {
            const auto r = gs_info_nce(v1, v2, g, 0.05, lambda);
            const auto expected = oracle_per_example(v1, v2, &g, 0.05, lambda);
            for (std::size_t i = 0; i < expected.size(); ++i) {
                REQUIRE(r.per_example[i] == Catch::Approx(expected[i]).margin(1e-12));
            }
        }
    }
}

TEST_CASE("gs_info_nce single pair with one noise row", "[loss]") {
    // s11 = 1, noise similarity 0, tau = lambda = 1: l = log(1 + e^-1)
    EmbeddingMatrix v(1, 2, {1.0, 0.0});
    EmbeddingMatrix g(1, 2, {0.0, 1.0});
    const auto r = gs_info_nce(v, v, g, 1.0, 1.0);
    REQUIRE(r.per_example[0] ==
            Catch::Approx(std::log(1.0 + std::exp(-1.0))).epsilon(1e-14));
}

TEST_CASE("gs_info_nce reduces to info_nce at lambda 0 and at M 0", "[loss]") {
    const auto v1 = random_matrix(7, 6, 101);
    const auto v2 = random_matrix(7, 6, 102);
    const auto g = standard_noise(12, 6, 103);
    const auto base = info_nce(v1, v2, 0.05);

    const auto zero_lambda = gs_info_nce(v1, v2, g, 0.05, 0.0);
    const auto empty_noise = gs_info_nce(v1, v2, EmbeddingMatrix(0, 6), 0.05, 1.0);
    for (std::size_t i = 0; i < base.per_example.size(); ++i) {
        REQUIRE(zero_lambda.per_example[i] ==
                Catch::Approx(base.per_example[i]).margin(1e-12));
        REQUIRE(empty_noise.per_example[i] ==
                Catch::Approx(base.per_example[i]).margin(1e-12));
    }
    REQUIRE(zero_lambda.grad_view1.data() == base.grad_view1.data());
    REQUIRE(empty_noise.grad_view2.data() == base.grad_view2.data());
}

TEST_CASE("gs_info_nce penalty grows strictly with lambda", "[loss]") {
    const auto v1 = random_matrix(6, 8, 201);
    const auto v2 = random_matrix(6, 8, 202);
    const auto g = standard_noise(10, 8, 203);
    double prev_lambda = 0.0;
    auto prev = gs_info_nce(v1, v2, g, 0.05, prev_lambda);
    for (double lambda : {0.3, 1.0, 2.5}) {
        const auto cur = gs_info_nce(v1, v2, g, 0.05, lambda);
        for (std::size_t i = 0; i < cur.per_example.size(); ++i) {
            REQUIRE(cur.per_example[i] > prev.per_example[i]);
        }
        prev = cur;
    }
}

TEST_CASE("loss is invariant to positive row scaling", "[loss]") {
    const auto v1 = random_matrix(5, 7, 301);
    const auto v2 = random_matrix(5, 7, 302);
    const auto g = standard_noise(8, 7, 303);
    const auto base = gs_info_nce(v1, v2, g, 0.05, 1.0);

    auto scaled1 = v1;
    for (double& x : scaled1.row(3)) x *= 7.25;
    auto scaled2 = v2;
    for (double& x : scaled2.row(0)) x *= 0.004;
    const auto r = gs_info_nce(scaled1, scaled2, g, 0.05, 1.0);
    for (std::size_t i = 0; i < base.per_example.size(); ++i) {
        REQUIRE(r.per_example[i] == Catch::Approx(base.per_example[i]).margin(1e-9));
    }
}

TEST_CASE("loss is permutation equivariant", "[loss]") {
    const std::size_t n = 6;
    const auto v1 = random_matrix(n, 5, 401);
    const auto v2 = random_matrix(n, 5, 402);
    const auto g = standard_noise(7, 5, 403);
    const auto base = gs_info_nce(v1, v2, g, 0.2, 1.0);

    std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    EmbeddingMatrix p1(n, 5), p2(n, 5);
    for (std::size_t i = 0; i < n; ++i) {
        std::copy(v1.row(perm[i]).begin(), v1.row(perm[i]).end(), p1.row(i).begin());
        std::copy(v2.row(perm[i]).begin(), v2.row(perm[i]).end(), p2.row(i).begin());
    }
    const auto permuted = gs_info_nce(p1, p2, g, 0.2, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(permuted.per_example[i] ==
                Catch::Approx(base.per_example[perm[i]]).margin(1e-12));
    }
    REQUIRE(permuted.mean_loss == Catch::Approx(base.mean_loss).margin(1e-12));
}

TEST_CASE("loss stays finite at extreme temperature", "[loss]") {
    // sim/tau up to 1/0.01 = 100
    EmbeddingMatrix v(3, 4, {1.0, 0.0, 0.0, 0.0,
                             0.99, 0.01, 0.0, 0.0,
                             -1.0, 0.0, 0.0, 0.0});
    const auto g = standard_noise(5, 4, 7);
    const auto r = gs_info_nce(v, v, g, 0.01, 1.0);
    for (double l : r.per_example) REQUIRE(std::isfinite(l));
    REQUIRE(r.grad_view1.all_finite());
    REQUIRE(r.grad_view2.all_finite());
}

TEST_CASE("loss input validation", "[loss]") {
    const auto v = random_matrix(3, 4, 501);
    REQUIRE_THROWS_MATCHES(info_nce(v, v, 0.0), GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::InvalidTemperature;
                           }));
    REQUIRE_THROWS_MATCHES(info_nce(v, random_matrix(3, 5, 502), 1.0), GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::DimensionMismatch;
                           }));
    REQUIRE_THROWS_MATCHES(
        gs_info_nce(v, v, random_matrix(2, 9, 503), 1.0, 1.0), GsError,
        Catch::Matchers::Predicate<GsError>([](const GsError& e) {
            return e.kind() == ErrorKind::DimensionMismatch;
        }));
    REQUIRE_THROWS_MATCHES(gs_info_nce(v, v, random_matrix(2, 4, 504), 1.0, -0.5),
                           GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::InvalidConfig;
                           }));
    REQUIRE_THROWS_AS(info_nce(EmbeddingMatrix(0, 4), EmbeddingMatrix(0, 4), 1.0),
                      GsError);

    EmbeddingMatrix with_zero(2, 2, {1.0, 0.0, 0.0, 0.0});
    REQUIRE_THROWS_MATCHES(info_nce(with_zero, with_zero, 1.0), GsError,
                           Catch::Matchers::Predicate<GsError>([](const GsError& e) {
                               return e.kind() == ErrorKind::ZeroNorm;
                           }));
}

TEST_CASE("finite differences agree on the constant single-pair loss", "[loss]") {
    EmbeddingMatrix v1(1, 3, {0.4, 0.5, -0.8});
    EmbeddingMatrix v2(1, 3, {1.0, -0.2, 0.3});
    const auto analytic = info_nce(v1, v2, 1.0);
    const auto [fd1, fd2] = finite_difference_grad(
        [](const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
            return info_nce(a, b, 1.0).mean_loss;
        },
        v1, v2);
    for (double g : fd1.data()) REQUIRE(std::fabs(g) < 1e-8);
    for (double g : fd2.data()) REQUIRE(std::fabs(g) < 1e-8);
    REQUIRE(max_relative_error(analytic.grad_view1, fd1) < 1e-8);
    REQUIRE(max_relative_error(analytic.grad_view2, fd2) < 1e-8);
}

TEST_CASE("analytic gradients match finite differences", "[loss]") {
    GradCheckConfig cfg; // N=8 d=16 M=24 tau=0.05 lambda=1, default seed
    cfg.trials = 20;
    const auto report = run_grad_check(cfg);
    INFO("max relative error " << report.max_rel_error << " worst seed "
                               << report.worst_seed);
    REQUIRE(report.max_rel_error <= 1e-5);
}

// The residual against finite differences is h^2 truncation, not bias: a
// 10x smaller step must shrink it close to 100x on the same instances.
TEST_CASE("finite-difference residual shrinks with the step", "[loss]") {
    GradCheckConfig coarse;
    coarse.trials = 5;
    coarse.step = 1e-3;
    GradCheckConfig fine = coarse;
    fine.step = 1e-4;
    const auto err_coarse = run_grad_check(coarse).max_rel_error;
    const auto err_fine = run_grad_check(fine).max_rel_error;
    REQUIRE(err_fine < 0.05 * err_coarse);
}

TEST_CASE("gradients match finite differences across tau and lambda", "[loss]") {
    for (double tau : {0.05, 1.0}) {
        for (double lambda : {0.0, 1.0, 2.5}) {
            GradCheckConfig cfg;
            cfg.n = 5;
            cfg.d = 9;
            cfg.m = 11;
            cfg.temperature = tau;
            cfg.lambda = lambda;
            cfg.trials = 5;
            cfg.seed = 1234 + static_cast<std::uint64_t>(tau * 100 + lambda * 10);
            const auto report = run_grad_check(cfg);
            INFO("tau " << tau << " lambda " << lambda << " err "
                        << report.max_rel_error);
            REQUIRE(report.max_rel_error <= 1e-5);
        }
    }
}

TEST_CASE("noise perturbation cannot reach gradient outputs", "[loss]") {
    const auto v1 = random_matrix(4, 6, 601);
    const auto v2 = random_matrix(4, 6, 602);
    auto g = standard_noise(5, 6, 603);
    const auto base = gs_info_nce(v1, v2, g, 0.05, 1.0);
    // no gradient slot exists for noise; perturbing noise must leave the
    // view gradient shapes (the only gradients) intact
    g.row(2)[3] += 0.25;
    const auto shifted = gs_info_nce(v1, v2, g, 0.05, 1.0);
    REQUIRE(base.grad_view1.rows() == 4);
    REQUIRE(base.grad_view2.rows() == 4);
    REQUIRE(shifted.mean_loss != base.mean_loss); // it does move the loss
}
