#pragma once
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gsinfonce/error.hpp"
#include "gsinfonce/matrix.hpp"
#include "gsinfonce/noise.hpp"
#include "gsinfonce/rng.hpp"

namespace gsinfonce {

// Full loss configuration: temperature tau, noise balance weight lambda,
// and the noise distribution/count.
struct GsLossConfig {
    double temperature = 0.05;
    double lambda = 1.0;
    NoiseConfig noise;
};

struct LossResult {
    std::vector<double> per_example; // l_i, nats
    double mean_loss = 0.0;
    EmbeddingMatrix grad_view1; // d(mean_loss)/d(view1), N x d
    EmbeddingMatrix grad_view2; // d(mean_loss)/d(view2), N x d
};

namespace detail {

// Shared forward+backward kernel for InfoNCE and its Gaussian-smoothed
// variant. With row i of view1 as the anchor a_i, row j of view2 as b_j and
// noise rows g_k:
//
//   l_i = -s(a_i,b_i)/tau + log( sum_j e^{s(a_i,b_j)/tau}
//                                + lambda * sum_k e^{s(a_i,g_k)/tau} )
//
// where s is clamped cosine. The log-sum-exp is stabilized by subtracting
// the per-anchor max exponent over all N+M terms. Gradients are the exact
// derivatives of the batch mean; noise rows are constants and get no
// gradient slot. lambda = 0 or an empty noise matrix reduces the kernel to
// plain InfoNCE exactly (the noise sums vanish term by term).
inline LossResult nce_kernel(const EmbeddingMatrix& view1, const EmbeddingMatrix& view2,
                             const EmbeddingMatrix* noise, double temperature,
                             double lambda) {
    if (temperature <= 0.0) {
        throw GsError(ErrorKind::InvalidTemperature,
                      "temperature must be > 0, got " + std::to_string(temperature));
    }
    if (lambda < 0.0) {
        throw GsError(ErrorKind::InvalidConfig,
                      "lambda must be >= 0, got " + std::to_string(lambda));
    }
    if (view1.rows() == 0) {
        throw GsError(ErrorKind::EmptyMatrix, "loss needs at least one pair");
    }
    if (view1.rows() != view2.rows() || view1.dim() != view2.dim()) {
        throw GsError(ErrorKind::DimensionMismatch, "view shapes differ");
    }
    const std::size_t n = view1.rows();
    const std::size_t d = view1.dim();
    const std::size_t m = noise ? noise->rows() : 0;
    if (noise && m > 0 && noise->dim() != d) {
        throw GsError(ErrorKind::DimensionMismatch,
                      "noise dim " + std::to_string(noise->dim()) +
                          " != view dim " + std::to_string(d));
    }
    const bool use_noise = noise && m > 0 && lambda > 0.0;

    // Row norms up front; zero-norm rows are hard errors.
    std::vector<double> na2(n), nb2(n), ng2(m);
    for (std::size_t i = 0; i < n; ++i) {
        na2[i] = dot(view1.row(i), view1.row(i));
        if (std::sqrt(na2[i]) < kZeroNormThreshold) {
            throw GsError(ErrorKind::ZeroNorm, "zero-norm row " + std::to_string(i) +
                                                   " in view1");
        }
        nb2[i] = dot(view2.row(i), view2.row(i));
        if (std::sqrt(nb2[i]) < kZeroNormThreshold) {
            throw GsError(ErrorKind::ZeroNorm, "zero-norm row " + std::to_string(i) +
                                                   " in view2");
        }
    }
    for (std::size_t k = 0; k < m; ++k) {
        ng2[k] = dot(noise->row(k), noise->row(k));
        if (std::sqrt(ng2[k]) < kZeroNormThreshold) {
            throw GsError(ErrorKind::ZeroNorm, "zero-norm row " + std::to_string(k) +
                                                   " in noise");
        }
    }

    std::vector<double> s(n * n);  // s_ij = cos(a_i, b_j)
    std::vector<double> t(n * m);  // t_ik = cos(a_i, g_k)
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            s[i * n + j] =
                cosine_from_parts(dot(view1.row(i), view2.row(j)), na2[i], nb2[j]);
        }
        for (std::size_t k = 0; k < m; ++k) {
            t[i * m + k] =
                cosine_from_parts(dot(view1.row(i), noise->row(k)), na2[i], ng2[k]);
        }
    }

    LossResult result;
    result.per_example.resize(n);
    result.grad_view1 = EmbeddingMatrix(n, d);
    result.grad_view2 = EmbeddingMatrix(n, d);

    // Softmax-style weights: p_ij for batch terms, q_ik for noise terms.
    std::vector<double> p(n * n), q(use_noise ? n * m : 0);
    for (std::size_t i = 0; i < n; ++i) {
        double mx = s[i * n] / temperature;
        for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, s[i * n + j] / temperature);
        if (use_noise) {
            for (std::size_t k = 0; k < m; ++k) mx = std::max(mx, t[i * m + k] / temperature);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(s[i * n + j] / temperature - mx);
        if (use_noise) {
            for (std::size_t k = 0; k < m; ++k) {
                z += lambda * std::exp(t[i * m + k] / temperature - mx);
            }
        }
        result.per_example[i] = -s[i * n + i] / temperature + mx + std::log(z);
        for (std::size_t j = 0; j < n; ++j) {
            p[i * n + j] = std::exp(s[i * n + j] / temperature - mx) / z;
        }
        if (use_noise) {
            for (std::size_t k = 0; k < m; ++k) {
                q[i * m + k] = lambda * std::exp(t[i * m + k] / temperature - mx) / z;
            }
        }
    }

    double sum = 0.0;
    for (double v : result.per_example) sum += v;
    result.mean_loss = sum / static_cast<double>(n);

    // d cos(u,v) / du = v/(|u||v|) - cos * u/|u|^2; chain through the
    // softmax weights and scale by 1/(N*tau).
    const double scale = 1.0 / (static_cast<double>(n) * temperature);
    for (std::size_t i = 0; i < n; ++i) {
        auto ga = result.grad_view1.row(i);
        const auto ai = view1.row(i);
        double self_coeff = 0.0; // coefficient on a_i
        for (std::size_t j = 0; j < n; ++j) {
            const double w = p[i * n + j] - (i == j ? 1.0 : 0.0);
            const double inv = 1.0 / (std::sqrt(na2[i]) * std::sqrt(nb2[j]));
            const auto bj = view2.row(j);
            for (std::size_t c = 0; c < d; ++c) ga[c] += w * inv * bj[c];
            self_coeff -= w * s[i * n + j] / na2[i];

            auto gb = result.grad_view2.row(j);
            for (std::size_t c = 0; c < d; ++c) {
                gb[c] += scale * w * (inv * ai[c] - s[i * n + j] * bj[c] / nb2[j]);
            }
        }
        if (use_noise) {
            for (std::size_t k = 0; k < m; ++k) {
                const double w = q[i * m + k];
                const double inv = 1.0 / (std::sqrt(na2[i]) * std::sqrt(ng2[k]));
                const auto gk = noise->row(k);
                for (std::size_t c = 0; c < d; ++c) ga[c] += w * inv * gk[c];
                self_coeff -= w * t[i * m + k] / na2[i];
            }
        }
        for (std::size_t c = 0; c < d; ++c) ga[c] = scale * (ga[c] + self_coeff * ai[c]);
    }
    return result;
}

} // namespace detail

// InfoNCE over a batch of positive pairs (row i of each view), with every
// row of view2 serving as the negative set.
inline LossResult info_nce(const EmbeddingMatrix& view1, const EmbeddingMatrix& view2,
                           double temperature) {
    return detail::nce_kernel(view1, view2, nullptr, temperature, 0.0);
}

// InfoNCE with the denominator augmented by lambda-weighted similarities
// against M fixed Gaussian noise rows. Gradients flow to the views only.
inline LossResult gs_info_nce(const EmbeddingMatrix& view1, const EmbeddingMatrix& view2,
                              const EmbeddingMatrix& noise, double temperature,
                              double lambda) {
    return detail::nce_kernel(view1, view2, &noise, temperature, lambda);
}

// Central-difference gradient of a scalar loss with respect to every entry
// of both views, holding everything captured by `loss_fn` (noise, config)
// fixed. The numeric oracle for the analytic gradients above.
template <typename LossFn>
std::pair<EmbeddingMatrix, EmbeddingMatrix> finite_difference_grad(
    LossFn&& loss_fn, const EmbeddingMatrix& view1, const EmbeddingMatrix& view2,
    double step = 1e-4) {
    if (step <= 0.0) {
        throw GsError(ErrorKind::InvalidConfig, "finite-difference step must be > 0");
    }
    EmbeddingMatrix g1(view1.rows(), view1.dim());
    EmbeddingMatrix g2(view2.rows(), view2.dim());
    EmbeddingMatrix v1 = view1;
    EmbeddingMatrix v2 = view2;
    for (std::size_t idx = 0; idx < v1.data().size(); ++idx) {
        const double saved = v1.data()[idx];
        v1.data()[idx] = saved + step;
        const double up = loss_fn(v1, v2);
        v1.data()[idx] = saved - step;
        const double down = loss_fn(v1, v2);
        v1.data()[idx] = saved;
        g1.data()[idx] = (up - down) / (2.0 * step);
    }
    for (std::size_t idx = 0; idx < v2.data().size(); ++idx) {
        const double saved = v2.data()[idx];
        v2.data()[idx] = saved + step;
        const double up = loss_fn(v1, v2);
        v2.data()[idx] = saved - step;
        const double down = loss_fn(v1, v2);
        v2.data()[idx] = saved;
        g2.data()[idx] = (up - down) / (2.0 * step);
    }
    return {std::move(g1), std::move(g2)};
}

// Per-entry relative error with an absolute floor, maxed over a pair of
// matrices.
inline double max_relative_error(const EmbeddingMatrix& a, const EmbeddingMatrix& b,
                                 double floor = 1e-8) {
    if (a.rows() != b.rows() || a.dim() != b.dim()) {
        throw GsError(ErrorKind::DimensionMismatch, "gradient shapes differ");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        const double ga = a.data()[i];
        const double gb = b.data()[i];
        const double denom = std::max({std::fabs(ga), std::fabs(gb), floor});
        worst = std::max(worst, std::fabs(ga - gb) / denom);
    }
    return worst;
}

struct GradCheckConfig {
    std::size_t n = 8;
    std::size_t d = 16;
    std::size_t m = 24;
    double temperature = 0.05;
    double lambda = 1.0;
    std::uint64_t seed = 108;
    std::size_t trials = 100;
    double step = 1e-4;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::uint64_t worst_seed = 0;
    std::size_t trials = 0;
};

namespace detail {
inline constexpr std::uint64_t kTagGradTrial = 0x6763; // "gc"
inline constexpr std::uint64_t kTagGradView1 = 1;
inline constexpr std::uint64_t kTagGradView2 = 2;
inline constexpr std::uint64_t kTagGradNoise = 3;

inline EmbeddingMatrix random_views(std::size_t rows, std::size_t dim,
                                    std::uint64_t seed) {
    EmbeddingMatrix out(rows, dim);
    for (std::size_t i = 0; i < out.data().size(); ++i) {
        out.data()[i] = rng::normal_at(seed, i);
    }
    return out;
}
} // namespace detail

// Analytic-vs-central-difference comparison over random instances. Each
// trial draws fresh views and noise from seeds derived off cfg.seed, so a
// failing trial is reproducible from the reported worst_seed.
inline GradCheckReport run_grad_check(const GradCheckConfig& cfg) {
    GradCheckReport report;
    report.trials = cfg.trials;
    for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t trial_seed = rng::derive(cfg.seed, detail::kTagGradTrial, trial);
        const EmbeddingMatrix v1 = detail::random_views(
            cfg.n, cfg.d, rng::derive(trial_seed, detail::kTagGradView1));
        const EmbeddingMatrix v2 = detail::random_views(
            cfg.n, cfg.d, rng::derive(trial_seed, detail::kTagGradView2));
        NoiseConfig noise_cfg;
        noise_cfg.count = cfg.m;
        noise_cfg.dim = cfg.d;
        noise_cfg.seed = rng::derive(trial_seed, detail::kTagGradNoise);
        const EmbeddingMatrix noise = sample_noise(noise_cfg);

        const LossResult analytic =
            gs_info_nce(v1, v2, noise, cfg.temperature, cfg.lambda);
        const auto [fd1, fd2] = finite_difference_grad(
            [&](const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
                return gs_info_nce(a, b, noise, cfg.temperature, cfg.lambda).mean_loss;
            },
            v1, v2, cfg.step);

        const double err = std::max(max_relative_error(analytic.grad_view1, fd1),
                                    max_relative_error(analytic.grad_view2, fd2));
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst_seed = trial_seed;
        }
    }
    return report;
}

} // namespace gsinfonce
