#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "fock.hpp"
#include "observables.hpp"

namespace crosskerr {

/// Û = exp(ξ₊K₊) exp(λ₀K₀) exp(ξ₋K₋), K₊ = b̂†²/2, K₋ = b̂²/2, K₀ = (b̂†b̂ + ½)/2.
struct SU11Factors {
    cplx xi_plus{0, 0};
    cplx lambda0{0, 0};
    cplx xi_minus{0, 0};
};

/// Factorization for one (α, β). `arg_alpha` is the branch of arg α to use;
/// the metaplectic sign of Û flips with each 2π shift of it.
inline SU11Factors su11_disentangle(cplx alpha, cplx beta, double arg_alpha) {
    const double residual = std::abs(std::norm(alpha) - std::norm(beta) - 1.0) /
                            std::max(1.0, std::norm(alpha) + std::norm(beta));
    if (residual > 1e-8) throw NumericalError("su11_disentangle: |alpha|^2 - |beta|^2 != 1", residual);
    const cplx ac = std::conj(alpha);
    return {beta / ac, -2.0 * cplx(std::log(std::abs(alpha)), -arg_alpha), -std::conj(beta) / ac};
}

inline SU11Factors su11_disentangle(cplx alpha, cplx beta) { return su11_disentangle(alpha, beta, std::arg(alpha)); }

/// arg αₖ unwrapped continuously from arg α₀ = 0 along a τ series.
inline std::vector<double> continuous_arg(const std::vector<cplx>& alpha, double max_jump = std::numbers::pi / 2) {
    std::vector<double> out(alpha.size(), 0.0);
    for (std::size_t k = 1; k < alpha.size(); ++k) {
        const double step = std::arg(alpha[k] / alpha[k - 1]);
        if (std::abs(step) > max_jump)
            throw NumericalError("phase of alpha jumps by " + format_double(step) +
                                 " between grid points; refine the tau grid", std::abs(step));
        out[k] = out[k - 1] + step;
    }
    return out;
}

namespace detail {

/// Σ_k (ξ/2)ᵏ/k! · √((m+2k)!/m!) placed at (m+2k, m): exp(ξ b̂†²/2) restricted to 0..N−1.
inline Matrix raising_squeeze(cplx xi, int dim) {
    Matrix e = Matrix::Identity(dim, dim);
    if (xi == cplx(0, 0)) return e;
    const double log_half = std::log(std::abs(xi) / 2.0), arg = std::arg(xi);
    for (int m = 0; m < dim; ++m)
        for (int k = 1; m + 2 * k < dim; ++k) {
            const double lg = k * log_half - std::lgamma(k + 1.0) +
                              0.5 * (std::lgamma(m + 2.0 * k + 1.0) - std::lgamma(m + 1.0));
            e(m + 2 * k, m) = std::polar(std::exp(lg), k * arg);
        }
    return e;
}

} // namespace detail

/// Matrix of Û on number states 0..N−1. Normal ordering makes every entry exact.
inline Matrix squeeze_matrix(const SU11Factors& f, int dim) {
    Eigen::VectorXcd mid(dim);
    for (int m = 0; m < dim; ++m) mid(m) = std::exp(f.lambda0 * (m + 0.5) / 2.0);
    return detail::raising_squeeze(f.xi_plus, dim) * mid.asDiagonal() *
           detail::raising_squeeze(f.xi_minus, dim).transpose();
}

/// ⟨m|D(γ)|k⟩ from the closed-form coherent overlaps:
///   m ≥ k: √(k!/m!) γ^{m−k} e^{−|γ|²/2} L_k^{(m−k)}(|γ|²), and the mirrored form with −γ* for m < k.
/// The Laguerre values come from the three-term recurrence in k at fixed order.
inline Matrix displacement_matrix(cplx gamma, int dim) {
    if (gamma == cplx(0, 0)) return Matrix::Identity(dim, dim);
    const double x = std::norm(gamma);
    const double log_g = std::log(std::abs(gamma));
    const double arg_lower = std::arg(gamma), arg_upper = std::arg(-std::conj(gamma));
    Matrix d(dim, dim);
    for (int diff = 0; diff < dim; ++diff) {
        double l_prev = 0.0, l = 1.0; // L_{-1}, L_0
        for (int k = 0; k + diff < dim; ++k) {
            if (k > 0) {
                const double next = ((2.0 * (k - 1) + 1.0 + diff - x) * l - (k - 1.0 + diff) * l_prev) / k;
                l_prev = l;
                l = next;
            }
            const double mag =
                std::exp(0.5 * (std::lgamma(k + 1.0) - std::lgamma(k + diff + 1.0)) + diff * log_g - x / 2) * l;
            d(k + diff, k) = std::polar(mag, diff * arg_lower);
            if (diff > 0) d(k, k + diff) = std::polar(mag, diff * arg_upper);
        }
    }
    return d;
}

/// Applies the per-block decoupled propagator at grid index k to the columns of phi:
///   e^{−in∫ω̃_c + in²F⁽²⁾} · diag(e^{−iθ₂ₙm}) · Û_sq · D(−ic₊) · D(c₋), right to left.
/// `arg_alpha` is the continuous branch of arg αₙ(τ_k).
inline Matrix apply_decoupled_block(const SystemConfig& cfg, const PhotonBranch& br, std::size_t k, double arg_alpha,
                                    const Matrix& phi) {
    const int n = br.n;
    const int dim = static_cast<int>(phi.rows());
    Matrix v = displacement_matrix(br.c_minus[k], dim) * phi;
    v = displacement_matrix(-I_UNIT * br.c_plus[k], dim) * v;
    const auto f = su11_disentangle(br.alpha[k], br.beta[k], arg_alpha);
    v = detail::raising_squeeze(f.xi_minus, dim).transpose() * v;
    for (int m = 0; m < dim; ++m) v.row(m) *= std::exp(f.lambda0 * (m + 0.5) / 2.0);
    v = detail::raising_squeeze(f.xi_plus, dim) * v;
    for (int m = 0; m < dim; ++m) v.row(m) *= std::exp(-I_UNIT * (br.theta[k] * m));
    const double scalar = -double(n) * cfg.omega_c.integral(br.tau[k]) + double(n) * n * br.F2[k];
    return std::exp(I_UNIT * scalar) * v;
}

/// Matrix form of apply_decoupled_block on number states 0..dim−1.
inline Matrix decoupled_block(const SystemConfig& cfg, const PhotonBranch& br, std::size_t k, double arg_alpha, int dim) {
    return apply_decoupled_block(cfg, br, k, arg_alpha, Matrix::Identity(dim, dim));
}

/// Applies the decoupled evolution from τ = 0 to engine.grid()[k] to every block of `state`.
inline FockState apply_decoupled(const AnalyticEngine& engine, std::size_t k, const FockState& state, unsigned workers = 1) {
    if (k >= engine.grid().size()) throw ConfigError("apply_decoupled: grid index out of range");
    for (const auto& b : state.blocks)
        if (b.n > engine.n_max())
            throw ConfigError("apply_decoupled: no analytic branch for optical block n=" + std::to_string(b.n) +
                              " (engine n_max=" + std::to_string(engine.n_max()) + ")");
    FockState out = state;
    auto evolved = parallel_map(state.blocks.size(), workers, [&](std::size_t i) {
        const auto& br = engine.branch(state.blocks[i].n);
        const double arg = continuous_arg(std::vector<cplx>(br.alpha.begin(), br.alpha.begin() + long(k) + 1)).back();
        return apply_decoupled_block(engine.config(), br, k, arg, state.blocks[i].phi);
    });
    for (std::size_t i = 0; i < evolved.size(); ++i) out.blocks[i].phi = std::move(evolved[i]);
    return out;
}

} // namespace crosskerr
