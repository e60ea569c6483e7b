#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "config.hpp"
#include "numeric.hpp"

namespace crosskerr {

/// Thermal denominator in the no-squeezing linear entropy:
/// `printed` uses cosh r_T, `corrected` uses cosh 2r_T = 2N_b(0) + 1.
enum class EntropyDenominator { printed, corrected };

inline const char* to_string(EntropyDenominator d) { return d == EntropyDenominator::printed ? "printed" : "corrected"; }

inline double entropy_denominator(EntropyDenominator d, double r_T) {
    return d == EntropyDenominator::printed ? std::cosh(r_T) : std::cosh(2.0 * r_T);
}

struct EngineOptions {
    int n_max = -1; // < 0: chosen from the Poisson tail bound
    unsigned workers = 1;
    BranchRoute route = BranchRoute::automatic;
};

/// All photon branches n = 0..n_max of one config on one τ grid, plus the
/// observables that sum over them. Sums run in ascending n with
/// compensated accumulation, so results do not depend on the worker count.
class AnalyticEngine {
public:
    AnalyticEngine(SystemConfig cfg, std::vector<double> grid, EngineOptions opts = {})
        : cfg_(std::move(cfg)), grid_(std::move(grid)) {
        cfg_.validate();
        const double mean = std::norm(cfg_.mu);
        n_max_ = opts.n_max >= 0 ? opts.n_max : poisson_cutoff(mean, cfg_.eps.tail);
        weights_ = poisson_weights(mean, n_max_);
        branches_ = parallel_map(static_cast<std::size_t>(n_max_) + 1, opts.workers, [&](std::size_t n) {
            return compute_branch(cfg_, static_cast<int>(n), grid_, opts.route);
        });
        check_stability();
    }

    const SystemConfig& config() const noexcept { return cfg_; }
    const std::vector<double>& grid() const noexcept { return grid_; }
    int n_max() const noexcept { return n_max_; }
    const PhotonBranch& branch(int n) const { return branches_.at(static_cast<std::size_t>(n)); }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// N_b at grid index k.
    double phonon_number(std::size_t k) const {
        const double n0 = cfg_.initial_phonons();
        CompensatedSum<double> sum;
        for (int n = 0; n <= n_max_; ++n) {
            const auto& b = branch(n);
            const double nn = double(n) * n;
            const double b2 = std::norm(b.beta[k]);
            const cplx I = b.I[k];
            const double term = (1.0 + 2.0 * b2) * (n0 + nn * std::norm(I)) + b2 -
                                2.0 * nn * (b.alpha[k] * std::conj(b.beta[k]) * I * I).real();
            sum.add(weights_[static_cast<std::size_t>(n)] * term);
        }
        return sum.value();
    }

    /// N_b(τ) − N_b(0) for the squeezing-free case, summed as
    /// |μ|² e^{−|μ|²} Σₙ (n+1)|μ|²ⁿ/n! |I_{n+1}|².
    double delta_phonon_no_squeezing(std::size_t k) const {
        require_no_squeezing("delta_phonon_no_squeezing");
        const double m = std::norm(cfg_.mu);
        if (m == 0.0) return 0.0;
        CompensatedSum<double> sum;
        // e^{−m} mⁿ/n! · m · (n+1) = P(n+1)·(n+1)²
        for (int n = 0; n < n_max_; ++n) {
            const double w = weights_[static_cast<std::size_t>(n)];
            sum.add(w * (n + 1) * std::norm(branch(n + 1).I[k]));
        }
        return m * sum.value();
    }

    /// ⟨b⟩ = Σₙ P(n) e^{−iθ₂ₙ} i n (βₙIₙ* − αₙIₙ); the thermal state has ⟨b⟩ = 0.
    cplx mean_b(std::size_t k) const {
        CompensatedSum<cplx> sum;
        for (int n = 1; n <= n_max_; ++n) {
            const auto& b = branch(n);
            const cplx term = std::exp(-I_UNIT * b.theta[k]) * I_UNIT * double(n) *
                              (b.beta[k] * std::conj(b.I[k]) - b.alpha[k] * b.I[k]);
            sum.add(weights_[static_cast<std::size_t>(n)] * term);
        }
        return sum.value();
    }

    /// Linear entropy 1 − Tr ρ_m² of the mechanical state, squeezing-free case.
    ///
    /// Uses Δₙₙ′ = n e^{−iθ₂ₙ(τ)} Iₙ − n′ e^{−iθ₂ₙ′(τ)} Iₙ′, the difference of the
    /// final displacements in the laboratory frame.
    double linear_entropy(std::size_t k, EntropyDenominator denom) const {
        require_no_squeezing("linear_entropy");
        const double C = entropy_denominator(denom, cfg_.r_T);
        std::vector<cplx> disp(static_cast<std::size_t>(n_max_) + 1);
        for (int n = 0; n <= n_max_; ++n) {
            const auto& b = branch(n);
            disp[static_cast<std::size_t>(n)] = double(n) * std::exp(-I_UNIT * b.theta[k]) * b.I[k];
        }
        CompensatedSum<double> sum;
        for (std::size_t n = 0; n < disp.size(); ++n)
            for (std::size_t m = 0; m < disp.size(); ++m)
                sum.add(weights_[n] * weights_[m] * std::exp(-std::norm(disp[n] - disp[m]) / C) / C);
        return 1.0 - sum.value();
    }

private:
    SystemConfig cfg_;
    std::vector<double> grid_;
    int n_max_ = 0;
    std::vector<double> weights_;
    std::vector<PhotonBranch> branches_;
    std::vector<std::string> warnings_;

    void require_no_squeezing(const char* what) const {
        if (!cfg_.squeezing_free())
            throw ConfigError(std::string(what) + " requires g2_plus = g2_minus = 0 (no squeezing)");
    }

    void check_stability() {
        if (cfg_.squeezing_free() || !has_closed_form(cfg_)) return;
        const auto polar = polar_g2(cfg_.g2_plus(0.0), cfg_.g2_minus(0.0));
        for (int n = 1; n <= n_max_; ++n) {
            const auto p = constant_case_params(n, polar.chi, cfg_.g2_prime(0.0));
            if (4.0 * polar.chi * polar.chi * n * n > p.K * p.K && weights_[static_cast<std::size_t>(n)] > cfg_.eps.tail)
                warnings_.push_back("photon number " + std::to_string(n) +
                                    " is in the unstable squeezing regime (4 chi2^2 n^2 > K^2); phonon number grows exponentially");
        }
    }
};

/// Single-time conveniences that build a two-point grid {0, τ}.
inline double phonon_number(const SystemConfig& cfg, double tau, EngineOptions opts = {}) {
    if (tau == 0.0) return cfg.initial_phonons();
    return AnalyticEngine(cfg, {0.0, tau}, opts).phonon_number(1);
}

inline double delta_phonon_no_squeezing(const SystemConfig& cfg, double tau, EngineOptions opts = {}) {
    if (tau == 0.0) return 0.0;
    return AnalyticEngine(cfg, {0.0, tau}, opts).delta_phonon_no_squeezing(1);
}

inline cplx mean_b(const SystemConfig& cfg, double tau, EngineOptions opts = {}) {
    if (tau == 0.0) return 0.0;
    return AnalyticEngine(cfg, {0.0, tau}, opts).mean_b(1);
}

inline double linear_entropy(const SystemConfig& cfg, double tau, EntropyDenominator denom, EngineOptions opts = {}) {
    const std::vector<double> grid = tau == 0.0 ? std::vector<double>{0.0} : std::vector<double>{0.0, tau};
    return AnalyticEngine(cfg, grid, opts).linear_entropy(grid.size() - 1, denom);
}

} // namespace crosskerr
