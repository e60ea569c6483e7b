#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "config.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace crosskerr {

/// Polar form g₂⁺ + i g₂⁻ = χ₂ e^{2iφ₂} of the squeezing coupling.
struct KerrPolar {
    double chi = 0.0;
    double phi = 0.0;
};

inline KerrPolar polar_g2(double g2_plus, double g2_minus) {
    if (g2_plus == 0.0 && g2_minus == 0.0) return {};
    double phi = 0.5 * std::atan2(g2_minus, g2_plus);
    if (phi <= -std::numbers::pi / 2) phi += std::numbers::pi; // keep (−π/2, π/2]
    return {std::hypot(g2_plus, g2_minus), phi};
}

/// Per-photon-number constants for time-independent squeezing couplings.
struct ConstantCaseParams {
    double K = 1.0;    // 1 + 2 g₂′ n
    cplx Lambda{1, 0}; // √(K² − 4χ₂²n²), principal branch
};

inline ConstantCaseParams constant_case_params(int n, double chi, double g2_prime) {
    const double K = 1.0 + 2.0 * g2_prime * n;
    const double disc = K * K - 4.0 * chi * chi * double(n) * double(n);
    return {K, std::sqrt(cplx(disc, 0.0))};
}

/// How sin(Λτ)/Λ is evaluated. `automatic` switches to the power series when |Λτ| < 1e−4.
enum class SincRoute { automatic, series, trig };

inline constexpr double kSeriesThreshold = 1e-4;

/// sin(Λτ)/Λ for complex Λ, well defined at Λ = 0.
inline cplx sin_over(cplx lambda, double tau, SincRoute route = SincRoute::automatic) {
    const cplx x = lambda * tau;
    const bool series = route == SincRoute::series || (route == SincRoute::automatic && std::abs(x) < kSeriesThreshold);
    if (series) {
        // τ·[1 − x²/3! + x⁴/5! − x⁶/7! + x⁸/9!]
        const cplx x2 = x * x;
        return tau * (1.0 + x2 * (-1.0 / 6.0 + x2 * (1.0 / 120.0 + x2 * (-1.0 / 5040.0 + x2 / 362880.0))));
    }
    return std::sin(x) / lambda;
}

struct Bogoliubov {
    cplx alpha{1, 0};
    cplx beta{0, 0};

    /// |α|² − |β|² − 1
    double identity_residual() const { return std::norm(alpha) - std::norm(beta) - 1.0; }
};

/// θ₂ₙ(τ) = τ + 2n ∫₀^τ g₂′
inline double theta2(int n, double tau, const CouplingProfile& g2_prime) {
    return tau + 2.0 * n * g2_prime.integral(tau);
}

/// Closed-form Bogoliubov coefficients for constant χ₂, φ₂, g₂′:
///   α = e^{iKτ}[cos Λτ − iK sin(Λτ)/Λ],  β = −2iχ₂ n e^{2iφ₂} e^{iKτ} sin(Λτ)/Λ.
/// Complex Λ covers the oscillatory, resonant and hyperbolic regimes.
inline Bogoliubov bogoliubov_constant(int n, double tau, double chi, double phi, double g2_prime,
                                      SincRoute route = SincRoute::automatic) {
    if (n == 0) return {};
    const auto [K, L] = constant_case_params(n, chi, g2_prime);
    const cplx rot = std::exp(I_UNIT * (K * tau));
    const cplx s = sin_over(L, tau, route);
    const cplx alpha = rot * (std::cos(L * tau) - I_UNIT * K * s);
    const cplx beta = -2.0 * I_UNIT * chi * double(n) * std::exp(2.0 * I_UNIT * phi) * rot * s;
    return {alpha, beta};
}

/// Constant-coupling closed forms of Re[g̃₁E₂(α*+β*)] and Im[g̃₁E₂(α*−β*)],
/// the generator coefficients of the B₊ and B₋ displacements.
inline std::pair<double, double> constant_case_reals(int n, double tau, double g1_plus, double g1_minus, double chi,
                                                     double phi, double g2_prime) {
    const auto [K, L] = constant_case_params(n, chi, g2_prime);
    const double c = std::cos(L * tau).real();
    const double s_over = sin_over(L, tau).real(); // sin(Λτ)/Λ
    const double q = 2.0 * chi * n * s_over;       // 2χ₂ n sin(Λτ)/Λ
    const double ks = K * s_over;                  // K sin(Λτ)/Λ
    const double re = g1_plus * (c + q * std::sin(2 * phi)) - g1_minus * (ks + q * std::cos(2 * phi));
    const double im = g1_plus * (ks - q * std::cos(2 * phi)) + g1_minus * (c - q * std::sin(2 * phi));
    return {re, im};
}

/// Sorted breakpoints of every coupling that enters the branch equations.
inline std::vector<double> merged_breaks(const SystemConfig& cfg) {
    std::vector<double> out;
    for (const auto* p : {&cfg.g1_plus, &cfg.g1_minus, &cfg.g2_plus, &cfg.g2_minus, &cfg.g2_prime}) {
        auto b = p->breaks();
        out.insert(out.end(), b.begin(), b.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Series of the squeezing-sector symplectic matrix S = [[p11, S12], [S21, p22]]
/// obtained by integrating dS/dτ = A S.
struct BogoliubovSeries {
    std::vector<double> tau;
    std::vector<Bogoliubov> coeff; // α = S11, β = S12
    std::vector<cplx> p22;         // S22, equals conj(α) for an exact solution
    std::vector<cplx> s21;         // S21, equals conj(β) for an exact solution
};

namespace detail {

using OdeState = std::array<cplx, 6>; // S11, S12, S21, S22, I, X + iΦ

/// Couplings are sampled at τ clamped into [lo, hi), so a stage landing on a
/// breakpoint sees the left limit of the segment it belongs to.
struct BranchRhs {
    int n;
    const SystemConfig* cfg;
    bool with_displacement;
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();

    void operator()(const OdeState& y, OdeState& dy, double t) const {
        const double tau = std::clamp(t, lo, std::nextafter(hi, lo));
        const double theta = theta2(n, tau, cfg->g2_prime);
        const cplx g2(cfg->g2_plus(tau), cfg->g2_minus(tau));
        const cplx e2 = std::exp(2.0 * I_UNIT * theta);
        const cplx a12 = -2.0 * I_UNIT * double(n) * g2 * e2;
        const cplx a21 = 2.0 * I_UNIT * double(n) * std::conj(g2) * std::conj(e2);
        dy[0] = a12 * y[2];
        dy[1] = a12 * y[3];
        dy[2] = a21 * y[0];
        dy[3] = a21 * y[1];
        if (with_displacement) {
            const cplx g1(cfg->g1_plus(tau), cfg->g1_minus(tau));
            const cplx e1 = std::exp(I_UNIT * theta);
            const cplx h = g1 * e1 * std::conj(y[0]) + std::conj(g1) * std::conj(e1) * y[1];
            dy[4] = h;
            dy[5] = cplx(h.real(), h.imag() * y[5].real());
        } else {
            dy[4] = dy[5] = 0.0;
        }
    }
};

/// Output on `grid`. The window is cut at coupling breakpoints and each piece
/// is integrated on its own, so no step straddles a jump; the embedded error
/// estimate of RKF78 cannot see a discontinuity between its estimator stages.
inline std::vector<OdeState> integrate_branch_ode(int n, const SystemConfig& cfg, const std::vector<double>& grid,
                                                  double eps_ode, bool with_displacement) {
    namespace ode = boost::numeric::odeint;
    std::vector<OdeState> out;
    out.reserve(grid.size());
    OdeState y{cplx(1, 0), cplx(0, 0), cplx(0, 0), cplx(1, 0), cplx(0, 0), cplx(0, 0)};
    // Local target two decades below eps_ode keeps the accumulated drift of
    // |α|²−|β|² under eps_ode over long windows.
    const double local = 0.01 * eps_ode;
    auto stepper = ode::make_controlled(local, local, ode::runge_kutta_fehlberg78<OdeState>());

    std::vector<double> cuts{grid.front()};
    for (double b : merged_breaks(cfg))
        if (b > grid.front() && b < grid.back()) cuts.push_back(b);
    cuts.push_back(grid.back());

    std::size_t next_grid = 0;
    auto observe = [&](const OdeState& s, double t) {
        while (next_grid < grid.size() && grid[next_grid] == t) {
            out.push_back(s);
            ++next_grid;
        }
    };
    const double spacing = grid.size() > 1 ? grid[1] - grid[0] : 1.0;
    try {
        for (std::size_t j = 0; j + 1 < cuts.size(); ++j) {
            const double lo = cuts[j], hi = cuts[j + 1];
            std::vector<double> times{lo};
            for (std::size_t k = next_grid; k < grid.size() && grid[k] <= hi; ++k)
                if (grid[k] > lo) times.push_back(grid[k]);
            if (times.back() != hi) times.push_back(hi);
            const double dt0 = std::min({1e-3, spacing / 4, (hi - lo) / 4});
            if (times.size() == 1) {
                observe(y, lo);
                continue;
            }
            ode::integrate_times(stepper, BranchRhs{n, &cfg, with_displacement, lo, hi}, y, times.begin(),
                                 times.end(), dt0, observe, ode::max_step_checker(2000000));
        }
    } catch (const std::exception& e) {
        throw NumericalError(std::string("Bogoliubov ODE failed for n=") + std::to_string(n) + ": " + e.what());
    }
    if (out.size() != grid.size()) throw NumericalError("Bogoliubov ODE stopped before the end of the grid");
    for (const auto& s : out)
        for (const auto& v : s)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NumericalError("Bogoliubov ODE overflowed for n=" + std::to_string(n));
    return out;
}

/// |α|²−|β|²−1 scaled by |α|²+|β|², the part of the residual that floating
/// point can resolve when squeezing grows exponentially.
inline double scaled_residual(const Bogoliubov& b) {
    return std::abs(b.identity_residual()) / std::max(1.0, std::norm(b.alpha) + std::norm(b.beta));
}

} // namespace detail

/// Integrates the 2×2 time-ordered exponential with
///   A_n = −2i n χ₂ [[0, e^{2i(φ₂+θ₂ₙ)}], [−e^{−2i(φ₂+θ₂ₙ)}, 0]]
/// for arbitrary g₂⁺, g₂⁻, g₂′ profiles. The symplectic identity is checked, not imposed.
inline BogoliubovSeries bogoliubov_general(int n, const SystemConfig& cfg, const std::vector<double>& grid,
                                           double eps_ode) {
    const auto states = detail::integrate_branch_ode(n, cfg, grid, eps_ode, false);
    BogoliubovSeries out;
    out.tau = grid;
    for (const auto& s : states) {
        Bogoliubov b{s[0], s[1]};
        if (detail::scaled_residual(b) > 100 * eps_ode)
            throw NumericalError("Bogoliubov identity violated for n=" + std::to_string(n),
                                 detail::scaled_residual(b));
        out.coeff.push_back(b);
        out.p22.push_back(s[3]);
        out.s21.push_back(s[2]);
    }
    return out;
}

/// Every analytic per-photon-number quantity on a τ grid.
struct PhotonBranch {
    int n = 0;
    std::vector<double> tau;
    std::vector<double> theta;
    std::vector<cplx> alpha, beta;
    std::vector<cplx> I;           // ∫₀^τ [g̃₁E₂α* + g̃₁*E₂*β]
    std::vector<double> F2;        // 2∫₀^τ Im[g̃₁E₂(α*−β*)] ∫₀^τ′ Re[g̃₁E₂(α*+β*)]
    std::vector<double> c_plus;    // n ∫ Re[...], exponent of the B₊ displacement
    std::vector<double> c_minus;   // n ∫ Im[...], exponent of the B₋ displacement
};

enum class BranchRoute { automatic, closed_form, ode };

/// True when α, β have a closed form: no squeezing at all, or all squeezing couplings constant.
inline bool has_closed_form(const SystemConfig& cfg) {
    return cfg.squeezing_free() || (cfg.g2_plus.is_constant() && cfg.g2_minus.is_constant() && cfg.g2_prime.is_constant());
}

/// Evaluates (θ₂ₙ, α, β) at arbitrary τ in closed form.
struct ClosedFormBranch {
    int n;
    const SystemConfig* cfg;
    KerrPolar polar{};
    double g2p = 0.0;
    bool squeezing = false;

    ClosedFormBranch(int n_, const SystemConfig& c) : n(n_), cfg(&c) {
        squeezing = !c.squeezing_free();
        if (squeezing) {
            polar = polar_g2(c.g2_plus(0.0), c.g2_minus(0.0));
            g2p = c.g2_prime(0.0);
        }
    }
    double theta(double tau) const { return theta2(n, tau, cfg->g2_prime); }
    Bogoliubov coeff(double tau) const {
        if (!squeezing) return {};
        return bogoliubov_constant(n, tau, polar.chi, polar.phi, g2p);
    }
    /// g̃₁E₂α* + g̃₁*E₂*β
    cplx h(double tau) const {
        const cplx g1(cfg->g1_plus(tau), cfg->g1_minus(tau));
        const cplx e = std::exp(I_UNIT * theta(tau));
        const auto b = coeff(tau);
        return g1 * e * std::conj(b.alpha) + std::conj(g1) * std::conj(e) * b.beta;
    }
};

/// Iₙ(τ) on the grid by cumulative adaptive quadrature of the closed-form integrand.
inline std::vector<cplx> displacement_integral(const ClosedFormBranch& branch, const std::vector<double>& grid,
                                               double eps_q) {
    if (branch.cfg->g1_plus.is_zero() && branch.cfg->g1_minus.is_zero()) return std::vector<cplx>(grid.size());
    return cumulative_integral([&](double t) { return branch.h(t); }, grid, eps_q, merged_breaks(*branch.cfg));
}

/// F⁽²⁾ₙ(τ) on the grid. The inner integral ∫Re h restarts from its prefix
/// value at the start of each quadrature piece, so only short inner
/// integrals are evaluated at outer nodes.
inline std::vector<double> kerr_phase_F2(const ClosedFormBranch& branch, const std::vector<double>& grid,
                                         double eps_q) {
    std::vector<double> out(grid.size(), 0.0);
    if (branch.cfg->g1_plus.is_zero() && branch.cfg->g1_minus.is_zero()) return out;
    auto re_h = [&](double t) { return branch.h(t).real(); };
    auto im_h = [&](double t) { return branch.h(t).imag(); };
    const auto breaks = merged_breaks(*branch.cfg);
    const double span = grid.back() - grid.front();
    const double inner_tol = eps_q / (10.0 * std::max(1.0, span));
    double prefix = 0.0, acc = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        const double a = grid[k - 1], b = grid[k];
        std::vector<double> cuts{a};
        for (double x : breaks)
            if (x > a && x < b) cuts.push_back(x);
        cuts.push_back(b);
        for (std::size_t j = 1; j < cuts.size(); ++j) {
            const double lo = cuts[j - 1], hi = cuts[j];
            const double base = prefix;
            auto outer = [&](double t) { return im_h(t) * (base + integrate(re_h, lo, t, inner_tol)); };
            const double budget = span > 0 ? 0.5 * eps_q * (hi - lo) / span : eps_q;
            acc += integrate(outer, lo, hi, budget);
            prefix += integrate(re_h, lo, hi, inner_tol);
        }
        out[k] = 2.0 * acc;
    }
    return out;
}

/// Computes the full branch for photon number n. The closed-form route
/// integrates closed-form integrands by adaptive quadrature; the ODE route
/// integrates α, β, I and F⁽²⁾ together under one error controller.
inline PhotonBranch compute_branch(const SystemConfig& cfg, int n, const std::vector<double>& grid,
                                   BranchRoute route = BranchRoute::automatic) {
    if (route == BranchRoute::automatic) route = has_closed_form(cfg) ? BranchRoute::closed_form : BranchRoute::ode;
    if (route == BranchRoute::closed_form && !has_closed_form(cfg))
        throw ConfigError("closed-form Bogoliubov route needs constant squeezing couplings");
    if (grid.empty() || grid.front() != 0.0) throw ConfigError("branch grid must start at tau = 0");

    PhotonBranch b;
    b.n = n;
    b.tau = grid;
    b.theta.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) b.theta[k] = theta2(n, grid[k], cfg.g2_prime);

    if (route == BranchRoute::closed_form) {
        ClosedFormBranch cf(n, cfg);
        for (double t : grid) {
            const auto c = cf.coeff(t);
            b.alpha.push_back(c.alpha);
            b.beta.push_back(c.beta);
        }
        b.I = displacement_integral(cf, grid, cfg.eps.quadrature);
        b.F2 = kerr_phase_F2(cf, grid, cfg.eps.quadrature);
    } else {
        const auto states = detail::integrate_branch_ode(n, cfg, grid, cfg.eps.ode, true);
        for (const auto& s : states) {
            Bogoliubov c{s[0], s[1]};
            if (detail::scaled_residual(c) > 100 * cfg.eps.ode)
                throw NumericalError("Bogoliubov identity violated for n=" + std::to_string(n),
                                     detail::scaled_residual(c));
            b.alpha.push_back(s[0]);
            b.beta.push_back(s[1]);
            b.I.push_back(s[4]);
            b.F2.push_back(2.0 * s[5].imag());
        }
    }
    b.alpha.front() = 1.0;
    b.beta.front() = 0.0;
    b.I.front() = 0.0;
    b.F2.front() = 0.0;
    for (const auto& v : b.I) {
        b.c_plus.push_back(n * v.real());
        b.c_minus.push_back(n * v.imag());
    }
    return b;
}

/// Poisson weights e^{−m} mᵏ/k! for k = 0..n_max.
inline std::vector<double> poisson_weights(double mean, int n_max) {
    std::vector<double> w(static_cast<std::size_t>(n_max) + 1);
    double log_w = -mean;
    for (int k = 0; k <= n_max; ++k) {
        if (k > 0) log_w += std::log(mean) - std::log(double(k));
        w[static_cast<std::size_t>(k)] = mean == 0.0 ? (k == 0 ? 1.0 : 0.0) : std::exp(log_w);
    }
    return w;
}

/// Tail mass Σ_{k>n} e^{−m} mᵏ/k! by direct summation of the terms above n.
inline double poisson_tail(double mean, int n) {
    if (mean == 0.0) return 0.0;
    double log_w = -mean;
    for (int k = 1; k <= n + 1; ++k) log_w += std::log(mean) - std::log(double(k));
    CompensatedSum<double> tail;
    double term = std::exp(log_w);
    for (int k = n + 1; term > 0.0; ++k) {
        tail.add(term);
        const double next = term * mean / double(k + 1);
        if (k > mean && next < 1e-30 * tail.value()) break;
        term = next;
    }
    return tail.value();
}

/// Smallest n_max with Poisson tail Σ_{n>n_max} below eps_tail.
inline int poisson_cutoff(double mean, double eps_tail) {
    if (!(eps_tail > 0.0)) throw ConfigError("eps_tail must be > 0");
    if (mean == 0.0) return 0;
    int n = static_cast<int>(std::floor(mean));
    // Walk down while the tail stays below eps, then up until it does.
    while (n > 0 && poisson_tail(mean, n - 1) < eps_tail) --n;
    while (poisson_tail(mean, n) >= eps_tail) ++n;
    return n;
}

} // namespace crosskerr
