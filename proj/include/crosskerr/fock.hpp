#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "analytic.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "numeric.hpp"
#include "observables.hpp"

namespace crosskerr {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

struct FockSpace {
    int n_a = 2;
    int n_b = 2;

    FockSpace() = default;
    FockSpace(int a, int b) : n_a(a), n_b(b) {
        if (a < 2 || b < 2) throw ConfigError("Fock cutoffs must be >= 2");
    }
    static FockSpace from(const SystemConfig& cfg) { return {cfg.cutoff_a, cfg.cutoff_b}; }
};

/// Mechanical-mode matrices on number states 0..N_b−1. B₋ = i(b̂†−b̂) and
/// B₋⁽²⁾ = i(b̂†²−b̂²), so g̃₁⁺B₊ + g̃₁⁻B₋ = g̃₁b̂† + g̃₁*b̂.
struct MechOperators {
    int dim = 0;
    Matrix b, bd, B_plus, B_minus, B2_plus, B2_minus, num;
};

inline MechOperators build_mech_operators(int n_b) {
    if (n_b < 2) throw ConfigError("mechanical cutoff must be >= 2");
    MechOperators o;
    o.dim = n_b;
    o.b = Matrix::Zero(n_b, n_b);
    for (int m = 0; m + 1 < n_b; ++m) o.b(m, m + 1) = std::sqrt(double(m + 1));
    o.bd = o.b.adjoint();
    o.num = o.bd * o.b;
    o.B_plus = o.bd + o.b;
    o.B_minus = I_UNIT * (o.bd - o.b);
    const Matrix bd2 = o.bd * o.bd, b2 = o.b * o.b;
    o.B2_plus = bd2 + b2;
    o.B2_minus = I_UNIT * (bd2 - b2);
    return o;
}

/// Hₙ(τ) = ω̃_c n + b̂†b̂ + n[g̃₁⁺B₊ + g̃₁⁻B₋ + g̃₂⁺B₊⁽²⁾ + g̃₂⁻B₋⁽²⁾ + 2g̃₂′b̂†b̂]
inline Matrix block_hamiltonian(const SystemConfig& cfg, const MechOperators& ops, int n, double tau) {
    Matrix h = ops.num;
    h.diagonal().array() += cfg.omega_c(tau) * n;
    if (n != 0) {
        h += double(n) * (cfg.g1_plus(tau) * ops.B_plus + cfg.g1_minus(tau) * ops.B_minus +
                          cfg.g2_plus(tau) * ops.B2_plus + cfg.g2_minus(tau) * ops.B2_minus +
                          2.0 * cfg.g2_prime(tau) * ops.num);
    }
    return h;
}

/// Full tensor-product Hamiltonian, basis index a·N_b + m. Only meant for tiny cutoffs.
inline Matrix full_hamiltonian(const SystemConfig& cfg, const FockSpace& space, double tau) {
    const auto ops = build_mech_operators(space.n_b);
    const Eigen::Index nb = space.n_b;
    Matrix h = Matrix::Zero(space.n_a * nb, space.n_a * nb);
    // â†â is diagonal, so each optical level contributes one mechanical block.
    for (int a = 0; a < space.n_a; ++a) h.block(a * nb, a * nb, nb, nb) = block_hamiltonian(cfg, ops, a, tau);
    return h;
}

inline Matrix photon_number_full(const FockSpace& space) {
    Matrix n = Matrix::Zero(space.n_a * space.n_b, space.n_a * space.n_b);
    for (int a = 0; a < space.n_a; ++a)
        for (int m = 0; m < space.n_b; ++m) n(a * space.n_b + m, a * space.n_b + m) = double(a);
    return n;
}

/// One optical block: amplitude cₙ and one normalized mechanical vector per
/// ensemble member (column p of phi).
struct FockBlock {
    int n = 0;
    cplx c{1, 0};
    Matrix phi;
};

/// Ensemble Σ_p w_p |ψ_p⟩⟨ψ_p| with |ψ_p⟩ = Σₙ cₙ |n⟩⊗φₙₚ.
struct FockState {
    FockSpace space;
    std::vector<double> weights;
    std::vector<FockBlock> blocks;

    std::size_t members() const { return weights.size(); }
};

/// Members p = 0..p_max of the thermal state, w_p = tanh²ᵖr / cosh²r. p_max is
/// the smallest value whose discarded weight and discarded ⟨b̂†b̂⟩ are both below eps_tail.
inline std::vector<double> thermal_weights(double r_T, double eps_tail) {
    const double x = std::pow(std::tanh(r_T), 2);
    std::vector<double> w{1.0 - x};
    if (x == 0.0) return w;
    for (int P = 1;; ++P) {
        const double xp = std::pow(x, P);
        // Σ_{q≥P} w_q = x^P,  Σ_{q≥P} q w_q = x^P (P + x/(1−x))
        if (xp < eps_tail && xp * (P + x / (1.0 - x)) < eps_tail) break;
        w.push_back((1.0 - x) * xp);
    }
    return w;
}

inline FockState prepare_initial(const SystemConfig& cfg, const FockSpace& space) {
    const double m = std::norm(cfg.mu);
    const double coherent_tail = poisson_tail(m, space.n_a - 1);
    if (coherent_tail >= cfg.eps.tail)
        throw ConfigError("optical cutoff " + std::to_string(space.n_a) + " too small: coherent tail " +
                          format_double(coherent_tail) + " >= eps_tail");
    FockState s;
    s.space = space;
    s.weights = thermal_weights(cfg.r_T, cfg.eps.tail);
    const auto members = static_cast<Eigen::Index>(s.weights.size());
    if (members > space.n_b)
        throw ConfigError("mechanical cutoff " + std::to_string(space.n_b) + " too small: thermal tail needs " +
                          std::to_string(members) + " levels");
    const auto pw = poisson_weights(m, space.n_a - 1);
    const double phase = std::arg(cfg.mu);
    for (int n = 0; n < space.n_a; ++n) {
        if (pw[static_cast<std::size_t>(n)] == 0.0) continue;
        FockBlock b;
        b.n = n;
        b.c = std::sqrt(pw[static_cast<std::size_t>(n)]) * std::exp(I_UNIT * (phase * n));
        b.phi = Matrix::Identity(space.n_b, members);
        s.blocks.push_back(std::move(b));
    }
    return s;
}

struct PropagatorOptions {
    double dt = 1e-3;
    double norm_tolerance = 1e-8;
    /// For time-independent configs, step each block with one exact exponential per call.
    bool exploit_time_independence = true;
    unsigned workers = 1;
};

namespace detail {

/// exp(−i H t) for Hermitian H.
inline Matrix hermitian_exp(const Matrix& h, double t) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h);
    if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed in propagator");
    const Vector phases = (-I_UNIT * t * es.eigenvalues().cast<cplx>()).array().exp();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

} // namespace detail

/// Evolves every block from τ0 to τ1 with midpoint-sampled exponentials
/// φ ← exp(−iHₙ(τ_k + h/2)h)φ. The interval is first cut at coupling
/// breakpoints; each piece gets the fewest equal steps with h ≤ dt.
inline void propagate(FockState& state, const SystemConfig& cfg, double tau0, double tau1,
                      const PropagatorOptions& opts = {}) {
    if (!(opts.dt > 0.0)) throw ConfigError("oracle dt must be > 0");
    if (tau1 < tau0) throw ConfigError("propagation must run forward in time");
    if (tau1 == tau0) return;
    const auto ops = build_mech_operators(state.space.n_b);
    const bool constant = cfg.time_independent();

    struct Piece {
        double start, h;
        long steps;
    };
    std::vector<Piece> pieces;
    if (constant && opts.exploit_time_independence) {
        pieces.push_back({tau0, tau1 - tau0, 1});
    } else {
        std::vector<double> cuts{tau0};
        auto breaks = merged_breaks(cfg);
        const auto wc = cfg.omega_c.breaks();
        breaks.insert(breaks.end(), wc.begin(), wc.end());
        std::sort(breaks.begin(), breaks.end());
        for (double b : breaks)
            if (b > cuts.back() && b < tau1) cuts.push_back(b);
        cuts.push_back(tau1);
        for (std::size_t j = 1; j < cuts.size(); ++j) {
            const double span = cuts[j] - cuts[j - 1];
            const long steps = std::max(1L, static_cast<long>(std::ceil(span / opts.dt - 1e-9)));
            pieces.push_back({cuts[j - 1], span / double(steps), steps});
        }
    }

    auto evolved = parallel_map(state.blocks.size(), opts.workers, [&](std::size_t i) {
        const auto& blk = state.blocks[i];
        Matrix phi = blk.phi;
        for (const auto& pc : pieces) {
            if (constant) {
                const Matrix u = detail::hermitian_exp(block_hamiltonian(cfg, ops, blk.n, pc.start), pc.h);
                for (long k = 0; k < pc.steps; ++k) phi = u * phi;
                continue;
            }
            for (long k = 0; k < pc.steps; ++k) {
                const double mid = pc.start + (double(k) + 0.5) * pc.h;
                phi = detail::hermitian_exp(block_hamiltonian(cfg, ops, blk.n, mid), pc.h) * phi;
            }
        }
        return phi;
    });

    double worst = 0.0;
    int worst_n = 0;
    for (std::size_t i = 0; i < evolved.size(); ++i) {
        const double drift = (evolved[i].colwise().norm().array() - 1.0).abs().maxCoeff();
        if (drift > worst) {
            worst = drift;
            worst_n = state.blocks[i].n;
        }
        state.blocks[i].phi = std::move(evolved[i]);
    }
    if (worst > opts.norm_tolerance)
        throw NumericalError("norm drift in optical block n=" + std::to_string(worst_n), worst);
}

/// Largest |‖φₙₚ‖ − 1| over all blocks and members.
inline double norm_drift(const FockState& s) {
    double worst = 0.0;
    for (const auto& b : s.blocks) worst = std::max(worst, (b.phi.colwise().norm().array() - 1.0).abs().maxCoeff());
    return worst;
}

inline double expect_phonons(const FockState& s) {
    CompensatedSum<double> sum;
    for (std::size_t p = 0; p < s.members(); ++p)
        for (const auto& b : s.blocks) {
            const auto col = b.phi.col(static_cast<Eigen::Index>(p));
            double occ = 0.0;
            for (Eigen::Index m = 1; m < col.size(); ++m) occ += double(m) * std::norm(col(m));
            sum.add(s.weights[p] * std::norm(b.c) * occ);
        }
    return sum.value();
}

inline cplx expect_b(const FockState& s) {
    CompensatedSum<cplx> sum;
    for (std::size_t p = 0; p < s.members(); ++p)
        for (const auto& b : s.blocks) {
            const auto col = b.phi.col(static_cast<Eigen::Index>(p));
            cplx v = 0.0;
            for (Eigen::Index m = 0; m + 1 < col.size(); ++m) v += std::conj(col(m)) * std::sqrt(double(m + 1)) * col(m + 1);
            sum.add(s.weights[p] * std::norm(b.c) * v);
        }
    return sum.value();
}

/// ρ_m = Σ_p w_p Σₙ |cₙ|² φₙₚφₙₚ†
inline Matrix reduced_mech(const FockState& s) {
    Matrix rho = Matrix::Zero(s.space.n_b, s.space.n_b);
    Eigen::VectorXd w(static_cast<Eigen::Index>(s.members()));
    for (std::size_t p = 0; p < s.members(); ++p) w(static_cast<Eigen::Index>(p)) = s.weights[p];
    for (const auto& b : s.blocks) rho += std::norm(b.c) * (b.phi * w.cast<cplx>().asDiagonal() * b.phi.adjoint());
    return rho;
}

/// Tr ρ² for Hermitian ρ.
inline double purity(const Matrix& rho) { return rho.cwiseAbs2().sum(); }

struct FidelityReport {
    double min = 1.0;
    double weighted_mean = 1.0;
};

namespace detail {
inline void check_aligned(const FockState& a, const FockState& b) {
    if (a.space.n_b != b.space.n_b || a.members() != b.members() || a.blocks.size() != b.blocks.size())
        throw ConfigError("fidelity: states live in different spaces");
    for (std::size_t i = 0; i < a.blocks.size(); ++i)
        if (a.blocks[i].n != b.blocks[i].n) throw ConfigError("fidelity: block layouts differ");
}
} // namespace detail

/// |⟨ψ_p|ψ′_p⟩| per ensemble member.
inline FidelityReport fidelity(const FockState& a, const FockState& b) {
    detail::check_aligned(a, b);
    FidelityReport r;
    CompensatedSum<double> mean, wsum;
    for (std::size_t p = 0; p < a.members(); ++p) {
        const auto col = static_cast<Eigen::Index>(p);
        CompensatedSum<cplx> overlap;
        for (std::size_t i = 0; i < a.blocks.size(); ++i)
            overlap.add(std::conj(a.blocks[i].c) * b.blocks[i].c * a.blocks[i].phi.col(col).dot(b.blocks[i].phi.col(col)));
        const double f = std::abs(overlap.value());
        r.min = std::min(r.min, f);
        mean.add(a.weights[p] * f);
        wsum.add(a.weights[p]);
    }
    r.weighted_mean = mean.value() / wsum.value();
    return r;
}

struct BlockFidelity {
    int n = 0;
    double weight = 0.0; // |cₙ|²
    double min = 1.0;    // min over members of |⟨φₙₚ|φ′ₙₚ⟩|
};

inline std::vector<BlockFidelity> block_fidelity(const FockState& a, const FockState& b) {
    detail::check_aligned(a, b);
    std::vector<BlockFidelity> out;
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        BlockFidelity f{a.blocks[i].n, std::norm(a.blocks[i].c), 1.0};
        for (Eigen::Index p = 0; p < a.blocks[i].phi.cols(); ++p)
            f.min = std::min(f.min, std::abs(a.blocks[i].phi.col(p).dot(b.blocks[i].phi.col(p))));
        out.push_back(f);
    }
    return out;
}

/// Picks the entropy denominator whose τ = 0 value 1 − 1/C(r) matches the
/// oracle purity of the thermal state with parameter r (r > 0).
inline EntropyDenominator arbitrate_entropy_denominator(double r = 0.5, int n_b = 80, double eps_tail = 1e-12) {
    SystemConfig cfg;
    cfg.r_T = r;
    cfg.eps.tail = eps_tail;
    const double p = purity(reduced_mech(prepare_initial(cfg, FockSpace(2, n_b))));
    const double printed = std::abs(p - 1.0 / entropy_denominator(EntropyDenominator::printed, r));
    const double corrected = std::abs(p - 1.0 / entropy_denominator(EntropyDenominator::corrected, r));
    return corrected <= printed ? EntropyDenominator::corrected : EntropyDenominator::printed;
}

} // namespace crosskerr
