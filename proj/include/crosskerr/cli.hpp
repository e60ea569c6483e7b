#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "analytic.hpp"
#include "config.hpp"
#include "decoupled.hpp"
#include "errors.hpp"
#include "fock.hpp"
#include "observables.hpp"

namespace crosskerr::cli {

enum ExitCode { kSuccess = 0, kConfigError = 1, kNumericalError = 2 };

struct SweepRange {
    double start = 0.0;
    double stop = 0.0;
    int count = 1;

    std::vector<double> values() const {
        if (count == 1) return {start};
        return linspace(start, stop, static_cast<std::size_t>(count));
    }
};

/// `start:stop:count`
inline SweepRange parse_range(std::string_view text) {
    const auto parts = crosskerr::detail::split(text, ':');
    if (parts.size() != 3) throw ConfigError("range must be start:stop:count, got '" + std::string(text) + "'");
    SweepRange r{crosskerr::detail::parse_real(parts[0], "range start"), crosskerr::detail::parse_real(parts[1], "range stop"), 0};
    const double count = crosskerr::detail::parse_real(parts[2], "range count");
    if (count < 1 || count != std::floor(count) || count > 1e6) throw ConfigError("range count must be a positive integer");
    r.count = static_cast<int>(count);
    return r;
}

struct RunManifest {
    std::string subcommand;
    std::filesystem::path config_path;
    std::filesystem::path out_path; // empty: write to the output stream
    std::optional<double> tolerance;
    std::optional<double> oracle_dt;
    std::optional<int> cutoff_b;
    std::optional<int> n_max;
    std::optional<int> n_min;
    std::optional<EntropyDenominator> entropy_denominator; // empty: arbitrated by the oracle
    unsigned threads = 1;
    std::string sweep_parameter;
    std::string sweep_range;
};

inline EntropyDenominator parse_entropy_denominator(std::string_view s) {
    if (s == "printed") return EntropyDenominator::printed;
    if (s == "corrected") return EntropyDenominator::corrected;
    throw ConfigError("entropy denominator must be 'printed' or 'corrected'");
}

/// %.17g, the fixed CSV number format.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

struct Context {
    SystemConfig cfg;
    EntropyDenominator denom = EntropyDenominator::corrected;
    double tolerance = 1e-6;
    std::uint64_t hash = 0;
};

inline std::string provenance(const std::string& subcommand, const Context& ctx, int n_max) {
    char hash[24];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(ctx.hash));
    std::ostringstream h;
    h << "# crosskerr " << subcommand << "\n"
      << "# config_hash=" << hash << "\n"
      << "# eps_quad=" << num(ctx.cfg.eps.quadrature) << " eps_ode=" << num(ctx.cfg.eps.ode)
      << " eps_tail=" << num(ctx.cfg.eps.tail) << "\n"
      << "# cutoff_a=" << ctx.cfg.cutoff_a << " cutoff_b=" << ctx.cfg.cutoff_b << " n_max=" << n_max
      << " oracle_dt=" << num(ctx.cfg.oracle_dt) << "\n"
      << "# entropy_denominator=" << to_string(ctx.denom) << "\n";
    return h.str();
}

inline EngineOptions engine_options(const RunManifest& m) {
    EngineOptions o;
    if (m.n_max) o.n_max = *m.n_max;
    o.workers = m.threads;
    return o;
}

inline void emit_warnings(const AnalyticEngine& e, std::ostream& err) {
    for (const auto& w : e.warnings()) err << "warning: " << w << "\n";
}

inline std::string cmd_evolve(const RunManifest& m, const Context& ctx, std::ostream& err, bool entropy_only) {
    const auto grid = ctx.cfg.grid();
    const bool with_entropy = ctx.cfg.squeezing_free();
    if (entropy_only && !with_entropy) throw ConfigError("entropy requires g2_plus = g2_minus = 0 (no squeezing)");
    AnalyticEngine engine(ctx.cfg, grid, engine_options(m));
    emit_warnings(engine, err);
    if (!with_entropy) err << "warning: squeezing couplings present; S_N_analytic column left empty\n";
    std::ostringstream out;
    out << provenance(m.subcommand, ctx, engine.n_max());
    out << (entropy_only ? "tau,S_N_analytic\n" : "tau,N_b_analytic,Re_b,Im_b,S_N_analytic\n");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const std::string s = with_entropy ? num(engine.linear_entropy(k, ctx.denom)) : "";
        if (entropy_only) {
            out << num(grid[k]) << "," << s << "\n";
            continue;
        }
        const cplx b = engine.mean_b(k);
        out << num(grid[k]) << "," << num(engine.phonon_number(k)) << "," << num(b.real()) << "," << num(b.imag())
            << "," << s << "\n";
    }
    return out.str();
}

struct CompareResult {
    std::string csv;
    bool pass = true;
};

inline CompareResult cmd_compare(const RunManifest& m, const Context& ctx, std::ostream& err) {
    const auto& cfg = ctx.cfg;
    const auto grid = cfg.grid();
    const FockSpace space = FockSpace::from(cfg);
    EngineOptions eo = engine_options(m);
    if (!m.n_max) eo.n_max = space.n_a - 1; // one branch per oracle block
    AnalyticEngine engine(cfg, grid, eo);
    emit_warnings(engine, err);
    const bool with_entropy = cfg.squeezing_free();

    FockState initial = prepare_initial(cfg, space);
    const bool decoupled = std::all_of(initial.blocks.begin(), initial.blocks.end(),
                                       [&](const FockBlock& b) { return b.n <= engine.n_max(); });
    PropagatorOptions po;
    po.dt = cfg.oracle_dt;
    po.workers = m.threads;

    std::ostringstream out;
    out << provenance(m.subcommand, ctx, engine.n_max());
    out << "tau,N_b_analytic,N_b_oracle,abs_err,rel_err,S_N_analytic,S_N_oracle,fidelity_min\n";
    FockState state = initial;
    double worst_rel = 0.0, worst_entropy = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (k > 0) propagate(state, cfg, grid[k - 1], grid[k], po);
        const double na = engine.phonon_number(k);
        const double no = expect_phonons(state);
        const double abs_err = std::abs(na - no);
        const double rel_err = no != 0.0 ? abs_err / std::abs(no) : abs_err;
        worst_rel = std::max(worst_rel, rel_err);
        const double so = 1.0 - purity(reduced_mech(state));
        std::string sa;
        if (with_entropy) {
            const double s = engine.linear_entropy(k, ctx.denom);
            worst_entropy = std::max(worst_entropy, std::abs(s - so));
            sa = num(s);
        }
        const std::string fid = decoupled ? num(fidelity(state, apply_decoupled(engine, k, initial, m.threads)).min) : "";
        out << num(grid[k]) << "," << num(na) << "," << num(no) << "," << num(abs_err) << "," << num(rel_err) << ","
            << sa << "," << num(so) << "," << fid << "\n";
    }
    CompareResult r;
    r.pass = worst_rel <= ctx.tolerance && worst_entropy <= ctx.tolerance;
    out << "# verdict: " << (r.pass ? "PASS" : "FAIL") << " max_rel_err=" << num(worst_rel)
        << " max_S_N_abs_err=" << num(worst_entropy) << " tolerance=" << num(ctx.tolerance) << "\n";
    r.csv = out.str();
    return r;
}

inline std::string cmd_bogoliubov(const RunManifest& m, const Context& ctx, std::ostream&) {
    const auto& cfg = ctx.cfg;
    const auto grid = cfg.grid();
    const int n_min = m.n_min.value_or(0);
    const int n_max = m.n_max.value_or(poisson_cutoff(std::norm(cfg.mu), cfg.eps.tail));
    if (n_min < 0 || n_max < n_min) throw ConfigError("photon-number range must satisfy 0 <= n_min <= n_max");
    const bool closed = has_closed_form(cfg);
    const auto count = static_cast<std::size_t>(n_max - n_min + 1);
    auto ode = parallel_map(count, m.threads, [&](std::size_t i) {
        return bogoliubov_general(n_min + static_cast<int>(i), cfg, grid, cfg.eps.ode);
    });

    std::ostringstream out;
    out << provenance(m.subcommand, ctx, n_max);
    out << "tau,n,route,Re_alpha,Im_alpha,Re_beta,Im_beta,identity_residual,route_deviation\n";
    KerrPolar polar{};
    double g2p = 0.0;
    if (closed && !cfg.squeezing_free()) {
        polar = polar_g2(cfg.g2_plus(0.0), cfg.g2_minus(0.0));
        g2p = cfg.g2_prime(0.0);
    }
    auto row = [&](double tau, int n, const char* route, const Bogoliubov& b, const std::string& dev) {
        out << num(tau) << "," << n << "," << route << "," << num(b.alpha.real()) << "," << num(b.alpha.imag()) << ","
            << num(b.beta.real()) << "," << num(b.beta.imag()) << "," << num(b.identity_residual()) << "," << dev
            << "\n";
    };
    for (std::size_t i = 0; i < count; ++i) {
        const int n = n_min + static_cast<int>(i);
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const Bogoliubov& o = ode[i].coeff[k];
            if (closed) {
                const Bogoliubov c = cfg.squeezing_free() ? Bogoliubov{}
                                                          : bogoliubov_constant(n, grid[k], polar.chi, polar.phi, g2p);
                const std::string dev = num(std::max(std::abs(c.alpha - o.alpha), std::abs(c.beta - o.beta)));
                row(grid[k], n, "closed_form", c, dev);
                row(grid[k], n, "ode", o, dev);
            } else {
                row(grid[k], n, "ode", o, "");
            }
        }
    }
    return out.str();
}

inline std::string cmd_sweep(const RunManifest& m, const Context& ctx, std::ostream& err) {
    const std::string& p = m.sweep_parameter;
    if (p != "g1_plus" && p != "g2_prime" && p != "chi2" && p != "mu" && p != "r_T")
        throw ConfigError("unknown sweep parameter '" + p + "' (expected g1_plus, g2_prime, chi2, mu or r_T)");
    const auto range = parse_range(m.sweep_range);
    double phase2 = 0.0; // 2φ₂, kept fixed while χ₂ varies
    if (p == "chi2") {
        if (!ctx.cfg.g2_plus.is_constant() || !ctx.cfg.g2_minus.is_constant())
            throw ConfigError("sweeping chi2 requires constant g2_plus and g2_minus");
        phase2 = 2.0 * polar_g2(ctx.cfg.g2_plus(0.0), ctx.cfg.g2_minus(0.0)).phi;
    }
    const double mu_phase = std::arg(ctx.cfg.mu);

    std::ostringstream body;
    body << p << ",tau,N_b_analytic,Delta_N_b,Re_b,Im_b,S_N_analytic\n";
    int n_max_seen = 0;
    for (double v : range.values()) {
        SystemConfig cfg = ctx.cfg;
        if (p == "g1_plus") cfg.g1_plus = CouplingProfile::constant(v);
        else if (p == "g2_prime") cfg.g2_prime = CouplingProfile::constant(v);
        else if (p == "chi2") {
            cfg.g2_plus = CouplingProfile::constant(v * std::cos(phase2));
            cfg.g2_minus = CouplingProfile::constant(v * std::sin(phase2));
        } else if (p == "mu") cfg.mu = std::polar(v, mu_phase);
        else cfg.r_T = v;
        cfg.validate();
        const auto grid = cfg.grid();
        AnalyticEngine engine(cfg, grid, engine_options(m));
        emit_warnings(engine, err);
        n_max_seen = std::max(n_max_seen, engine.n_max());
        const std::size_t k = grid.size() - 1;
        const double nb = engine.phonon_number(k);
        const cplx b = engine.mean_b(k);
        const std::string s = cfg.squeezing_free() ? num(engine.linear_entropy(k, ctx.denom)) : "";
        body << num(v) << "," << num(grid[k]) << "," << num(nb) << "," << num(nb - cfg.initial_phonons()) << ","
             << num(b.real()) << "," << num(b.imag()) << "," << s << "\n";
    }
    return provenance(m.subcommand, ctx, n_max_seen) + body.str();
}

} // namespace detail

/// Runs one subcommand. The CSV goes to m.out_path when set, otherwise to `out`.
/// Diagnostics go to `err`. Returns the process exit code.
inline int run(const RunManifest& m, std::ostream& out, std::ostream& err) {
    try {
        if (m.config_path.empty()) throw ConfigError("--config is required");
        std::ifstream in(m.config_path);
        if (!in) throw ConfigError("cannot open config '" + m.config_path.string() + "'");
        std::stringstream text;
        text << in.rdbuf();

        detail::Context ctx;
        ctx.cfg = parse_config(text.str(), m.config_path.parent_path());
        if (m.oracle_dt) ctx.cfg.oracle_dt = *m.oracle_dt;
        if (m.cutoff_b) ctx.cfg.cutoff_b = *m.cutoff_b;
        ctx.cfg.validate();
        if (m.tolerance) {
            if (!(*m.tolerance > 0.0)) throw ConfigError("--tolerance must be > 0");
            ctx.tolerance = *m.tolerance;
        }
        if (m.n_max && *m.n_max < 0) throw ConfigError("--n-max must be >= 0");
        if (m.threads == 0) throw ConfigError("--threads must be >= 1");
        ctx.denom = m.entropy_denominator ? *m.entropy_denominator : arbitrate_entropy_denominator();
        ctx.hash = fnv1a(print_config(ctx.cfg));

        std::string csv;
        int code = kSuccess;
        if (m.subcommand == "evolve" || m.subcommand == "entropy") {
            csv = detail::cmd_evolve(m, ctx, err, m.subcommand == "entropy");
        } else if (m.subcommand == "compare") {
            auto r = detail::cmd_compare(m, ctx, err);
            csv = std::move(r.csv);
            if (!r.pass) code = kNumericalError;
            err << (r.pass ? "PASS" : "FAIL") << "\n";
        } else if (m.subcommand == "bogoliubov") {
            csv = detail::cmd_bogoliubov(m, ctx, err);
        } else if (m.subcommand == "sweep") {
            csv = detail::cmd_sweep(m, ctx, err);
        } else {
            throw ConfigError("unknown subcommand '" + m.subcommand + "'");
        }

        if (m.out_path.empty()) {
            out << csv;
        } else {
            std::ofstream f(m.out_path, std::ios::binary);
            if (!f) throw ConfigError("cannot write '" + m.out_path.string() + "'");
            f << csv;
        }
        return code;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalError& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumericalError;
    }
}

} // namespace crosskerr::cli
