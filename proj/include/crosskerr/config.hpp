#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "numeric.hpp"
#include "profile.hpp"

namespace crosskerr {

struct Tolerances {
    double quadrature = 1e-10; // absolute error per cumulative integral value
    double ode = 1e-9;         // local error target of the Bogoliubov integrator
    double tail = 1e-12;       // Poisson / thermal weight discarded by truncation
};

/// Complete dimensionless parameter set. Time is τ = ω_m t and every
/// frequency is in units of the mechanical frequency ω_m.
struct SystemConfig {
    CouplingProfile omega_c;
    CouplingProfile g1_plus, g1_minus;
    CouplingProfile g2_plus, g2_minus;
    CouplingProfile g2_prime;

    cplx mu{0.0, 0.0}; // coherent amplitude of the optical mode
    double r_T = 0.0;  // thermal parameter of the mechanical mode, N_b(0) = sinh² r_T

    double tau_max = 1.0;
    int samples = 101;
    int cutoff_a = 40;
    int cutoff_b = 40;
    double oracle_dt = 1e-3;
    Tolerances eps;

    /// g₂⁺ ≡ g₂⁻ ≡ 0: no squeezing sector.
    bool squeezing_free() const { return g2_plus.is_zero() && g2_minus.is_zero(); }

    bool time_independent() const {
        return omega_c.is_constant() && g1_plus.is_constant() && g1_minus.is_constant() && g2_plus.is_constant() &&
               g2_minus.is_constant() && g2_prime.is_constant();
    }

    double initial_phonons() const {
        const double s = std::sinh(r_T);
        return s * s;
    }

    std::vector<double> grid() const { return linspace(0.0, tau_max, static_cast<std::size_t>(samples)); }

    void validate() const {
        if (!(r_T >= 0.0) || !std::isfinite(r_T)) throw ConfigError("r_T must be a finite value >= 0");
        if (cutoff_a < 2 || cutoff_b < 2) throw ConfigError("Fock cutoffs must be >= 2");
        if (!(tau_max > 0.0)) throw ConfigError("tau_max must be > 0");
        if (samples < 2) throw ConfigError("samples must be >= 2");
        if (!(eps.quadrature > 0.0) || !(eps.ode > 0.0) || !(eps.tail > 0.0))
            throw ConfigError("tolerances must be > 0");
        if (!(oracle_dt > 0.0)) throw ConfigError("oracle_dt must be > 0");
    }
};

/// Physical parameter set in laboratory units. ħ and k_B are fields so tests
/// can work in natural units.
struct DimensionfulConfig {
    CouplingProfile omega_c; // rad/s, function of t
    double omega_m = 1.0;    // rad/s
    CouplingProfile g1_plus, g1_minus, g2_plus, g2_minus, g2_prime;
    double temperature = 0.0; // K
    double hbar = 1.054571817e-34;
    double k_B = 1.380649e-23;
    cplx mu{0.0, 0.0};
    double t_max = 1.0; // s
};

/// r with tanh r = exp(−ħω_m / (2 k_B T)); zero temperature gives r = 0.
inline double thermal_r(double temperature, double omega_m, double hbar = 1.054571817e-34, double k_B = 1.380649e-23) {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (!(omega_m > 0.0)) throw ConfigError("omega_m must be > 0");
    if (temperature == 0.0) return 0.0;
    return std::atanh(std::exp(-hbar * omega_m / (2.0 * k_B * temperature)));
}

inline SystemConfig rescale(const DimensionfulConfig& d) {
    if (!(d.omega_m > 0.0)) throw ConfigError("omega_m must be > 0");
    SystemConfig c;
    c.omega_c = d.omega_c.rescaled(d.omega_m);
    c.g1_plus = d.g1_plus.rescaled(d.omega_m);
    c.g1_minus = d.g1_minus.rescaled(d.omega_m);
    c.g2_plus = d.g2_plus.rescaled(d.omega_m);
    c.g2_minus = d.g2_minus.rescaled(d.omega_m);
    c.g2_prime = d.g2_prime.rescaled(d.omega_m);
    c.r_T = thermal_r(d.temperature, d.omega_m, d.hbar, d.k_B);
    c.mu = d.mu;
    c.tau_max = d.omega_m * d.t_max;
    return c;
}

/// Parses `a`, `a+bi`, `a-bi`, `bi`.
inline cplx parse_complex(std::string_view text) {
    text = detail::trim(text);
    if (text.empty()) throw ConfigError("empty complex literal");
    if (text.back() != 'i') return {detail::parse_real(text, "complex literal"), 0.0};
    auto body = text.substr(0, text.size() - 1);
    // The split point is the last sign that is not part of an exponent.
    std::size_t split = std::string_view::npos;
    for (std::size_t k = body.size(); k-- > 1;) {
        if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
            split = k;
            break;
        }
    }
    auto imag_part = [](std::string_view s) {
        if (s == "+" || s.empty()) return 1.0;
        if (s == "-") return -1.0;
        return detail::parse_real(s.front() == '+' ? s.substr(1) : s, "complex literal");
    };
    if (split == std::string_view::npos) return {0.0, imag_part(body)};
    return {detail::parse_real(body.substr(0, split), "complex literal"), imag_part(body.substr(split))};
}

inline std::string format_complex(cplx z) {
    return format_double(z.real()) + (std::signbit(z.imag()) ? "-" : "+") + format_double(std::abs(z.imag())) + "i";
}

/// Parses `key = value` lines ('#' starts a comment). Unknown and duplicate
/// keys are rejected; missing keys keep their defaults.
inline SystemConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
    SystemConfig c;
    std::set<std::string> seen;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        if (detail::trim(raw).empty()) {
            if (end == text.size()) break;
            continue;
        }
        const auto eq = raw.find('=');
        const int key_col = static_cast<int>(raw.find_first_not_of(" \t")) + 1;
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no, key_col);
        const std::string key(detail::trim(raw.substr(0, eq)));
        const auto value = detail::trim(raw.substr(eq + 1));
        const int value_col = static_cast<int>(eq) + 2;
        if (key.empty()) throw ConfigError("missing key", line_no, key_col);
        if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no, key_col);
        if (value.empty()) throw ConfigError("missing value for '" + key + "'", line_no, value_col);

        auto as_int = [&](std::string_view v) {
            const double x = detail::parse_real(v, key);
            if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError(key + " must be an integer", line_no, value_col);
            return static_cast<int>(x);
        };
        try {
            if (key == "omega_c") c.omega_c = parse_profile(value, base_dir);
            else if (key == "g1_plus") c.g1_plus = parse_profile(value, base_dir);
            else if (key == "g1_minus") c.g1_minus = parse_profile(value, base_dir);
            else if (key == "g2_plus") c.g2_plus = parse_profile(value, base_dir);
            else if (key == "g2_minus") c.g2_minus = parse_profile(value, base_dir);
            else if (key == "g2_prime") c.g2_prime = parse_profile(value, base_dir);
            else if (key == "mu") c.mu = parse_complex(value);
            else if (key == "r_T") c.r_T = detail::parse_real(value, key);
            else if (key == "tau_max") c.tau_max = detail::parse_real(value, key);
            else if (key == "samples") c.samples = as_int(value);
            else if (key == "cutoff_a") c.cutoff_a = as_int(value);
            else if (key == "cutoff_b") c.cutoff_b = as_int(value);
            else if (key == "eps_quad") c.eps.quadrature = detail::parse_real(value, key);
            else if (key == "eps_ode") c.eps.ode = detail::parse_real(value, key);
            else if (key == "eps_tail") c.eps.tail = detail::parse_real(value, key);
            else if (key == "oracle_dt") c.oracle_dt = detail::parse_real(value, key);
            else throw ConfigError("unknown key '" + key + "'", line_no, key_col);
        } catch (const ConfigError& e) {
            if (e.line() != 0) throw;
            throw ConfigError(e.what(), line_no, value_col);
        }
        if (end == text.size()) break;
    }
    c.validate();
    return c;
}

inline SystemConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

/// Canonical text form; parse_config(print_config(c)) reproduces c.
inline std::string print_config(const SystemConfig& c) {
    std::ostringstream out;
    out << "omega_c = " << c.omega_c.spec() << "\n"
        << "g1_plus = " << c.g1_plus.spec() << "\n"
        << "g1_minus = " << c.g1_minus.spec() << "\n"
        << "g2_plus = " << c.g2_plus.spec() << "\n"
        << "g2_minus = " << c.g2_minus.spec() << "\n"
        << "g2_prime = " << c.g2_prime.spec() << "\n"
        << "mu = " << format_complex(c.mu) << "\n"
        << "r_T = " << format_double(c.r_T) << "\n"
        << "tau_max = " << format_double(c.tau_max) << "\n"
        << "samples = " << c.samples << "\n"
        << "cutoff_a = " << c.cutoff_a << "\n"
        << "cutoff_b = " << c.cutoff_b << "\n"
        << "eps_quad = " << format_double(c.eps.quadrature) << "\n"
        << "eps_ode = " << format_double(c.eps.ode) << "\n"
        << "eps_tail = " << format_double(c.eps.tail) << "\n"
        << "oracle_dt = " << format_double(c.oracle_dt) << "\n";
    return out.str();
}

/// 64-bit FNV-1a, used to fingerprint configs in output headers.
inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace crosskerr
