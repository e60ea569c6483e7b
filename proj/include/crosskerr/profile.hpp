#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "errors.hpp"

namespace crosskerr {

/// Writes a double so that reading it back yields the same value.
inline std::string format_double(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

/// Real coupling schedule g(τ) on τ ≥ 0.
///
/// Four shapes are supported:
///  - constant:   g(τ) = value
///  - sinusoid:   g(τ) = amplitude·sin(frequency·τ + phase) + offset
///  - piecewise:  right-continuous steps; g(τ) = values[k] for breakpoints[k] ≤ τ < breakpoints[k+1],
///                and values[0] before the first breakpoint
///  - tabulated:  linear interpolation between samples, clamped to the end values outside the table
///
/// Integrals from 0 are exact for every shape (the tabulated case integrates the interpolant).
class CouplingProfile {
public:
    struct Constant {
        double value = 0.0;
    };
    struct Sinusoid {
        double amplitude = 0.0;
        double frequency = 0.0;
        double phase = 0.0;
        double offset = 0.0;
    };
    struct Piecewise {
        std::vector<double> breakpoints;
        std::vector<double> values;
    };
    struct Tabulated {
        std::vector<double> tau;
        std::vector<double> value;
        std::string source; // path the table was read from, kept for printing
    };
    using Shape = std::variant<Constant, Sinusoid, Piecewise, Tabulated>;

    CouplingProfile() : shape_(Constant{}) {}
    explicit CouplingProfile(Shape shape) : shape_(std::move(shape)) { validate(); }

    static CouplingProfile constant(double v) { return CouplingProfile(Constant{v}); }
    static CouplingProfile sinusoid(double amplitude, double frequency, double phase = 0.0, double offset = 0.0) {
        return CouplingProfile(Sinusoid{amplitude, frequency, phase, offset});
    }
    static CouplingProfile piecewise(std::vector<double> breakpoints, std::vector<double> values) {
        return CouplingProfile(Piecewise{std::move(breakpoints), std::move(values)});
    }
    static CouplingProfile tabulated(std::vector<double> tau, std::vector<double> value, std::string source = {}) {
        return CouplingProfile(Tabulated{std::move(tau), std::move(value), std::move(source)});
    }

    const Shape& shape() const noexcept { return shape_; }

    bool is_constant() const noexcept {
        if (std::holds_alternative<Constant>(shape_)) return true;
        if (auto s = std::get_if<Sinusoid>(&shape_)) return s->amplitude == 0.0;
        if (auto p = std::get_if<Piecewise>(&shape_))
            return std::all_of(p->values.begin(), p->values.end(), [&](double v) { return v == p->values.front(); });
        auto& t = std::get<Tabulated>(shape_);
        return std::all_of(t.value.begin(), t.value.end(), [&](double v) { return v == t.value.front(); });
    }

    bool is_zero() const noexcept { return is_constant() && (*this)(0.0) == 0.0; }

    double operator()(double tau) const {
        return std::visit([tau](const auto& s) { return eval(s, tau); }, shape_);
    }

    /// ∫₀^τ g(τ') dτ'
    double integral(double tau) const {
        return std::visit([tau](const auto& s) { return integrate(s, tau); }, shape_);
    }

    /// Points where g or its derivative jumps; quadrature splits there.
    std::vector<double> breaks() const {
        if (auto p = std::get_if<Piecewise>(&shape_)) return p->breakpoints;
        if (auto t = std::get_if<Tabulated>(&shape_)) return t->tau;
        return {};
    }

    /// The dimensionless profile g̃(τ) = g(τ/ω)/ω of a profile given in laboratory time.
    CouplingProfile rescaled(double omega) const {
        return std::visit(
            [omega](const auto& s) -> CouplingProfile {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return constant(s.value / omega);
                } else if constexpr (std::is_same_v<T, Sinusoid>) {
                    return sinusoid(s.amplitude / omega, s.frequency / omega, s.phase, s.offset / omega);
                } else if constexpr (std::is_same_v<T, Piecewise>) {
                    Piecewise r = s;
                    for (auto& b : r.breakpoints) b *= omega;
                    for (auto& v : r.values) v /= omega;
                    return CouplingProfile(r);
                } else {
                    Tabulated r = s;
                    for (auto& x : r.tau) x *= omega;
                    for (auto& v : r.value) v /= omega;
                    return CouplingProfile(r);
                }
            },
            shape_);
    }

    /// Profile spec in the config grammar.
    std::string spec() const {
        return std::visit(
            [](const auto& s) -> std::string {
                using T = std::decay_t<decltype(s)>;
                if constexpr (std::is_same_v<T, Constant>) {
                    return "constant:" + format_double(s.value);
                } else if constexpr (std::is_same_v<T, Sinusoid>) {
                    return "sin:" + format_double(s.amplitude) + "," + format_double(s.frequency) + "," +
                           format_double(s.phase) + "," + format_double(s.offset);
                } else if constexpr (std::is_same_v<T, Piecewise>) {
                    std::string out = "piecewise:";
                    for (std::size_t k = 0; k < s.values.size(); ++k) {
                        if (k) out += ";";
                        out += format_double(s.breakpoints[k]) + ":" + format_double(s.values[k]);
                    }
                    return out;
                } else {
                    return "table:" + s.source;
                }
            },
            shape_);
    }

private:
    Shape shape_;

    void validate() const {
        if (auto p = std::get_if<Piecewise>(&shape_)) {
            if (p->breakpoints.empty() || p->breakpoints.size() != p->values.size())
                throw ConfigError("piecewise profile needs one value per breakpoint");
            for (std::size_t k = 1; k < p->breakpoints.size(); ++k)
                if (!(p->breakpoints[k] > p->breakpoints[k - 1]))
                    throw ConfigError("piecewise breakpoints must be strictly increasing");
        } else if (auto t = std::get_if<Tabulated>(&shape_)) {
            if (t->tau.empty() || t->tau.size() != t->value.size())
                throw ConfigError("tabulated profile needs matching, non-empty tau/value columns");
            for (std::size_t k = 1; k < t->tau.size(); ++k)
                if (!(t->tau[k] > t->tau[k - 1])) throw ConfigError("tabulated tau samples must be strictly increasing");
        }
    }

    static double eval(const Constant& c, double) { return c.value; }
    static double eval(const Sinusoid& s, double tau) {
        return s.amplitude * std::sin(s.frequency * tau + s.phase) + s.offset;
    }
    static double eval(const Piecewise& p, double tau) {
        auto it = std::upper_bound(p.breakpoints.begin(), p.breakpoints.end(), tau);
        if (it == p.breakpoints.begin()) return p.values.front();
        return p.values[static_cast<std::size_t>(it - p.breakpoints.begin()) - 1];
    }
    static double eval(const Tabulated& t, double tau) {
        if (tau <= t.tau.front()) return t.value.front();
        if (tau >= t.tau.back()) return t.value.back();
        auto k = static_cast<std::size_t>(std::upper_bound(t.tau.begin(), t.tau.end(), tau) - t.tau.begin());
        const double w = (tau - t.tau[k - 1]) / (t.tau[k] - t.tau[k - 1]);
        return t.value[k - 1] + w * (t.value[k] - t.value[k - 1]);
    }

    static double integrate(const Constant& c, double tau) { return c.value * tau; }
    static double integrate(const Sinusoid& s, double tau) {
        const double osc = s.frequency == 0.0
                               ? s.amplitude * std::sin(s.phase) * tau
                               : s.amplitude * (std::cos(s.phase) - std::cos(s.frequency * tau + s.phase)) / s.frequency;
        return osc + s.offset * tau;
    }
    static double integrate(const Piecewise& p, double tau) {
        std::vector<double> cuts{0.0};
        for (double b : p.breakpoints)
            if (b > 0.0 && b < tau) cuts.push_back(b);
        cuts.push_back(tau);
        double acc = 0.0;
        for (std::size_t k = 1; k < cuts.size(); ++k)
            acc += eval(p, 0.5 * (cuts[k - 1] + cuts[k])) * (cuts[k] - cuts[k - 1]);
        return acc;
    }
    static double integrate(const Tabulated& t, double tau) {
        // Integrate the clamped interpolant from 0 to tau, segment by segment.
        auto segment = [&](double a, double b) {
            return 0.5 * (eval(t, a) + eval(t, b)) * (b - a);
        };
        std::vector<double> cuts{0.0};
        for (double x : t.tau)
            if (x > 0.0 && x < tau) cuts.push_back(x);
        cuts.push_back(tau);
        double acc = 0.0;
        for (std::size_t k = 1; k < cuts.size(); ++k) acc += segment(cuts[k - 1], cuts[k]);
        return acc;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_real(std::string_view text, const std::string& what) {
    text = trim(text);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
        throw ConfigError("invalid number '" + std::string(text) + "' in " + what);
    if (!std::isfinite(v)) throw ConfigError("non-finite number in " + what);
    return v;
}

} // namespace detail

/// Reads a two-column CSV table (τ,value). Lines starting with '#' and a
/// non-numeric header row are skipped.
inline CouplingProfile read_table_profile(const std::filesystem::path& path, const std::string& source) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open profile table '" + path.string() + "'");
    std::vector<double> tau, value;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cols = detail::split(t, ',');
        if (cols.size() != 2) throw ConfigError("profile table '" + path.string() + "' needs two columns: " + line);
        try {
            const double a = detail::parse_real(cols[0], "profile table");
            const double b = detail::parse_real(cols[1], "profile table");
            tau.push_back(a);
            value.push_back(b);
        } catch (const ConfigError&) {
            if (!first) throw;
        }
        first = false;
    }
    return CouplingProfile::tabulated(std::move(tau), std::move(value), source);
}

/// Parses `constant:<v>` | `sin:<A>,<w>,<phase>,<offset>` | `piecewise:<t0>:<v0>;<t1>:<v1>;...` | `table:<path>`.
/// Relative table paths resolve against `base_dir`.
inline CouplingProfile parse_profile(std::string_view text, const std::filesystem::path& base_dir = {}) {
    text = detail::trim(text);
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) throw ConfigError("profile spec '" + std::string(text) + "' lacks a kind prefix");
    const auto kind = text.substr(0, colon);
    const auto body = text.substr(colon + 1);
    if (kind == "constant") return CouplingProfile::constant(detail::parse_real(body, "constant profile"));
    if (kind == "sin") {
        auto parts = detail::split(body, ',');
        if (parts.size() != 4) throw ConfigError("sin profile takes amplitude,frequency,phase,offset");
        return CouplingProfile::sinusoid(detail::parse_real(parts[0], "sin amplitude"),
                                         detail::parse_real(parts[1], "sin frequency"),
                                         detail::parse_real(parts[2], "sin phase"),
                                         detail::parse_real(parts[3], "sin offset"));
    }
    if (kind == "piecewise") {
        std::vector<double> bps, vals;
        for (auto item : detail::split(body, ';')) {
            if (item.empty()) continue;
            auto pair = detail::split(item, ':');
            if (pair.size() != 2) throw ConfigError("piecewise entry '" + std::string(item) + "' must be <t>:<v>");
            bps.push_back(detail::parse_real(pair[0], "piecewise breakpoint"));
            vals.push_back(detail::parse_real(pair[1], "piecewise value"));
        }
        return CouplingProfile::piecewise(std::move(bps), std::move(vals));
    }
    if (kind == "table") {
        const std::string src(detail::trim(body));
        if (src.empty()) throw ConfigError("table profile needs a path");
        std::filesystem::path p(src);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        return read_table_profile(p, src);
    }
    throw ConfigError("unknown profile kind '" + std::string(kind) + "'");
}

} // namespace crosskerr
