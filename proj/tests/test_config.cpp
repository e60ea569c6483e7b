#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "crosskerr/config.hpp"

using namespace crosskerr;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << text;
    return p;
}

} // namespace

TEST(Profile, EvaluatesEachShape) {
    EXPECT_EQ(CouplingProfile::constant(0.3)(7.0), 0.3);
    auto pw = CouplingProfile::piecewise({0, 5}, {0.1, 0.4});
    EXPECT_EQ(pw(5.0), 0.4);
    EXPECT_EQ(pw(4.999), 0.1);
    EXPECT_EQ(CouplingProfile::tabulated({0, 1}, {0, 2})(0.5), 1.0);
    auto s = CouplingProfile::sinusoid(0.05, 2.0, 0.3, 0.01);
    EXPECT_DOUBLE_EQ(s(1.7), 0.05 * std::sin(2.0 * 1.7 + 0.3) + 0.01);
}

TEST(Profile, TabulatedClampsOutsideRange) {
    auto t = CouplingProfile::tabulated({1, 2}, {3, 5});
    EXPECT_EQ(t(0.0), 3.0);
    EXPECT_EQ(t(10.0), 5.0);
    EXPECT_NEAR(t.integral(4.0), 3.0 + 4.0 + 10.0, 1e-14);
}

TEST(Profile, PiecewiseUsesFirstValueBeforeFirstBreakpoint) {
    auto p = CouplingProfile::piecewise({1, 3}, {0.2, -0.1});
    EXPECT_EQ(p(0.5), 0.2);
    EXPECT_NEAR(p.integral(4.0), 0.2 * 3 - 0.1 * 1, 1e-15);
}

TEST(Profile, IntegralsMatchAntiderivatives) {
    EXPECT_DOUBLE_EQ(CouplingProfile::constant(0.7).integral(3.0), 2.1);
    const double A = 0.4, w = 1.7;
    for (double tau : {0.3, 2.0, 9.5})
        EXPECT_NEAR(CouplingProfile::sinusoid(A, w).integral(tau), A * (1 - std::cos(w * tau)) / w, 1e-15);

    std::vector<double> ts, vs;
    for (int k = 0; k <= 20; ++k) {
        ts.push_back(0.1 * k);
        vs.push_back(0.1 * ts.back());
    }
    // Linear data: the interpolant is exact, antiderivative 0.05 τ².
    EXPECT_NEAR(CouplingProfile::tabulated(ts, vs).integral(2.0), 0.2, 1e-10);
    EXPECT_NEAR(CouplingProfile::tabulated(ts, vs).integral(1.234), 0.05 * 1.234 * 1.234, 1e-10);
}

TEST(Profile, IntegralStartsAtZeroAndIsAdditive) {
    const std::vector<CouplingProfile> profiles{
        CouplingProfile::constant(-0.2), CouplingProfile::sinusoid(0.3, 2.2, 0.4, -0.05),
        CouplingProfile::piecewise({0, 1.5, 4}, {0.1, -0.3, 0.25}),
        CouplingProfile::tabulated({0, 0.7, 2.5, 3}, {0.1, 0.4, -0.2, 0.0})};
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 6.0);
    for (const auto& p : profiles) {
        EXPECT_EQ(p.integral(0.0), 0.0);
        for (int i = 0; i < 20; ++i) {
            double a = u(rng), b = u(rng);
            if (a > b) std::swap(a, b);
            // split at breakpoints: the quadrature does not converge across a jump
            std::vector<double> cuts{a};
            for (double x : p.breaks())
                if (x > a && x < b) cuts.push_back(x);
            cuts.push_back(b);
            double piece = 0.0;
            for (std::size_t j = 0; j + 1 < cuts.size(); ++j)
                piece += integrate([&](double t) { return p(t); }, cuts[j], cuts[j + 1], 1e-12);
            EXPECT_NEAR(p.integral(a) + piece, p.integral(b), 2e-10);
        }
    }
}

TEST(Profile, RejectsUnsortedBreakpoints) {
    EXPECT_THROW(CouplingProfile::piecewise({0, 2, 1}, {1, 2, 3}), ConfigError);
    EXPECT_THROW(CouplingProfile::tabulated({0, 0}, {1, 2}), ConfigError);
}

TEST(Rescale, UnitFrequencyIsIdentity) {
    DimensionfulConfig d;
    d.omega_m = 1.0;
    d.g1_plus = CouplingProfile::sinusoid(0.1, 0.5, 0.2, 0.01);
    d.g2_prime = CouplingProfile::constant(0.03);
    const auto c = rescale(d);
    for (double tau : {0.0, 1.0, 3.3}) {
        EXPECT_DOUBLE_EQ(c.g1_plus(tau), d.g1_plus(tau));
        EXPECT_DOUBLE_EQ(c.g2_prime(tau), 0.03);
    }
}

TEST(Rescale, DividesCouplingsByMechanicalFrequency) {
    DimensionfulConfig d;
    d.omega_m = 2.0;
    d.g1_plus = CouplingProfile::constant(0.2);
    EXPECT_DOUBLE_EQ(rescale(d).g1_plus(0.0), 0.1);
    d.omega_m = 0.0;
    EXPECT_THROW(rescale(d), ConfigError);
}

TEST(Rescale, AgreesWithDimensionfulEvaluation) {
    DimensionfulConfig d;
    d.omega_m = 3.7e6;
    d.omega_c = CouplingProfile::sinusoid(2.0e5, 1.1e6, 0.4, 5.0e4);
    d.g1_plus = CouplingProfile::piecewise({0, 1e-6, 3e-6}, {1e4, 2e4, -5e3});
    d.g1_minus = CouplingProfile::tabulated({0, 1e-6, 4e-6}, {0, 3e3, 1e3});
    d.t_max = 5e-6;
    const auto c = rescale(d);
    EXPECT_DOUBLE_EQ(c.tau_max, d.omega_m * d.t_max);
    for (double tau : {0.05, 1.3, 3.7, 11.0, 15.2}) {
        const double t = tau / d.omega_m;
        for (auto [dim, dl] : {std::pair{&d.omega_c, &c.omega_c}, {&d.g1_plus, &c.g1_plus}, {&d.g1_minus, &c.g1_minus}}) {
            const double expect = (*dim)(t) / d.omega_m;
            EXPECT_NEAR((*dl)(tau), expect, 1e-12 * std::max(1e-300, std::abs(expect)));
        }
    }
    // Sinusoid parameters transform as amplitude/ω_m and frequency/ω_m.
    const auto& s = std::get<CouplingProfile::Sinusoid>(c.omega_c.shape());
    EXPECT_DOUBLE_EQ(s.amplitude, 2.0e5 / 3.7e6);
    EXPECT_DOUBLE_EQ(s.frequency, 1.1e6 / 3.7e6);
}

TEST(ThermalR, ZeroTemperature) { EXPECT_EQ(thermal_r(0.0, 1.0), 0.0); }

TEST(ThermalR, HalfTanh) {
    // ħω/(2k_B T) = ln 2 with ħ = k_B = 1, ω = 1
    const double r = thermal_r(1.0 / (2.0 * std::log(2.0)), 1.0, 1.0, 1.0);
    EXPECT_NEAR(std::tanh(r), 0.5, 1e-15);
    EXPECT_NEAR(r, std::atanh(0.5), 1e-15);
}

TEST(ThermalR, OccupationIsBoseEinstein) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> temp(0.01, 5.0), freq(0.1, 3.0);
    for (int i = 0; i < 10; ++i) {
        const double T = temp(rng), w = freq(rng);
        const double s = std::sinh(thermal_r(T, w, 1.0, 1.0));
        const double bose = 1.0 / std::expm1(w / T);
        EXPECT_NEAR(s * s, bose, 1e-12 * std::max(1.0, bose));
    }
    EXPECT_THROW(thermal_r(-1.0, 1.0), ConfigError);
}

TEST(ParseConfig, GrammarExamples) {
    const auto c = parse_config("g2_prime = constant:0.1\nmu = 1.0+0.5i\ng1_plus = sin:0.05,2.0,0,0\n");
    EXPECT_EQ(c.g2_prime(3.0), 0.1);
    EXPECT_EQ(c.mu, cplx(1.0, 0.5));
    const auto& s = std::get<CouplingProfile::Sinusoid>(c.g1_plus.shape());
    EXPECT_EQ(s.amplitude, 0.05);
    EXPECT_EQ(s.frequency, 2.0);
    EXPECT_EQ(s.phase, 0.0);
    EXPECT_EQ(s.offset, 0.0);
}

TEST(ParseConfig, ComplexLiterals) {
    EXPECT_EQ(parse_complex("2"), cplx(2, 0));
    EXPECT_EQ(parse_complex("-1.5i"), cplx(0, -1.5));
    EXPECT_EQ(parse_complex("1e-3-2e+2i"), cplx(1e-3, -200));
    EXPECT_EQ(parse_complex("0.5-i"), cplx(0.5, -1));
    EXPECT_THROW(parse_complex("1+2j"), ConfigError);
}

TEST(ParseConfig, ReportsLineAndColumn) {
    try {
        parse_config("mu = 1\n# comment\n  bogus = 3\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_EQ(e.column(), 3);
    }
    try {
        parse_config("r_T = abc\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 1);
        EXPECT_EQ(e.column(), 6);
    }
}

TEST(ParseConfig, DomainErrors) {
    EXPECT_THROW(parse_config("r_T = -0.1\n"), ConfigError);
    EXPECT_THROW(parse_config("cutoff_b = 1\n"), ConfigError);
    EXPECT_THROW(parse_config("eps_quad = 0\n"), ConfigError);
    EXPECT_THROW(parse_config("mu = 1\nmu = 2\n"), ConfigError);
    EXPECT_THROW(parse_config("samples = 2.5\n"), ConfigError);
    EXPECT_THROW(parse_config("g1_plus = cos:1\n"), ConfigError);
    EXPECT_THROW(parse_config("g1_plus = piecewise:0:1;0:2\n"), ConfigError);
}

TEST(ParseConfig, TableProfileResolvesRelativePath) {
    const auto dir = std::filesystem::temp_directory_path() / "crosskerr_table_test";
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "g.csv") << "tau,value\n# comment\n0,0\n1,2\n";
    const auto c = parse_config("g1_minus = table:g.csv\n", dir);
    EXPECT_EQ(c.g1_minus(0.5), 1.0);
    EXPECT_THROW(parse_config("g1_minus = table:missing.csv\n", dir), ConfigError);
}

TEST(ParseConfig, PrintRoundTrips) {
    const auto table = write_temp("crosskerr_rt.csv", "0,0.1\n2,0.3\n");
    std::ostringstream text;
    text << "omega_c = sin:0.1,0.3,0.7,2\n"
         << "g1_plus = piecewise:0:0.01;2.5:0.03\n"
         << "g1_minus = table:" << table.string() << "\n"
         << "g2_plus = constant:0.1234567890123\n"
         << "mu = 0.3-0.7i\nr_T = 0.25\ntau_max = 12.5\nsamples = 17\n"
         << "cutoff_a = 9\ncutoff_b = 33\neps_quad = 3e-11\noracle_dt = 0.002\n";
    const auto a = parse_config(text.str());
    const auto printed = print_config(a);
    const auto b = parse_config(printed);
    EXPECT_EQ(print_config(b), printed);
    for (double tau : {0.0, 0.9, 2.5, 7.0}) {
        EXPECT_EQ(a.omega_c(tau), b.omega_c(tau));
        EXPECT_EQ(a.g1_plus(tau), b.g1_plus(tau));
        EXPECT_EQ(a.g1_minus(tau), b.g1_minus(tau));
        EXPECT_EQ(a.g2_plus(tau), b.g2_plus(tau));
    }
    EXPECT_EQ(a.mu, b.mu);
    EXPECT_EQ(a.eps.quadrature, b.eps.quadrature);
    EXPECT_EQ(a.cutoff_b, b.cutoff_b);
}
