#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "crosskerr/cli.hpp"

using crosskerr::cli::RunManifest;

namespace {

void add_common(CLI::App* sub, RunManifest& m, std::string& denom) {
    sub->add_option("--config", m.config_path, "configuration file")->required();
    sub->add_option("--out", m.out_path, "CSV output path (default: stdout)");
    sub->add_option("--cutoff-b", m.cutoff_b, "mechanical Fock cutoff N_b");
    sub->add_option("--n-max", m.n_max, "largest photon number kept in the analytic sums");
    sub->add_option("--entropy-denominator", denom, "thermal denominator of S_N")
        ->check(CLI::IsMember({"printed", "corrected"}));
    sub->add_option("--threads", m.threads, "worker threads (results do not depend on it)")
        ->check(CLI::PositiveNumber);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytic and brute-force time evolution of cross-Kerr coupled oscillators"};
    app.require_subcommand(1);
    RunManifest m;
    std::string denom;

    auto* evolve = app.add_subcommand("evolve", "analytic N_b, <b> and S_N over the sample grid");
    add_common(evolve, m, denom);

    auto* entropy = app.add_subcommand("entropy", "analytic S_N only (no squeezing)");
    add_common(entropy, m, denom);

    auto* compare = app.add_subcommand("compare", "analytic series against the truncated-Fock oracle");
    add_common(compare, m, denom);
    compare->add_option("--tolerance", m.tolerance, "PASS threshold for rel_err of N_b and abs error of S_N");
    compare->add_option("--oracle-dt", m.oracle_dt, "oracle step size");

    auto* bogo = app.add_subcommand("bogoliubov", "alpha and beta from the closed form and the ODE route");
    add_common(bogo, m, denom);
    bogo->add_option("--n-min", m.n_min, "smallest photon number");

    auto* sweep = app.add_subcommand("sweep", "observables at tau_max while one parameter varies");
    add_common(sweep, m, denom);
    sweep->add_option("parameter", m.sweep_parameter, "g1_plus, g2_prime, chi2, mu or r_T")->required();
    sweep->add_option("range", m.sweep_range, "start:stop:count")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : crosskerr::cli::kConfigError;
    }

    m.subcommand = app.get_subcommands().front()->get_name();
    if (!denom.empty()) m.entropy_denominator = crosskerr::cli::parse_entropy_denominator(denom);
    return crosskerr::cli::run(m, std::cout, std::cerr);
}
