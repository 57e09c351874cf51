// SPDX-License-Identifier: Apache-2.0
//
// fedopt-lab: federated-optimization experiment runner.
//
//   fedopt-lab run <config.json>      execute one configured run
//   fedopt-lab sweep <config.json>    Cartesian sweep over the config's axes
//   fedopt-lab calc rate|pac|cov ...  theory calculators
//
// Global flags: --jobs N (worker threads), --seed S (override config seed).
// The FEDOPT_LAB_OUT environment variable overrides the output root for
// relative output paths.

#include <CLI11.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "fedopt/runner.hpp"
#include "fedopt/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"federated-optimization laboratory"};
    app.set_version_flag("--version", std::string(fedopt::kVersion));
    app.require_subcommand(1);

    int jobs = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--jobs", jobs, "max worker threads (clients in a run, cells in a sweep)");
    app.add_option("--seed", seed, "override the config master seed")
        ->each([&](const std::string&) { seed_set = true; });

    std::string run_config, sweep_config;
    CLI::App* run_cmd = app.add_subcommand("run", "execute one configured run");
    run_cmd->fallthrough();
    run_cmd->add_option("config", run_config, "path to a JSON run config")->required();
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the config's sweep axes");
    sweep_cmd->fallthrough();
    sweep_cmd->add_option("config", sweep_config, "path to a JSON sweep config")->required();

    CLI::App* calc_cmd = app.add_subcommand("calc", "theory calculators");
    calc_cmd->fallthrough();
    calc_cmd->require_subcommand(1);

    fedopt::RateInputs rate;
    CLI::App* rate_cmd = calc_cmd->add_subcommand("rate", "convergence-rate value");
    rate_cmd->fallthrough();
    rate_cmd->add_option("--L", rate.smoothness, "smoothness constant")->required();
    rate_cmd->add_option("--delta", rate.delta, "initial suboptimality f(x0) - f*")->required();
    rate_cmd->add_option("--sigma-l", rate.sigma_l, "gradient noise level")->required();
    rate_cmd->add_option("--S", rate.clients, "participating clients per round")->required();
    rate_cmd->add_option("--K", rate.local_steps, "local steps per round")->required();
    rate_cmd->add_option("--R", rate.rounds, "communication rounds")->required();
    rate_cmd->add_option("--eps", rate.eps, "preconditioner epsilon");

    fedopt::PacInputs pac;
    double pac_sigma_fill = -1.0;
    std::int64_t pac_dim = 0;
    CLI::App* pac_cmd = calc_cmd->add_subcommand("pac", "PAC-Bayes generalization bound");
    pac_cmd->fallthrough();
    pac_cmd->add_option("--sigmas", pac.sigmas, "Hessian eigenvalues (repeatable)");
    pac_cmd->add_option("--sigma", pac_sigma_fill, "constant eigenvalue, combined with --d");
    pac_cmd->add_option("--d", pac_dim, "dimension when using --sigma");
    pac_cmd->add_option("--lambda", pac.lambda, "weight decay")->required();
    pac_cmd->add_option("--eta", pac.eta, "learning rate")->required();
    pac_cmd->add_option("--rho", pac.rho, "prior variance")->required();
    pac_cmd->add_option("--b", pac.b, "batch size")->required();
    pac_cmd->add_option("--n", pac.n, "training set size")->required();
    pac_cmd->add_option("--tau", pac.tau, "confidence parameter in (0,1)")->required();
    pac_cmd->add_option("--xstar-norm", pac.xstar_norm, "norm of the optimum");

    fedopt::CovCalcInputs cov;
    double cov_h_scalar = 0.0;
    bool cov_h_set = false;
    CLI::App* cov_cmd = calc_cmd->add_subcommand("cov", "stationary covariance (Hessian diag)");
    cov_cmd->fallthrough();
    cov_cmd->add_option("--H", cov_h_scalar, "scalar curvature H")
        ->each([&](const std::string&) { cov_h_set = true; });
    cov_cmd->add_option("--h-diag", cov.h_diag, "diagonal of H (repeatable)");
    cov_cmd->add_option("--eta", cov.eta, "learning rate")->required();
    cov_cmd->add_option("--b", cov.b, "batch/participation factor")->required();
    cov_cmd->add_option("--lambda", cov.lambda, "weight decay")->required();
    cov_cmd->add_flag("--empirical", cov.empirical, "also simulate the discrete dynamics");
    cov_cmd->add_option("--steps", cov.steps, "simulation steps");
    cov_cmd->add_option("--burn-in", cov.burn_in, "burn-in steps discarded");
    cov_cmd->add_option("--sim-seed", cov.seed, "simulation seed");

    CLI11_PARSE(app, argc, argv);

    fedopt::CliOverrides overrides;
    if (jobs > 0) overrides.jobs = jobs;
    if (seed_set) overrides.seed = seed;

    if (run_cmd->parsed()) return fedopt::cmd_run(run_config, overrides);
    if (sweep_cmd->parsed()) return fedopt::cmd_sweep(sweep_config, overrides);
    if (rate_cmd->parsed()) return fedopt::cmd_calc_rate(rate);
    if (pac_cmd->parsed()) {
        if (pac.sigmas.empty()) {
            if (pac_sigma_fill < 0.0 || pac_dim <= 0) {
                std::cerr << "config error: provide --sigmas or both --sigma and --d\n";
                return fedopt::kExitConfig;
            }
            pac.sigmas.assign(static_cast<std::size_t>(pac_dim), pac_sigma_fill);
        }
        return fedopt::cmd_calc_pac(pac);
    }
    if (cov_cmd->parsed()) {
        if (cov_h_set) cov.h_diag.insert(cov.h_diag.begin(), cov_h_scalar);
        return fedopt::cmd_calc_cov(cov);
    }
    return fedopt::kExitConfig;
}
