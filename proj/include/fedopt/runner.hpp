// SPDX-License-Identifier: Apache-2.0
//
// Experiment runner behind the CLI: single runs, Cartesian sweeps with
// per-cell output directories and an aggregate table, and the calculator
// front-ends. Exit codes: 0 success, 2 configuration error, 3 domain or
// divergence error.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "fedopt/analysis.hpp"
#include "fedopt/config.hpp"
#include "fedopt/csv.hpp"
#include "fedopt/federation.hpp"
#include "fedopt/version.hpp"

namespace fedopt {

namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;

struct CliOverrides {
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
};

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
}

// FEDOPT_LAB_OUT, when set, becomes the root for relative output paths.
inline fs::path resolve_output_dir(const std::string& configured) {
    fs::path dir(configured);
    if (dir.is_absolute()) return dir;
    if (const char* root = std::getenv("FEDOPT_LAB_OUT")) return fs::path(root) / dir;
    return dir;
}

struct RunArtifacts {
    fs::path directory;
    std::vector<RoundMetrics> metrics;
    std::string config_hash;
};

// Executes one configured run and writes config_resolved.json, metrics.csv,
// and summary.json into `dir`.
inline RunArtifacts execute_run(const ExperimentConfig& cfg, const fs::path& dir) {
    const auto t0 = std::chrono::steady_clock::now();
    fs::create_directories(dir);

    const json resolved = resolved_config(cfg);
    {
        std::ofstream out(dir / "config_resolved.json");
        out << resolved.dump(2) << "\n";
    }

    auto task = make_task(cfg);
    std::vector<RoundMetrics> metrics = run(cfg.run, *task);

    {
        CsvWriter csv((dir / "metrics.csv").string(),
                      {"round", "loss", "grad_norm_sq", "drift", "v_variance", "eta_effective",
                       "bytes_up", "bytes_down"});
        for (const auto& m : metrics) {
            csv.write_row({std::to_string(m.round), format_double(m.loss),
                           format_double(m.grad_norm_sq), format_double(m.drift),
                           format_double(m.v_variance), format_double(m.eta_effective),
                           std::to_string(m.bytes_up), std::to_string(m.bytes_down)});
        }
    }

    RunArtifacts artifacts;
    artifacts.directory = dir;
    artifacts.config_hash = config_hash_hex(resolved);
    artifacts.metrics = std::move(metrics);

    json summary;
    summary["code_version"] = kVersion;
    summary["config_hash"] = artifacts.config_hash;
    summary["seed"] = cfg.run.seeds.master;
    summary["rounds_completed"] = artifacts.metrics.size();
    if (!artifacts.metrics.empty()) {
        const auto& last = artifacts.metrics.back();
        summary["final"] = {{"round", last.round},
                            {"loss", last.loss},
                            {"grad_norm_sq", last.grad_norm_sq},
                            {"drift", last.drift},
                            {"v_variance", last.v_variance}};
    } else {
        summary["final"] = nullptr;
    }
    summary["total_wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    {
        std::ofstream out(dir / "summary.json");
        out << summary.dump(2) << "\n";
    }
    return artifacts;
}

inline int cmd_run(const std::string& config_path, const CliOverrides& overrides) {
    try {
        ExperimentConfig cfg = parse_experiment(load_json_file(config_path));
        if (overrides.jobs) cfg.run.jobs = *overrides.jobs;
        if (overrides.seed) cfg.run.seeds.master = *overrides.seed;
        cfg.run.validate();
        const fs::path dir = resolve_output_dir(cfg.output_dir);
        const RunArtifacts artifacts = execute_run(cfg, dir);
        std::cout << "run complete: " << artifacts.metrics.size() << " rounds -> "
                  << artifacts.directory.string() << "\n";
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

namespace rundetail {

inline std::string axis_label(const std::string& axis) {
    if (axis == "clients_per_round") return "S";
    if (axis == "local_steps") return "K";
    if (axis == "blocks") return "B";
    return axis;
}

inline std::string value_label(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_float()) return format_double(v.get<double>());
    return v.dump();
}

struct SweepCell {
    std::vector<std::pair<std::string, json>> assignment;  // axis -> value
    int repetition = 0;
    std::string name;
};

inline std::vector<SweepCell> enumerate_cells(const ExperimentConfig& cfg) {
    std::vector<SweepCell> cells;
    std::vector<std::size_t> idx(cfg.sweep_axes.size(), 0);
    while (true) {
        SweepCell base;
        std::string name;
        for (std::size_t a = 0; a < cfg.sweep_axes.size(); ++a) {
            const auto& [axis, values] = cfg.sweep_axes[a];
            base.assignment.emplace_back(axis, values[idx[a]]);
            if (!name.empty()) name += "_";
            name += axis_label(axis) + value_label(values[idx[a]]);
        }
        for (int rep = 0; rep < cfg.repetitions; ++rep) {
            SweepCell cell = base;
            cell.repetition = rep;
            cell.name = name.empty() ? "rep" + std::to_string(rep)
                                     : name + "_rep" + std::to_string(rep);
            cells.push_back(std::move(cell));
        }
        // Odometer increment over the axes.
        std::size_t a = 0;
        for (; a < idx.size(); ++a) {
            if (++idx[a] < cfg.sweep_axes[a].second.size()) break;
            idx[a] = 0;
        }
        if (a == idx.size()) break;
        if (idx.empty()) break;
    }
    return cells;
}

}  // namespace rundetail

inline int cmd_sweep(const std::string& config_path, const CliOverrides& overrides) {
    ExperimentConfig base;
    fs::path root;
    try {
        base = parse_experiment(load_json_file(config_path));
        if (overrides.seed) base.run.seeds.master = *overrides.seed;
        root = resolve_output_dir(base.output_dir);
        fs::create_directories(root);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }

    const int jobs = overrides.jobs.value_or(base.run.jobs);
    const auto cells = rundetail::enumerate_cells(base);

    struct CellResult {
        bool ok = false;
        std::string error;
        double final_loss = 0.0;
        double final_grad_norm_sq = 0.0;
    };
    std::vector<CellResult> results(cells.size());

    detail::parallel_for(static_cast<int>(cells.size()), jobs, [&](int i) {
        const auto& cell = cells[static_cast<std::size_t>(i)];
        auto& res = results[static_cast<std::size_t>(i)];
        try {
            ExperimentConfig cfg = base;
            cfg.sweep_axes.clear();
            cfg.repetitions = 1;
            for (const auto& [axis, value] : cell.assignment) apply_axis_value(cfg, axis, value);
            cfg.run.seeds.master =
                base.run.seeds.master + static_cast<std::uint64_t>(cell.repetition);
            cfg.run.jobs = 1;  // cells own the parallelism budget
            cfg.output_dir = (root / cell.name).string();
            cfg.run.validate();
            const RunArtifacts artifacts = execute_run(cfg, root / cell.name);
            if (artifacts.metrics.empty()) throw Error("run produced no rounds");
            res.final_loss = artifacts.metrics.back().loss;
            res.final_grad_norm_sq = artifacts.metrics.back().grad_norm_sq;
            res.ok = true;
        } catch (const Error& e) {
            res.error = e.what();
        }
    });

    // Aggregate repetitions per axis assignment, in enumeration order.
    CsvWriter table((root / "table.csv").string(),
                    [&] {
                        std::vector<std::string> header;
                        for (const auto& [axis, values] : base.sweep_axes) {
                            (void)values;
                            header.push_back(axis);
                        }
                        header.insert(header.end(),
                                      {"repetitions", "final_loss_mean", "final_loss_std",
                                       "final_grad_norm_sq_mean", "final_grad_norm_sq_std"});
                        return header;
                    }());
    int failures = 0;
    for (std::size_t i = 0; i < cells.size();) {
        std::size_t j = i;
        std::vector<double> losses, grads;
        while (j < cells.size() && cells[j].assignment == cells[i].assignment) {
            if (results[j].ok) {
                losses.push_back(results[j].final_loss);
                grads.push_back(results[j].final_grad_norm_sq);
            } else {
                ++failures;
                std::cerr << "cell " << cells[j].name << " failed: " << results[j].error << "\n";
            }
            ++j;
        }
        auto mean_std = [](const std::vector<double>& xs) {
            if (xs.empty()) return std::pair<double, double>{0.0, 0.0};
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double std_ = xs.size() > 1
                                    ? std::sqrt(var / static_cast<double>(xs.size() - 1))
                                    : 0.0;
            return std::pair<double, double>{mean, std_};
        };
        const auto [lm, ls] = mean_std(losses);
        const auto [gm, gs] = mean_std(grads);
        std::vector<std::string> row;
        for (const auto& [axis, value] : cells[i].assignment) {
            (void)axis;
            row.push_back(rundetail::value_label(value));
        }
        row.insert(row.end(),
                   {std::to_string(losses.size()), format_double(lm), format_double(ls),
                    format_double(gm), format_double(gs)});
        table.write_row(row);
        i = j;
    }
    table.flush();
    std::cout << "sweep complete: " << cells.size() - static_cast<std::size_t>(failures) << "/"
              << cells.size() << " cells ok -> " << root.string() << "\n";
    return failures == 0 ? kExitOk : kExitDomain;
}

// ---------------------------------------------------------------------------
// Calculators. Each emits a JSON record {inputs, outputs, terms} to stdout
// and to calc_<kind>.json in the output root.

inline int emit_calc_record(const std::string& kind, const json& record) {
    std::cout << record.dump(2) << "\n";
    const fs::path dir = resolve_output_dir(".");
    fs::create_directories(dir);
    std::ofstream out(dir / ("calc_" + kind + ".json"));
    out << record.dump(2) << "\n";
    return kExitOk;
}

inline int cmd_calc_rate(const RateInputs& in) {
    try {
        const RateResult r = theoretical_rate(in);
        json record;
        record["inputs"] = {{"L", in.smoothness},  {"delta", in.delta}, {"sigma_l", in.sigma_l},
                            {"S", in.clients},     {"K", in.local_steps}, {"R", in.rounds},
                            {"eps", in.eps}};
        record["outputs"] = {{"rate", r.total}};
        record["terms"] = {{"stochastic", r.stochastic_term}, {"drift", r.drift_term}};
        return emit_calc_record("rate", record);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

inline int cmd_calc_pac(const PacInputs& in) {
    try {
        const PacResult r = pac_bayes_bound(in);
        json record;
        record["inputs"] = {{"sigmas", in.sigmas}, {"lambda", in.lambda},
                            {"eta", in.eta},       {"rho", in.rho},
                            {"b", in.b},           {"n", in.n},
                            {"tau", in.tau},       {"xstar_norm", in.xstar_norm}};
        record["outputs"] = {{"bound", r.bound}};
        record["terms"] = {{"log_term", r.term_log}, {"inverse_term", r.term_inv}, {"c0", r.c0}};
        return emit_calc_record("pac", record);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

struct CovCalcInputs {
    std::vector<double> h_diag;  // diagonal of H
    double eta = 0.1;
    double b = 1.0;
    double lambda = 0.0;
    bool empirical = false;
    long steps = 1000000;
    long burn_in = 10000;
    std::uint64_t seed = 0;
};

inline int cmd_calc_cov(const CovCalcInputs& in) {
    try {
        const auto d = static_cast<Eigen::Index>(in.h_diag.size());
        if (d == 0) throw DomainError("cov: need at least one diagonal entry of H");
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < d; ++i) h(i, i) = in.h_diag[static_cast<std::size_t>(i)];
        const Eigen::MatrixXd m = stationary_covariance(h, in.eta, in.b, in.lambda);
        json record;
        record["inputs"] = {{"h_diag", in.h_diag}, {"eta", in.eta},
                            {"b", in.b},           {"lambda", in.lambda},
                            {"empirical", in.empirical}};
        json mat = json::array();
        for (Eigen::Index r = 0; r < d; ++r) {
            json row = json::array();
            for (Eigen::Index c = 0; c < d; ++c) row.push_back(m(r, c));
            mat.push_back(row);
        }
        record["outputs"] = {{"covariance", mat}};
        record["terms"] = {{"trace", m.trace()}};
        if (in.empirical) {
            record["inputs"]["steps"] = in.steps;
            record["inputs"]["burn_in"] = in.burn_in;
            record["inputs"]["seed"] = in.seed;
            RngStream rng = derive_rng(SeedSpec{in.seed}, 0, -1, StreamPurpose::ou_sim);
            const Eigen::MatrixXd emp =
                empirical_stationary_covariance(h, in.eta, in.b, in.lambda, in.steps,
                                                in.burn_in, rng);
            json emat = json::array();
            for (Eigen::Index r = 0; r < d; ++r) {
                json row = json::array();
                for (Eigen::Index c = 0; c < d; ++c) row.push_back(emp(r, c));
                emat.push_back(row);
            }
            record["outputs"]["empirical_covariance"] = emat;
        }
        return emit_calc_record("cov", record);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
}

}  // namespace fedopt
