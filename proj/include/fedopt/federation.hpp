// SPDX-License-Identifier: Apache-2.0
//
// Round orchestration: client sampling, local training loops, server
// aggregation, learning-rate schedule, and the SGD-based baselines.
//
// Causality of the global update estimate: clients in round r receive the
// estimate computed at the end of round r-1 (zero vector in round 0), and the
// estimate is normalized with the learning rate of the round that produced
// its deltas.
//
// Determinism: every client derives its own gradient stream from
// (seed, round, client), updates are reduced in ascending client-id order,
// and parallel execution only distributes the pure per-client computations,
// so serial and parallel runs produce identical bits.
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <utility>
#include <vector>

#include "fedopt/analysis.hpp"
#include "fedopt/errors.hpp"
#include "fedopt/optim.hpp"
#include "fedopt/params.hpp"
#include "fedopt/partition_builder.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/schedule.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

enum class Algorithm { local_adamw, fedadamw, fedadamw_simplified, fedavg, scaffold, fedcm };

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::local_adamw: return "local_adamw";
        case Algorithm::fedadamw: return "fedadamw";
        case Algorithm::fedadamw_simplified: return "fedadamw_simplified";
        case Algorithm::fedavg: return "fedavg";
        case Algorithm::scaffold: return "scaffold";
        case Algorithm::fedcm: return "fedcm";
    }
    return "?";
}

inline bool is_adamw_family(Algorithm a) {
    return a == Algorithm::local_adamw || a == Algorithm::fedadamw ||
           a == Algorithm::fedadamw_simplified;
}

// Communicates second-moment block means and consumes the drift estimate.
inline bool aggregates_moments(Algorithm a) {
    return a == Algorithm::fedadamw || a == Algorithm::fedadamw_simplified;
}

// Maintains the global update estimate across rounds.
inline bool tracks_drift_estimate(Algorithm a) {
    return aggregates_moments(a) || a == Algorithm::fedcm;
}

struct RunConfig {
    Algorithm algorithm = Algorithm::fedadamw;
    int num_clients = 10;        // N
    int clients_per_round = 10;  // S
    int local_steps = 10;        // K
    int rounds = 10;             // R
    OptimConfig optim;
    LrSchedule lr_schedule;
    PartitionSpec partition;
    bool warm_start_v = true;  // initialize v from broadcast block means
    bool warm_start_m = false; // aggregate and broadcast the full first moment
    bool compensated_sums = false;
    std::vector<std::string> decay_exclude;  // block names exempt from decay
    SeedSpec seeds;
    int jobs = 1;

    void validate() const {
        if (num_clients < 1) throw ConfigError("clients must be >= 1");
        if (clients_per_round < 1 || clients_per_round > num_clients)
            throw ConfigError("clients_per_round must satisfy 1 <= S <= N");
        if (local_steps < 1) throw ConfigError("local_steps must be >= 1");
        if (rounds < 0) throw ConfigError("rounds must be >= 0");
        if (jobs < 1) throw ConfigError("jobs must be >= 1");
        optim.validate();
        if (algorithm == Algorithm::fedadamw_simplified &&
            (optim.lambda != 0.0 || optim.beta1 != 0.0))
            throw ConfigError("fedadamw_simplified requires optim.lambda = 0 and optim.beta1 = 0");
    }
};

struct ServerState {
    ParamVector x;
    BlockMeans v_bar;     // aggregated second-moment block means, >= 0
    ParamVector m_bar;    // full first-moment average (warm_start_m only)
    ParamVector delta_g;  // global update estimate, zero at round 0
    int round = 0;
};

struct ClientUpdate {
    int client_id = -1;
    ParamVector delta;                  // x_i^{r,K} - x_i^{r,0}
    std::vector<double> v_means;        // block means of final v (moment-aggregating algos)
    ParamVector m_full;                 // final m (warm_start_m only)
    ParamVector v_diag;                 // final v, diagnostics only, never counted as payload
    ParamVector control_delta;          // scaffold: change of the client control variate
};

struct RoundMetrics {
    int round = 0;
    double loss = 0.0;          // f(x^{r+1}), exact
    double grad_norm_sq = 0.0;  // ||grad f(x^{r+1})||^2
    double drift = 0.0;         // (1/S) sum ||x_i^{r,K} - mean||
    double v_variance = 0.0;    // coordinate-averaged cross-client variance of v
    double eta_effective = 0.0;
    std::uint64_t bytes_up = 0;    // uplink payload per participating client
    std::uint64_t bytes_down = 0;  // downlink payload per participating client
    double wall_seconds = 0.0;     // not part of the replayable CSV
};

// Simulated per-client payload sizes in bytes (8 per scalar).
inline std::pair<std::uint64_t, std::uint64_t> payload_bytes(const RunConfig& cfg, std::size_t d,
                                                             std::size_t num_blocks) {
    const std::uint64_t vd = 8ull * d;
    const std::uint64_t vb = 8ull * num_blocks;
    switch (cfg.algorithm) {
        case Algorithm::local_adamw:
        case Algorithm::fedavg:
            return {vd, vd};
        case Algorithm::fedadamw:
        case Algorithm::fedadamw_simplified: {
            std::uint64_t up = vd + vb;
            std::uint64_t down = vd + vb + vd;  // x, v-bar, drift estimate
            if (cfg.warm_start_m) {
                up += vd;
                down += vd;
            }
            return {up, down};
        }
        case Algorithm::scaffold:
            return {2 * vd, 2 * vd};  // delta + control delta; x + server control
        case Algorithm::fedcm:
            return {vd, 2 * vd};  // x + drift estimate down
    }
    return {vd, vd};
}

// Uniform sample of S distinct ids from {0..N-1}, ascending.
inline std::vector<int> sample_clients(int num_clients, int clients_per_round, RngStream& rng) {
    if (clients_per_round > num_clients)
        throw ConfigError("sample_clients: S must not exceed N");
    std::vector<int> population(static_cast<std::size_t>(num_clients));
    for (int i = 0; i < num_clients; ++i) population[static_cast<std::size_t>(i)] = i;
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(clients_per_round));
    std::sample(population.begin(), population.end(), std::back_inserter(out), clients_per_round,
                rng.generator());
    return out;  // selection sampling keeps ascending order
}

// One client's local round for the AdamW-family algorithms.
inline ClientUpdate client_round(const ServerState& server, int client_id, const RunConfig& cfg,
                                 const Task& task, double eta_effective,
                                 const ParamVector* decay_mask = nullptr) {
    const std::size_t d = task.dim();
    const Algorithm algo = cfg.algorithm;
    if (!is_adamw_family(algo)) throw Error("client_round: not an AdamW-family algorithm");

    OptimConfig oc = cfg.optim;
    oc.eta = eta_effective;

    ParamVector x = server.x;
    ParamVector m0(d, 0.0);
    ParamVector v0;
    if (aggregates_moments(algo) && cfg.warm_start_v) v0 = expand_block_means(server.v_bar);
    else v0.assign(d, 0.0);
    if (algo == Algorithm::fedadamw && cfg.warm_start_m && !server.m_bar.empty())
        m0 = server.m_bar;
    MomentState state = make_moment_state(std::move(m0), std::move(v0), server.round,
                                          cfg.local_steps);

    RngStream grad_rng = derive_rng(cfg.seeds, server.round, client_id, StreamPurpose::gradient);
    for (int k = 1; k <= cfg.local_steps; ++k) {
        LossGrad lg;
        try {
            lg = task.loss_and_grad(x, client_id, grad_rng);
            if (!std::isfinite(lg.loss))
                throw NumericError("loss is not finite");
            ParamVector g = clip_gradient(std::move(lg.grad), oc.clip);
            state = moment_update(std::move(state), g, oc);
            auto [m_hat, v_hat] = bias_correct(state, oc);
            switch (algo) {
                case Algorithm::local_adamw:
                    x = adamw_step(x, m_hat, v_hat, oc, decay_mask);
                    break;
                case Algorithm::fedadamw:
                    x = fedadamw_local_step(x, m_hat, v_hat, server.delta_g, oc, decay_mask);
                    break;
                default:
                    x = simplified_local_step(x, g, v_hat, server.delta_g, oc);
                    break;
            }
            ensure_finite(x, "client iterate");
        } catch (const NumericError& e) {
            throw DivergedError(std::string("client diverged: ") + e.what(), server.round,
                                client_id, k);
        }
    }

    ClientUpdate out;
    out.client_id = client_id;
    out.delta.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.delta[j] = x[j] - server.x[j];
    if (aggregates_moments(algo))
        out.v_means = block_mean(state.v, server.v_bar.partition).means;
    if (algo == Algorithm::fedadamw && cfg.warm_start_m) out.m_full = state.m;
    out.v_diag = std::move(state.v);
    return out;
}

namespace detail {

// SGD-family local round (FedAvg, SCAFFOLD, FedCM).
inline ClientUpdate client_round_sgd(const ServerState& server, int client_id,
                                     const RunConfig& cfg, const Task& task,
                                     double eta_effective, const ParamVector* control_global,
                                     const ParamVector* control_client) {
    const std::size_t d = task.dim();
    ParamVector x = server.x;
    RngStream grad_rng = derive_rng(cfg.seeds, server.round, client_id, StreamPurpose::gradient);
    const double alpha_cm = cfg.optim.alpha;
    for (int k = 1; k <= cfg.local_steps; ++k) {
        try {
            LossGrad lg = task.loss_and_grad(x, client_id, grad_rng);
            if (!std::isfinite(lg.loss)) throw NumericError("loss is not finite");
            ParamVector g = clip_gradient(std::move(lg.grad), cfg.optim.clip);
            ensure_finite(g, "gradient");
            for (std::size_t j = 0; j < d; ++j) {
                double u = g[j];
                if (cfg.algorithm == Algorithm::scaffold)
                    u += (*control_global)[j] - (*control_client)[j];
                else if (cfg.algorithm == Algorithm::fedcm)
                    u = (1.0 - alpha_cm) * g[j] + alpha_cm * server.delta_g[j];
                x[j] -= eta_effective * u;
            }
            ensure_finite(x, "client iterate");
        } catch (const NumericError& e) {
            throw DivergedError(std::string("client diverged: ") + e.what(), server.round,
                                client_id, k);
        }
    }
    ClientUpdate out;
    out.client_id = client_id;
    out.delta.resize(d);
    for (std::size_t j = 0; j < d; ++j) out.delta[j] = x[j] - server.x[j];
    if (cfg.algorithm == Algorithm::scaffold) {
        // c_i+ = c_i - c + (x^r - x_i^K)/(K eta); communicated as the change.
        out.control_delta.resize(d);
        const double scale = 1.0 / (static_cast<double>(cfg.local_steps) * eta_effective);
        for (std::size_t j = 0; j < d; ++j)
            out.control_delta[j] = -(*control_global)[j] - out.delta[j] * scale;
    }
    return out;
}

inline void accumulate(ParamVector& acc, ParamVector& comp, const ParamVector& v,
                       bool compensated) {
    if (!compensated) {
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += v[j];
        return;
    }
    for (std::size_t j = 0; j < acc.size(); ++j) {
        const double y = v[j] - comp[j];
        const double t = acc[j] + y;
        comp[j] = (t - acc[j]) - y;
        acc[j] = t;
    }
}

template <typename Fn>
void parallel_for(int n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    const int workers = std::min(jobs, n);
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (int i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

// Deterministic reduction of the round's updates into the next server state.
// eta_effective must be the learning rate of the round that produced the
// updates; the drift estimate is normalized with it.
inline ServerState server_aggregate(ServerState server, const std::vector<ClientUpdate>& updates,
                                    const RunConfig& cfg, double eta_effective) {
    if (static_cast<int>(updates.size()) != cfg.clients_per_round)
        throw ProtocolError("server_aggregate: expected " +
                            std::to_string(cfg.clients_per_round) + " updates, got " +
                            std::to_string(updates.size()));
    for (std::size_t i = 1; i < updates.size(); ++i) {
        if (updates[i].client_id <= updates[i - 1].client_id)
            throw ProtocolError("server_aggregate: updates must be in ascending client-id order");
    }
    const std::size_t d = server.x.size();
    const double s = static_cast<double>(cfg.clients_per_round);

    ParamVector sum_delta(d, 0.0), comp(d, 0.0);
    for (const auto& u : updates) {
        ensure_same_length(u.delta, server.x, "server_aggregate: delta");
        detail::accumulate(sum_delta, comp, u.delta, cfg.compensated_sums);
    }

    if (tracks_drift_estimate(cfg.algorithm)) {
        // A zero learning rate (cosine endpoint) forces zero deltas; the
        // estimate carries no information then and is pinned to zero.
        const double norm =
            eta_effective > 0.0
                ? -1.0 / (s * static_cast<double>(cfg.local_steps) * eta_effective)
                : 0.0;
        for (std::size_t j = 0; j < d; ++j) server.delta_g[j] = norm * sum_delta[j];
    }

    if (aggregates_moments(cfg.algorithm)) {
        const std::size_t nb = server.v_bar.means.size();
        std::vector<double> mean_v(nb, 0.0);
        for (const auto& u : updates) {
            if (u.v_means.size() != nb)
                throw ProtocolError("server_aggregate: block-mean count mismatch");
            for (std::size_t b = 0; b < nb; ++b) mean_v[b] += u.v_means[b];
        }
        for (double& m : mean_v) m /= s;
        server.v_bar.means = std::move(mean_v);

        if (cfg.algorithm == Algorithm::fedadamw && cfg.warm_start_m) {
            ParamVector mean_m(d, 0.0), mcomp(d, 0.0);
            for (const auto& u : updates) {
                ensure_same_length(u.m_full, server.x, "server_aggregate: m");
                detail::accumulate(mean_m, mcomp, u.m_full, cfg.compensated_sums);
            }
            for (double& mj : mean_m) mj /= s;
            server.m_bar = std::move(mean_m);
        }
    }

    if (cfg.algorithm == Algorithm::fedadamw_simplified) {
        // x^{r+1} = x^r - gamma * drift estimate.
        for (std::size_t j = 0; j < d; ++j)
            server.x[j] -= cfg.optim.gamma * server.delta_g[j];
    } else {
        for (std::size_t j = 0; j < d; ++j) server.x[j] += sum_delta[j] / s;
    }
    ensure_finite(server.x, "server parameters");
    server.round += 1;
    return server;
}

// Observer invoked after each round with the pre- and post-aggregation server
// states, the effective learning rate, and the raw client updates.
using RoundObserver = std::function<void(const ServerState&, const ServerState&, double,
                                         const std::vector<ClientUpdate>&)>;

inline std::vector<RoundMetrics> run(const RunConfig& cfg, const Task& task,
                                     const RoundObserver& observer = nullptr) {
    cfg.validate();
    const std::size_t d = task.dim();
    if (cfg.num_clients > task.num_clients())
        throw ConfigError("config clients exceed task clients (" +
                          std::to_string(cfg.num_clients) + " > " +
                          std::to_string(task.num_clients()) + ")");

    auto partition = build_partition(cfg.partition, task.tensor_metas(), d);

    // Per-coordinate decay scaling from the exclusion list.
    ParamVector decay_mask;
    if (!cfg.decay_exclude.empty()) {
        decay_mask.assign(d, 1.0);
        for (const Block& b : partition->blocks()) {
            for (const auto& name : cfg.decay_exclude) {
                if (b.name == name || b.name.rfind(name + ".", 0) == 0) {
                    for (std::size_t j = b.begin; j < b.end; ++j) decay_mask[j] = 0.0;
                }
            }
        }
    }
    const ParamVector* mask = decay_mask.empty() ? nullptr : &decay_mask;

    ServerState server;
    server.x = task.initial_params();
    server.v_bar.partition = partition;
    server.v_bar.means.assign(partition->num_blocks(), 0.0);
    server.delta_g.assign(d, 0.0);
    server.round = 0;

    // SCAFFOLD control variates, all clients, zero-initialized.
    ParamVector control_global;
    std::vector<ParamVector> control_clients;
    if (cfg.algorithm == Algorithm::scaffold) {
        control_global.assign(d, 0.0);
        control_clients.assign(static_cast<std::size_t>(cfg.num_clients), ParamVector(d, 0.0));
    }

    const auto [bytes_up, bytes_down] = payload_bytes(cfg, d, partition->num_blocks());

    std::vector<RoundMetrics> metrics;
    metrics.reserve(static_cast<std::size_t>(cfg.rounds));
    for (int r = 0; r < cfg.rounds; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const double eta_r = effective_eta(cfg.lr_schedule, cfg.optim.eta, r, cfg.rounds);

        RngStream sampling_rng = derive_rng(cfg.seeds, r, -1, StreamPurpose::client_sampling);
        const std::vector<int> ids =
            sample_clients(cfg.num_clients, cfg.clients_per_round, sampling_rng);

        std::vector<ClientUpdate> updates(ids.size());
        detail::parallel_for(static_cast<int>(ids.size()), cfg.jobs, [&](int i) {
            const int id = ids[static_cast<std::size_t>(i)];
            if (is_adamw_family(cfg.algorithm)) {
                updates[static_cast<std::size_t>(i)] =
                    client_round(server, id, cfg, task, eta_r, mask);
            } else {
                const ParamVector* ci = cfg.algorithm == Algorithm::scaffold
                                            ? &control_clients[static_cast<std::size_t>(id)]
                                            : nullptr;
                updates[static_cast<std::size_t>(i)] = detail::client_round_sgd(
                    server, id, cfg, task, eta_r,
                    cfg.algorithm == Algorithm::scaffold ? &control_global : nullptr, ci);
            }
        });

        // Diagnostics from the pre-aggregation client finals.
        std::vector<ParamVector> finals;
        finals.reserve(updates.size());
        for (const auto& u : updates) {
            ParamVector xf(d);
            for (std::size_t j = 0; j < d; ++j) xf[j] = server.x[j] + u.delta[j];
            finals.push_back(std::move(xf));
        }
        const double drift = drift_metric(finals);
        double v_variance = 0.0;
        if (is_adamw_family(cfg.algorithm)) {
            std::vector<ParamVector> vs;
            vs.reserve(updates.size());
            for (const auto& u : updates) vs.push_back(u.v_diag);
            v_variance = v_cross_client_variance(vs);
        }

        if (cfg.algorithm == Algorithm::scaffold) {
            ParamVector csum(d, 0.0), ccomp(d, 0.0);
            for (const auto& u : updates) {
                detail::accumulate(csum, ccomp, u.control_delta, cfg.compensated_sums);
                auto& ci = control_clients[static_cast<std::size_t>(u.client_id)];
                for (std::size_t j = 0; j < d; ++j) ci[j] += u.control_delta[j];
            }
            // c += (S/N) * mean(control deltas) = (1/N) * sum.
            const double scale = 1.0 / static_cast<double>(cfg.num_clients);
            for (std::size_t j = 0; j < d; ++j) control_global[j] += scale * csum[j];
        }

        if (observer) {
            ServerState before = server;
            server = server_aggregate(std::move(server), updates, cfg, eta_r);
            observer(before, server, eta_r, updates);
        } else {
            server = server_aggregate(std::move(server), updates, cfg, eta_r);
        }

        const LossGrad global = task.global_loss_and_grad(server.x);
        RoundMetrics m;
        m.round = r;
        m.loss = global.loss;
        m.grad_norm_sq = squared_norm(global.grad);
        m.drift = drift;
        m.v_variance = v_variance;
        m.eta_effective = eta_r;
        m.bytes_up = bytes_up;
        m.bytes_down = bytes_down;
        m.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!std::isfinite(m.loss) || !std::isfinite(m.grad_norm_sq))
            throw DivergedError("global objective diverged", r, -1, cfg.local_steps);
        metrics.push_back(m);
    }
    return metrics;
}

inline std::vector<RoundMetrics> run_baseline_fedavg(const RunConfig& cfg, const Task& task) {
    if (cfg.algorithm != Algorithm::fedavg)
        throw ConfigError("run_baseline_fedavg: config algorithm must be fedavg");
    return run(cfg, task);
}

inline std::vector<RoundMetrics> run_baseline_scaffold(const RunConfig& cfg, const Task& task) {
    if (cfg.algorithm != Algorithm::scaffold)
        throw ConfigError("run_baseline_scaffold: config algorithm must be scaffold");
    return run(cfg, task);
}

inline std::vector<RoundMetrics> run_baseline_fedcm(const RunConfig& cfg, const Task& task) {
    if (cfg.algorithm != Algorithm::fedcm)
        throw ConfigError("run_baseline_fedcm: config algorithm must be fedcm");
    return run(cfg, task);
}

}  // namespace fedopt
