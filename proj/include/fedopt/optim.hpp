// SPDX-License-Identifier: Apache-2.0
//
// Single-step update rules: AdamW with decoupled weight decay, the
// drift-corrected federated variant, and the simplified variant used for
// theory validation.
//
// Bias correction is asymmetric on purpose: the first moment is corrected
// with the local step counter k (it is zeroed every round), while the second
// moment is corrected with the global step counter t = round*K + k (it is
// warm-started across rounds, so its age is the global step count). Both
// are exponents of numbers < 1, computed via std::pow; underflow to zero
// makes the correction factor 1, which is the correct large-t limit.
#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

#include "fedopt/errors.hpp"
#include "fedopt/params.hpp"

namespace fedopt {

struct OptimConfig {
    double eta = 1e-3;     // local learning rate
    double lambda = 0.0;   // decoupled weight decay
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double alpha = 0.5;    // drift-mixing coefficient
    double gamma = 1.0;    // server learning rate (simplified variant only)
    double clip = 0.0;     // elementwise gradient clip bound; 0 disables

    // Reproduces the sign as printed in the algorithm listings (weight
    // growth) instead of standard decoupled decay. For comparison only.
    bool paper_literal_decay_sign = false;

    void validate() const {
        if (!(eta > 0.0)) throw ConfigError("optim.eta must be > 0");
        if (!(lambda >= 0.0)) throw ConfigError("optim.lambda must be >= 0");
        if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("optim.beta1 must be in [0, 1)");
        if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("optim.beta2 must be in [0, 1)");
        if (!(eps > 0.0)) throw ConfigError("optim.eps must be > 0");
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("optim.alpha must be in [0, 1]");
        if (!(gamma > 0.0)) throw ConfigError("optim.gamma must be > 0");
        if (!(clip >= 0.0)) throw ConfigError("optim.clip must be >= 0");
    }
};

// Per-client moment estimates plus step counters. k resets each round; t is
// monotone across rounds and equals round*K + k while a round is running.
struct MomentState {
    ParamVector m;
    ParamVector v;
    std::int64_t k = 0;
    std::int64_t t = 0;
};

inline MomentState make_moment_state(ParamVector m0, ParamVector v0, std::int64_t round,
                                     std::int64_t local_steps) {
    ensure_same_length(m0, v0, "make_moment_state");
    for (double x : v0) {
        if (!(x >= 0.0)) throw NumericError("make_moment_state: v must be elementwise >= 0");
    }
    MomentState s;
    s.m = std::move(m0);
    s.v = std::move(v0);
    s.k = 0;
    s.t = round * local_steps;
    return s;
}

// m' = b1*m + (1-b1)*g ; v' = b2*v + (1-b2)*g*g ; counters advance.
inline MomentState moment_update(MomentState state, const ParamVector& g,
                                 const OptimConfig& cfg) {
    ensure_same_length(state.m, g, "moment_update");
    ensure_finite(g, "moment_update: gradient");
    const double b1 = cfg.beta1, b2 = cfg.beta2;
    for (std::size_t j = 0; j < g.size(); ++j) {
        state.m[j] = b1 * state.m[j] + (1.0 - b1) * g[j];
        state.v[j] = b2 * state.v[j] + (1.0 - b2) * g[j] * g[j];
    }
    state.k += 1;
    state.t += 1;
    return state;
}

// m_hat = m / (1 - b1^k) ; v_hat = v / (1 - b2^t). Requires k, t >= 1.
inline std::pair<ParamVector, ParamVector> bias_correct(const MomentState& state,
                                                        const OptimConfig& cfg) {
    if (state.k < 1 || state.t < 1)
        throw Error("bias_correct: requires k >= 1 and t >= 1 (got k=" +
                    std::to_string(state.k) + ", t=" + std::to_string(state.t) + ")");
    const double corr_m = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.k));
    const double corr_v = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    ParamVector m_hat(state.m.size()), v_hat(state.v.size());
    for (std::size_t j = 0; j < state.m.size(); ++j) {
        m_hat[j] = state.m[j] / corr_m;
        v_hat[j] = state.v[j] / corr_v;
    }
    return {std::move(m_hat), std::move(v_hat)};
}

// theta[j] = 1 / (sqrt(v_hat[j]) + eps); eps added outside the sqrt.
inline ParamVector preconditioner(const ParamVector& v_hat, const OptimConfig& cfg) {
    ParamVector theta(v_hat.size());
    for (std::size_t j = 0; j < v_hat.size(); ++j) {
        if (!(v_hat[j] >= 0.0))
            throw NumericError("preconditioner: negative v_hat entry at index " +
                               std::to_string(j));
        theta[j] = 1.0 / (std::sqrt(v_hat[j]) + cfg.eps);
    }
    return theta;
}

namespace detail {

// Shared step kernel: x' = x - eta * (m_hat*theta [+ alpha*delta_g] + lambda*x).
// The drift term is skipped entirely when alpha == 0 or delta_g is absent, so
// the federated step with alpha = 0 is bit-identical to the plain AdamW step.
// decay_mask, when present, scales lambda per coordinate (decay exclusions).
inline ParamVector precond_step(const ParamVector& x, const ParamVector& m_hat,
                                const ParamVector& v_hat, const ParamVector* delta_g,
                                double alpha, const OptimConfig& cfg,
                                const ParamVector* decay_mask) {
    ensure_same_length(x, m_hat, "step");
    ensure_same_length(x, v_hat, "step");
    if (delta_g) ensure_same_length(x, *delta_g, "step: delta_g");
    if (decay_mask) ensure_same_length(x, *decay_mask, "step: decay_mask");
    const bool drift = delta_g != nullptr && alpha != 0.0;
    const double decay_sign = cfg.paper_literal_decay_sign ? -1.0 : 1.0;
    ParamVector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(v_hat[j] >= 0.0))
            throw NumericError("step: negative v_hat entry at index " + std::to_string(j));
        double u = m_hat[j] * (1.0 / (std::sqrt(v_hat[j]) + cfg.eps));
        if (drift) u += alpha * (*delta_g)[j];
        const double lam = decay_mask ? cfg.lambda * (*decay_mask)[j] : cfg.lambda;
        u += decay_sign * lam * x[j];
        out[j] = x[j] - cfg.eta * u;
    }
    return out;
}

}  // namespace detail

// Standard decoupled-weight-decay step: x' = x - eta*(m_hat*theta + lambda*x).
inline ParamVector adamw_step(const ParamVector& x, const ParamVector& m_hat,
                              const ParamVector& v_hat, const OptimConfig& cfg,
                              const ParamVector* decay_mask = nullptr) {
    return detail::precond_step(x, m_hat, v_hat, nullptr, 0.0, cfg, decay_mask);
}

// Drift-corrected step: x' = x - eta*(m_hat*theta + alpha*delta_g + lambda*x).
inline ParamVector fedadamw_local_step(const ParamVector& x, const ParamVector& m_hat,
                                       const ParamVector& v_hat, const ParamVector& delta_g,
                                       const OptimConfig& cfg,
                                       const ParamVector* decay_mask = nullptr) {
    return detail::precond_step(x, m_hat, v_hat, &delta_g, cfg.alpha, cfg, decay_mask);
}

// Simplified variant for theory validation: requires lambda = 0, beta1 = 0;
// x' = x - eta*(alpha*g*theta + (1-alpha)*delta_g).
inline ParamVector simplified_local_step(const ParamVector& x, const ParamVector& g,
                                         const ParamVector& v_hat, const ParamVector& delta_g,
                                         const OptimConfig& cfg) {
    if (cfg.lambda != 0.0 || cfg.beta1 != 0.0)
        throw ConfigError("simplified_local_step requires lambda = 0 and beta1 = 0");
    ensure_same_length(x, g, "simplified_local_step");
    ensure_same_length(x, v_hat, "simplified_local_step");
    ensure_same_length(x, delta_g, "simplified_local_step: delta_g");
    ParamVector out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (!(v_hat[j] >= 0.0))
            throw NumericError("simplified_local_step: negative v_hat entry at index " +
                               std::to_string(j));
        const double theta = 1.0 / (std::sqrt(v_hat[j]) + cfg.eps);
        const double u = cfg.alpha * g[j] * theta + (1.0 - cfg.alpha) * delta_g[j];
        out[j] = x[j] - cfg.eta * u;
    }
    return out;
}

// Elementwise clip of g to [-bound, bound]; returns g unchanged if bound == 0.
inline ParamVector clip_gradient(ParamVector g, double bound) {
    if (bound <= 0.0) return g;
    for (double& x : g) {
        if (x > bound) x = bound;
        else if (x < -bound) x = -bound;
    }
    return g;
}

}  // namespace fedopt
