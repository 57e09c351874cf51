// SPDX-License-Identifier: Apache-2.0
//
// Closed-form calculators and empirical estimators: convergence-rate value,
// PAC-Bayes generalization bound, stationary covariance of the preconditioned
// Ornstein-Uhlenbeck dynamics, and the cross-client diagnostic metrics.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/params.hpp"
#include "fedopt/rng.hpp"

namespace fedopt {

// ---------------------------------------------------------------------------
// Convergence-rate value: sqrt(L*Delta*sigma_l^2 / (S*K*R*eps^2)) + L*Delta/R.

struct RateInputs {
    double smoothness = 1.0;   // L
    double delta = 1.0;        // f(x0) - f*
    double sigma_l = 0.0;      // gradient noise level (0 allowed: noiseless)
    double clients = 1.0;      // S
    double local_steps = 1.0;  // K
    double rounds = 1.0;       // R
    double eps = 1.0;

    void validate() const {
        if (!(smoothness > 0.0)) throw DomainError("rate: L must be > 0");
        if (!(delta > 0.0)) throw DomainError("rate: Delta must be > 0");
        if (!(sigma_l >= 0.0)) throw DomainError("rate: sigma_l must be >= 0");
        if (!(clients > 0.0) || !(local_steps > 0.0) || !(rounds > 0.0))
            throw DomainError("rate: S, K, R must be > 0");
        if (!(eps > 0.0)) throw DomainError("rate: eps must be > 0");
    }
};

struct RateResult {
    double total = 0.0;
    double stochastic_term = 0.0;  // scales as (SKR)^{-1/2}
    double drift_term = 0.0;       // scales as R^{-1}
};

inline RateResult theoretical_rate(const RateInputs& in) {
    in.validate();
    RateResult out;
    out.stochastic_term = std::sqrt(in.smoothness * in.delta * in.sigma_l * in.sigma_l /
                                    (in.clients * in.local_steps * in.rounds * in.eps * in.eps));
    out.drift_term = in.smoothness * in.delta / in.rounds;
    out.total = out.stochastic_term + out.drift_term;
    return out;
}

// ---------------------------------------------------------------------------
// PAC-Bayes bound:
//   (sqrt(8)/sqrt(n)) * ( sum_i log(2*rho*b*(sqrt(sigma_i)+lambda)/eta)
//                         + (eta/(2*rho*b)) * sum_i 1/(sqrt(sigma_i)+lambda)
//                         + c0 )^{1/2}
//   c0 = ||x*||^2/(2*rho) - d/2 + 2*ln(2n/tau)

struct PacInputs {
    std::vector<double> sigmas;  // Hessian eigenvalues, length d
    double lambda = 0.0;
    double eta = 1e-3;
    double rho = 1.0;   // prior variance
    double b = 1.0;     // batch size
    double n = 1.0;     // training set size
    double tau = 0.05;
    double xstar_norm = 0.0;

    void validate() const {
        if (sigmas.empty()) throw DomainError("pac: need at least one eigenvalue");
        for (double s : sigmas)
            if (!(s >= 0.0)) throw DomainError("pac: eigenvalues must be >= 0");
        if (!(lambda >= 0.0)) throw DomainError("pac: lambda must be >= 0");
        if (!(eta > 0.0)) throw DomainError("pac: eta must be > 0");
        if (!(rho > 0.0)) throw DomainError("pac: rho must be > 0");
        if (!(b >= 1.0)) throw DomainError("pac: b must be >= 1");
        if (!(n >= 1.0)) throw DomainError("pac: n must be >= 1");
        if (!(tau > 0.0 && tau < 1.0)) throw DomainError("pac: tau must be in (0, 1)");
        if (!(xstar_norm >= 0.0)) throw DomainError("pac: ||x*|| must be >= 0");
        for (double s : sigmas)
            if (!(std::sqrt(s) + lambda > 0.0))
                throw DomainError("pac: sqrt(sigma_i) + lambda must be > 0 for the log to exist");
    }
};

struct PacResult {
    double bound = 0.0;
    double term_log = 0.0;  // nondecreasing in lambda
    double term_inv = 0.0;  // nonincreasing in lambda
    double c0 = 0.0;
};

inline PacResult pac_bayes_bound(const PacInputs& in) {
    in.validate();
    PacResult out;
    for (double s : in.sigmas) {
        const double root = std::sqrt(s) + in.lambda;
        out.term_log += std::log(2.0 * in.rho * in.b * root / in.eta);
        out.term_inv += 1.0 / root;
    }
    out.term_inv *= in.eta / (2.0 * in.rho * in.b);
    const double d = static_cast<double>(in.sigmas.size());
    out.c0 = in.xstar_norm * in.xstar_norm / (2.0 * in.rho) - d / 2.0 +
             2.0 * std::log(2.0 * in.n / in.tau);
    const double bracket = out.term_log + out.term_inv + out.c0;
    if (bracket < 0.0)
        throw DomainError("pac: bound is vacuous at these inputs (bracket = " +
                          std::to_string(bracket) + " < 0)");
    out.bound = std::sqrt(8.0) / std::sqrt(in.n) * std::sqrt(bracket);
    return out;
}

// ---------------------------------------------------------------------------
// Stationary covariance M = (eta/(2b)) U (S^{1/2} + lambda I)^{-1} U', where
// U S U' is the eigendecomposition of the PSD matrix H.

inline Eigen::MatrixXd stationary_covariance(const Eigen::MatrixXd& h, double eta, double b,
                                             double lambda) {
    if (h.rows() != h.cols()) throw DomainError("covariance: H must be square");
    if (h.rows() > 512) throw DomainError("covariance: dimension capped at 512");
    if (!(eta > 0.0) || !(b > 0.0) || !(lambda >= 0.0))
        throw DomainError("covariance: need eta > 0, b > 0, lambda >= 0");
    const double sym_err = (h - h.transpose()).cwiseAbs().maxCoeff();
    if (sym_err > 1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
        throw DomainError("covariance: H is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw DomainError("covariance: eigendecomposition failed");
    Eigen::VectorXd evals = eig.eigenvalues();
    Eigen::VectorXd inv(evals.size());
    for (Eigen::Index i = 0; i < evals.size(); ++i) {
        if (evals(i) < -1e-10) throw DomainError("covariance: H has a negative eigenvalue");
        const double root = std::sqrt(std::max(evals(i), 0.0)) + lambda;
        if (!(root > 0.0))
            throw DomainError(
                "covariance: singular (zero eigenvalue with lambda = 0); add weight decay");
        inv(i) = 1.0 / root;
    }
    return (eta / (2.0 * b)) * eig.eigenvectors() * inv.asDiagonal() *
           eig.eigenvectors().transpose();
}

// Discrete simulation of the preconditioned dynamics with the preconditioner
// frozen at H^{-1/2}:
//   x <- x - eta*(H^{1/2} x + lambda x) + eta * H^{-1/2} w,  w ~ N(0, H/b),
// which injects isotropic per-step noise of scale eta/sqrt(b). Returns the
// sample second-moment matrix over post-burn-in iterates.
inline Eigen::MatrixXd empirical_stationary_covariance(const Eigen::MatrixXd& h, double eta,
                                                       double b, double lambda, long steps,
                                                       long burn_in, RngStream& rng) {
    if (h.rows() != h.cols()) throw DomainError("ou: H must be square");
    if (h.rows() > 64) throw DomainError("ou: simulation dimension capped at 64");
    if (steps <= burn_in || burn_in < 0) throw DomainError("ou: need steps > burn_in >= 0");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    if (eig.info() != Eigen::Success) throw DomainError("ou: eigendecomposition failed");
    double radius = 0.0;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i) {
        const double ev = eig.eigenvalues()(i);
        if (ev < -1e-10) throw DomainError("ou: H has a negative eigenvalue");
        radius = std::max(radius,
                          std::abs(1.0 - eta * (std::sqrt(std::max(ev, 0.0)) + lambda)));
    }
    if (radius >= 1.0)
        throw DomainError("ou: dynamics unstable, spectral radius " + std::to_string(radius) +
                          " >= 1; reduce eta");
    const Eigen::Index d = h.rows();
    Eigen::MatrixXd sqrt_h = Eigen::MatrixXd::Zero(d, d);
    {
        Eigen::VectorXd roots(d);
        for (Eigen::Index i = 0; i < d; ++i)
            roots(i) = std::sqrt(std::max(eig.eigenvalues()(i), 0.0));
        sqrt_h = eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
    }
    const Eigen::MatrixXd amat =
        Eigen::MatrixXd::Identity(d, d) - eta * (sqrt_h + lambda * Eigen::MatrixXd::Identity(d, d));
    const double noise_scale = eta / std::sqrt(b);

    Eigen::VectorXd x = Eigen::VectorXd::Zero(d), w(d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (long s = 0; s < steps; ++s) {
        for (Eigen::Index i = 0; i < d; ++i) w(i) = noise_scale * rng.normal();
        x = amat * x + w;
        if (s >= burn_in) second.noalias() += x * x.transpose();
    }
    return second / static_cast<double>(steps - burn_in);
}

// ---------------------------------------------------------------------------
// Round diagnostics.

// (1/S) sum_i ||x_i - mean||_2.
inline double drift_metric(const std::vector<ParamVector>& finals, const ParamVector& mean) {
    if (finals.empty()) throw Error("drift_metric: empty client list");
    double acc = 0.0;
    for (const auto& x : finals) {
        ensure_same_length(x, mean, "drift_metric");
        double sq = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double dxj = x[j] - mean[j];
            sq += dxj * dxj;
        }
        acc += std::sqrt(sq);
    }
    return acc / static_cast<double>(finals.size());
}

inline double drift_metric(const std::vector<ParamVector>& finals) {
    if (finals.empty()) throw Error("drift_metric: empty client list");
    ParamVector mean(finals.front().size(), 0.0);
    for (const auto& x : finals) {
        ensure_same_length(x, mean, "drift_metric");
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += x[j];
    }
    for (double& mj : mean) mj /= static_cast<double>(finals.size());
    return drift_metric(finals, mean);
}

// Population variance across clients, per coordinate, averaged over coordinates.
inline double v_cross_client_variance(const std::vector<ParamVector>& vs) {
    if (vs.empty()) throw Error("v_cross_client_variance: empty client list");
    const std::size_t d = vs.front().size();
    if (d == 0) throw Error("v_cross_client_variance: empty vectors");
    const double inv_n = 1.0 / static_cast<double>(vs.size());
    double total = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& v : vs) {
            if (v.size() != d) throw Error("v_cross_client_variance: length mismatch");
            mean += v[j];
        }
        mean *= inv_n;
        double var = 0.0;
        for (const auto& v : vs) {
            const double dv = v[j] - mean;
            var += dv * dv;
        }
        total += var * inv_n;
    }
    return total / static_cast<double>(d);
}

}  // namespace fedopt
