// SPDX-License-Identifier: Apache-2.0
//
// Synthetic heterogeneous quadratics with exact oracles:
//   f_i(x) = 1/2 x'A_i x - b_i'x,   A_i = Q diag(s_i) Q'  (shared orthogonal Q)
// Per-client spectra are jittered multiplicatively and per-client optima are
// displaced by magnitude sigma_g, so the gradient-dissimilarity constant is
// directly controlled. Stochastic gradients add N(0, sigma_l^2/d I) noise so
// that E||noise||^2 = sigma_l^2.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

struct QuadraticTaskConfig {
    std::size_t dim = 20;
    int num_clients = 10;
    double sigma_l = 0.0;       // gradient noise level
    double sigma_g = 0.0;       // heterogeneity level
    double spectrum_min = 0.5;  // smallest base eigenvalue
    double spectrum_max = 2.0;  // largest base eigenvalue
    double jitter = 0.1;        // spectral jitter per unit sigma_g

    void validate() const {
        if (dim < 1) throw ConfigError("quadratic.dim must be >= 1");
        if (num_clients < 1) throw ConfigError("quadratic.clients must be >= 1");
        if (!(sigma_l >= 0.0)) throw ConfigError("quadratic.sigma_l must be >= 0");
        if (!(sigma_g >= 0.0)) throw ConfigError("quadratic.sigma_g must be >= 0");
        if (!(spectrum_min > 0.0) || spectrum_max < spectrum_min)
            throw ConfigError("quadratic spectrum bounds must satisfy 0 < min <= max");
    }
};

class QuadraticTask final : public Task {
public:
    QuadraticTask(const QuadraticTaskConfig& cfg, SeedSpec seed) : cfg_(cfg) {
        cfg_.validate();
        const auto d = static_cast<Eigen::Index>(cfg_.dim);
        const int n = cfg_.num_clients;
        RngStream rng = derive_rng(seed, 0, -1, StreamPurpose::task_data);

        // Shared orthogonal basis from the QR of a Gaussian matrix, with the
        // sign convention pinned for reproducibility.
        Eigen::MatrixXd raw(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) raw(r, c) = rng.normal();
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
        Eigen::MatrixXd q = qr.householderQ();
        Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
        for (Eigen::Index c = 0; c < d; ++c)
            if (rmat(c, c) < 0.0) q.col(c) = -q.col(c);

        // Base spectrum, log-spaced.
        Eigen::VectorXd base(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double frac = d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(d - 1);
            base(j) = cfg_.spectrum_min *
                      std::pow(cfg_.spectrum_max / cfg_.spectrum_min, frac);
        }

        a_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd spec(d);
            for (Eigen::Index j = 0; j < d; ++j)
                spec(j) = base(j) * std::exp(cfg_.jitter * cfg_.sigma_g * rng.normal());
            a_.push_back(q * spec.asDiagonal() * q.transpose());
        }

        Eigen::VectorXd center(d);
        for (Eigen::Index j = 0; j < d; ++j) center(j) = rng.normal();

        b_.reserve(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd u(d);
            for (Eigen::Index j = 0; j < d; ++j) u(j) = rng.normal();
            const double un = u.norm();
            if (un > 0.0) u /= un;
            b_.push_back(a_[static_cast<std::size_t>(i)] * (center + cfg_.sigma_g * u));
        }

        a_bar_ = Eigen::MatrixXd::Zero(d, d);
        b_bar_ = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < n; ++i) {
            a_bar_ += a_[static_cast<std::size_t>(i)];
            b_bar_ += b_[static_cast<std::size_t>(i)];
        }
        a_bar_ /= static_cast<double>(n);
        b_bar_ /= static_cast<double>(n);

        RngStream init_rng = derive_rng(seed, 0, -1, StreamPurpose::init);
        x0_.resize(cfg_.dim);
        for (double& x : x0_) x = init_rng.normal();
    }

    // Explicitly specified client quadratics (tests, closed-form scenarios).
    QuadraticTask(std::vector<Eigen::MatrixXd> a, std::vector<Eigen::VectorXd> b,
                  double sigma_l = 0.0) {
        if (a.empty() || a.size() != b.size())
            throw ConfigError("quadratic: need matching non-empty A_i and b_i lists");
        const Eigen::Index d = a.front().rows();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a[i].rows() != d || a[i].cols() != d || b[i].size() != d)
                throw ConfigError("quadratic: inconsistent dimensions");
            if ((a[i] - a[i].transpose()).cwiseAbs().maxCoeff() > 1e-12)
                throw ConfigError("quadratic: A_i must be symmetric");
        }
        cfg_.dim = static_cast<std::size_t>(d);
        cfg_.num_clients = static_cast<int>(a.size());
        cfg_.sigma_l = sigma_l;
        a_ = std::move(a);
        b_ = std::move(b);
        a_bar_ = Eigen::MatrixXd::Zero(d, d);
        b_bar_ = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i < a_.size(); ++i) {
            a_bar_ += a_[i];
            b_bar_ += b_[i];
        }
        a_bar_ /= static_cast<double>(a_.size());
        b_bar_ /= static_cast<double>(a_.size());
        x0_.assign(cfg_.dim, 0.0);
    }

    std::size_t dim() const override { return cfg_.dim; }
    int num_clients() const override { return cfg_.num_clients; }
    const ParamVector& initial_params() const override { return x0_; }

    LossGrad exact_loss_and_grad(const ParamVector& x, int client) const override {
        check_client(client);
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        if (xv.size() != b_bar_.size()) throw Error("quadratic: dimension mismatch");
        const auto& a = a_[static_cast<std::size_t>(client)];
        const auto& b = b_[static_cast<std::size_t>(client)];
        Eigen::VectorXd ax = a * xv;
        LossGrad out;
        out.loss = 0.5 * xv.dot(ax) - b.dot(xv);
        out.grad.resize(x.size());
        Eigen::Map<Eigen::VectorXd>(out.grad.data(), ax.size()) = ax - b;
        return out;
    }

    LossGrad loss_and_grad(const ParamVector& x, int client, RngStream& rng) const override {
        LossGrad out = exact_loss_and_grad(x, client);
        if (cfg_.sigma_l > 0.0) {
            const double scale = cfg_.sigma_l / std::sqrt(static_cast<double>(cfg_.dim));
            for (double& g : out.grad) g += scale * rng.normal();
        }
        return out;
    }

    LossGrad global_loss_and_grad(const ParamVector& x) const override {
        const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        if (xv.size() != b_bar_.size()) throw Error("quadratic: dimension mismatch");
        Eigen::VectorXd ax = a_bar_ * xv;
        LossGrad out;
        out.loss = 0.5 * xv.dot(ax) - b_bar_.dot(xv);
        out.grad.resize(x.size());
        Eigen::Map<Eigen::VectorXd>(out.grad.data(), ax.size()) = ax - b_bar_;
        return out;
    }

    std::vector<TensorMeta> tensor_metas() const override {
        TensorMeta m;
        m.name = "x";
        m.kind = TensorKind::other;
        m.shape = {cfg_.dim};
        return {m};
    }

    // x* = Abar^{-1} bbar by direct solve; f* = f(x*).
    std::pair<ParamVector, double> global_optimum() const {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a_bar_);
        if (!lu.isInvertible())
            throw DomainError(
                "quadratic global optimum: mean matrix is singular; regularize the spectrum");
        Eigen::VectorXd xs = lu.solve(b_bar_);
        ParamVector x(cfg_.dim);
        Eigen::Map<Eigen::VectorXd>(x.data(), xs.size()) = xs;
        return {x, global_loss_and_grad(x).loss};
    }

    const Eigen::MatrixXd& client_matrix(int i) const { check_client(i); return a_[static_cast<std::size_t>(i)]; }
    const Eigen::VectorXd& client_offset(int i) const { check_client(i); return b_[static_cast<std::size_t>(i)]; }
    const Eigen::MatrixXd& mean_matrix() const { return a_bar_; }
    const Eigen::VectorXd& mean_offset() const { return b_bar_; }
    const QuadraticTaskConfig& config() const { return cfg_; }

private:
    void check_client(int i) const {
        if (i < 0 || i >= cfg_.num_clients)
            throw Error("quadratic: client id " + std::to_string(i) + " out of range");
    }

    QuadraticTaskConfig cfg_;
    std::vector<Eigen::MatrixXd> a_;
    std::vector<Eigen::VectorXd> b_;
    Eigen::MatrixXd a_bar_;
    Eigen::VectorXd b_bar_;
    ParamVector x0_;
};

}  // namespace fedopt
