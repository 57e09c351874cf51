// SPDX-License-Identifier: Apache-2.0
//
// One-hidden-layer tanh MLP with softmax cross-entropy and hand-derived
// backpropagation. Tensor layout: W1 (h x f), b1 (h), W2 (c x h), b2 (c),
// contiguous, row-major, output axis leading.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/tasks/data.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

struct MlpTaskConfig {
    int samples = 500;
    int features = 8;
    int hidden = 16;
    int classes = 4;
    int num_clients = 10;
    int batch = 16;  // 0 = full local batch
    double blob_sep = 2.0;
    SplitKind split = SplitKind::dirichlet;
    double dirichlet_conc = 0.5;

    void validate() const {
        if (num_clients < 1) throw ConfigError("mlp.clients must be >= 1");
        if (hidden < 1) throw ConfigError("mlp.hidden must be >= 1");
        if (batch < 0) throw ConfigError("mlp.batch must be >= 0");
        if (samples < classes || classes < 2 || features < 1)
            throw ConfigError("mlp: need samples >= classes >= 2 and features >= 1");
    }
};

class MlpTask final : public Task {
public:
    MlpTask(const MlpTaskConfig& cfg, SeedSpec seed) : cfg_(cfg) {
        cfg_.validate();
        RngStream data_rng = derive_rng(seed, 0, -1, StreamPurpose::task_data);
        data_ = make_blobs(cfg_.samples, cfg_.features, cfg_.classes, cfg_.blob_sep, data_rng);
        clients_ = split_clients(data_.labels, cfg_.num_clients, cfg_.split, cfg_.dirichlet_conc,
                                 data_rng);
        const std::size_t f = static_cast<std::size_t>(cfg_.features);
        const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
        const std::size_t c = static_cast<std::size_t>(cfg_.classes);
        dim_ = h * f + h + c * h + c;
        RngStream init_rng = derive_rng(seed, 0, -1, StreamPurpose::init);
        x0_.assign(dim_, 0.0);
        const double s1 = 1.0 / std::sqrt(static_cast<double>(f));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(h));
        std::size_t j = 0;
        for (std::size_t i = 0; i < h * f; ++i) x0_[j++] = s1 * init_rng.normal();
        j += h;  // b1 = 0
        for (std::size_t i = 0; i < c * h; ++i) x0_[j++] = s2 * init_rng.normal();
    }

    std::size_t dim() const override { return dim_; }
    int num_clients() const override { return static_cast<int>(clients_.size()); }
    const ParamVector& initial_params() const override { return x0_; }

    LossGrad exact_loss_and_grad(const ParamVector& x, int client) const override {
        return batch_loss_grad(x, client_samples(client));
    }

    LossGrad loss_and_grad(const ParamVector& x, int client, RngStream& rng) const override {
        const auto& idx = client_samples(client);
        if (cfg_.batch == 0 || static_cast<std::size_t>(cfg_.batch) >= idx.size())
            return batch_loss_grad(x, idx);
        std::vector<int> batch(static_cast<std::size_t>(cfg_.batch));
        for (int& b : batch)
            b = idx[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(idx.size()) - 1))];
        return batch_loss_grad(x, batch);
    }

    std::vector<TensorMeta> tensor_metas() const override {
        const auto f = static_cast<std::size_t>(cfg_.features);
        const auto h = static_cast<std::size_t>(cfg_.hidden);
        const auto c = static_cast<std::size_t>(cfg_.classes);
        TensorMeta w1{"W1", TensorKind::mlp, {h, f}, 0, h, 0};
        TensorMeta b1{"b1", TensorKind::other, {h}, 0, 0, 0};
        TensorMeta w2{"W2", TensorKind::mlp, {c, h}, 0, c, 0};
        TensorMeta b2{"b2", TensorKind::other, {c}, 0, 0, 0};
        return {w1, b1, w2, b2};
    }

private:
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    const std::vector<int>& client_samples(int client) const {
        if (client < 0 || client >= num_clients()) throw Error("mlp: client id out of range");
        return clients_[static_cast<std::size_t>(client)];
    }

    LossGrad batch_loss_grad(const ParamVector& x, const std::vector<int>& idx) const {
        if (x.size() != dim_) throw Error("mlp: dimension mismatch");
        if (idx.empty()) throw Error("mlp: empty batch");
        const int f = cfg_.features, h = cfg_.hidden, c = cfg_.classes;
        const double* p = x.data();
        const Eigen::Map<const RowMajor> w1(p, h, f);
        const Eigen::Map<const Eigen::VectorXd> b1(p + h * f, h);
        const Eigen::Map<const RowMajor> w2(p + h * f + h, c, h);
        const Eigen::Map<const Eigen::VectorXd> b2(p + h * f + h + c * h, c);

        LossGrad out;
        out.grad.assign(dim_, 0.0);
        double* gp = out.grad.data();
        Eigen::Map<RowMajor> gw1(gp, h, f);
        Eigen::Map<Eigen::VectorXd> gb1(gp + h * f, h);
        Eigen::Map<RowMajor> gw2(gp + h * f + h, c, h);
        Eigen::Map<Eigen::VectorXd> gb2(gp + h * f + h + c * h, c);

        Eigen::VectorXd z1(h), a1(h), logits(c), prob(c), dz1(h), da1(h);
        for (int id : idx) {
            const Eigen::VectorXd xi = data_.features.row(id).transpose();
            z1.noalias() = w1 * xi;
            z1 += b1;
            a1 = z1.array().tanh();
            logits.noalias() = w2 * a1;
            logits += b2;
            const double zmax = logits.maxCoeff();
            prob = (logits.array() - zmax).exp();
            const double z = prob.sum();
            prob /= z;
            const int y = data_.labels[static_cast<std::size_t>(id)];
            out.loss += -(logits(y) - zmax - std::log(z));

            prob(y) -= 1.0;  // dL/dlogits
            gw2.noalias() += prob * a1.transpose();
            gb2 += prob;
            da1.noalias() = w2.transpose() * prob;
            dz1 = da1.array() * (1.0 - a1.array().square());
            gw1.noalias() += dz1 * xi.transpose();
            gb1 += dz1;
        }
        const double inv = 1.0 / static_cast<double>(idx.size());
        out.loss *= inv;
        for (double& g : out.grad) g *= inv;
        return out;
    }

    MlpTaskConfig cfg_;
    LabeledData data_;
    std::vector<std::vector<int>> clients_;
    std::size_t dim_ = 0;
    ParamVector x0_;
};

}  // namespace fedopt
