// SPDX-License-Identifier: Apache-2.0
//
// Multiclass logistic regression (softmax cross-entropy, no built-in L2;
// decay is the optimizer's job). Parameters are a single C x F weight
// matrix stored row-major with the class axis leading.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/tasks/data.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

struct LogisticTaskConfig {
    int samples = 500;
    int features = 10;
    int classes = 4;
    int num_clients = 10;
    int batch = 16;             // 0 = full local batch (deterministic)
    double blob_sep = 2.0;
    SplitKind split = SplitKind::dirichlet;
    double dirichlet_conc = 0.5;
    std::string csv_path;       // optional external dataset

    void validate() const {
        if (num_clients < 1) throw ConfigError("logistic.clients must be >= 1");
        if (batch < 0) throw ConfigError("logistic.batch must be >= 0");
        if (csv_path.empty() && (samples < classes || classes < 2 || features < 1))
            throw ConfigError("logistic: need samples >= classes >= 2 and features >= 1");
    }
};

class LogisticTask final : public Task {
public:
    LogisticTask(const LogisticTaskConfig& cfg, SeedSpec seed) : cfg_(cfg) {
        cfg_.validate();
        RngStream data_rng = derive_rng(seed, 0, -1, StreamPurpose::task_data);
        data_ = cfg_.csv_path.empty()
                    ? make_blobs(cfg_.samples, cfg_.features, cfg_.classes, cfg_.blob_sep, data_rng)
                    : load_csv(cfg_.csv_path);
        clients_ = split_clients(data_.labels, cfg_.num_clients, cfg_.split, cfg_.dirichlet_conc,
                                 data_rng);
        dim_ = static_cast<std::size_t>(data_.classes) *
               static_cast<std::size_t>(data_.features.cols());
        RngStream init_rng = derive_rng(seed, 0, -1, StreamPurpose::init);
        const double scale = 1.0 / std::sqrt(static_cast<double>(data_.features.cols()));
        x0_.resize(dim_);
        for (double& w : x0_) w = scale * init_rng.normal();
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
        TensorMeta m;
        m.name = "W";
        m.kind = TensorKind::mlp;
        m.shape = {static_cast<std::size_t>(data_.classes),
                   static_cast<std::size_t>(data_.features.cols())};
        m.out_neurons = static_cast<std::size_t>(data_.classes);
        return {m};
    }

    const LabeledData& data() const { return data_; }
    const std::vector<std::vector<int>>& client_indices() const { return clients_; }

private:
    const std::vector<int>& client_samples(int client) const {
        if (client < 0 || client >= num_clients())
            throw Error("logistic: client id out of range");
        return clients_[static_cast<std::size_t>(client)];
    }

    LossGrad batch_loss_grad(const ParamVector& x, const std::vector<int>& idx) const {
        if (x.size() != dim_) throw Error("logistic: dimension mismatch");
        if (idx.empty()) throw Error("logistic: empty batch");
        const int c = data_.classes;
        const auto f = data_.features.cols();
        const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>
            w(x.data(), c, f);
        LossGrad out;
        out.grad.assign(dim_, 0.0);
        Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
            out.grad.data(), c, f);
        Eigen::VectorXd logits(c), p(c);
        for (int id : idx) {
            const Eigen::VectorXd xi = data_.features.row(id).transpose();
            logits.noalias() = w * xi;
            const double zmax = logits.maxCoeff();
            p = (logits.array() - zmax).exp();
            const double z = p.sum();
            p /= z;
            const int y = data_.labels[static_cast<std::size_t>(id)];
            out.loss += -(logits(y) - zmax - std::log(z));
            p(y) -= 1.0;
            gw.noalias() += p * xi.transpose();
        }
        const double inv = 1.0 / static_cast<double>(idx.size());
        out.loss *= inv;
        for (double& g : out.grad) g *= inv;
        return out;
    }

    LogisticTaskConfig cfg_;
    LabeledData data_;
    std::vector<std::vector<int>> clients_;
    std::size_t dim_ = 0;
    ParamVector x0_;
};

}  // namespace fedopt
