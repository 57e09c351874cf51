// SPDX-License-Identifier: Apache-2.0
//
// A single multi-head self-attention block with residuals, a small tanh MLP,
// mean pooling and a linear classification head, with hand-derived
// backpropagation (locked by the finite-difference suite). This is the
// smallest structure that exercises every partition class: embedding and
// output tables split by token row, query/key by head, value / projection /
// MLP tensors by output neuron.
//
// Layout (contiguous, row-major, output axis leading):
//   E (V x D), Wq (D x D), Wk (D x D), Wv (D x D), Wo (D x D),
//   W1 (M x D), W2 (D x M), Wout (V x D)
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/tasks/data.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

struct AttentionTaskConfig {
    int vocab = 8;        // classes == vocab
    int d_model = 16;
    int heads = 4;
    int mlp_hidden = 32;
    int seq_len = 6;
    int samples = 256;
    int num_clients = 8;
    int batch = 8;        // 0 = full local batch
    double token_bias = 0.6;
    SplitKind split = SplitKind::dirichlet;
    double dirichlet_conc = 0.5;

    void validate() const {
        if (vocab < 2) throw ConfigError("attention.vocab must be >= 2");
        if (heads < 1 || heads > 4) throw ConfigError("attention.heads must be in [1, 4]");
        if (d_model < heads || d_model % heads != 0)
            throw ConfigError("attention.d_model must be a positive multiple of heads");
        if (mlp_hidden < 1) throw ConfigError("attention.mlp_hidden must be >= 1");
        if (seq_len < 1) throw ConfigError("attention.seq_len must be >= 1");
        if (num_clients < 1) throw ConfigError("attention.clients must be >= 1");
        if (batch < 0) throw ConfigError("attention.batch must be >= 0");
        if (samples < vocab) throw ConfigError("attention.samples must be >= vocab");
        if (!(token_bias >= 0.0 && token_bias <= 1.0))
            throw ConfigError("attention.token_bias must be in [0, 1]");
    }
};

class TinyAttentionTask final : public Task {
public:
    TinyAttentionTask(const AttentionTaskConfig& cfg, SeedSpec seed) : cfg_(cfg) {
        cfg_.validate();
        RngStream data_rng = derive_rng(seed, 0, -1, StreamPurpose::task_data);
        data_ = make_token_sequences(cfg_.samples, cfg_.seq_len, cfg_.vocab, cfg_.token_bias,
                                     data_rng);
        clients_ = split_clients(data_.labels, cfg_.num_clients, cfg_.split, cfg_.dirichlet_conc,
                                 data_rng);

        const std::size_t v = static_cast<std::size_t>(cfg_.vocab);
        const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
        const std::size_t m = static_cast<std::size_t>(cfg_.mlp_hidden);
        off_e_ = 0;
        off_q_ = off_e_ + v * d;
        off_k_ = off_q_ + d * d;
        off_v_ = off_k_ + d * d;
        off_o_ = off_v_ + d * d;
        off_w1_ = off_o_ + d * d;
        off_w2_ = off_w1_ + m * d;
        off_out_ = off_w2_ + d * m;
        dim_ = off_out_ + v * d;

        RngStream init_rng = derive_rng(seed, 0, -1, StreamPurpose::init);
        x0_.resize(dim_);
        const double sd = 1.0 / std::sqrt(static_cast<double>(d));
        const double sm = 1.0 / std::sqrt(static_cast<double>(m));
        for (std::size_t j = 0; j < x0_.size(); ++j) {
            double scale = sd;
            if (j < off_q_) scale = 0.5;          // embedding table
            else if (j >= off_w2_ && j < off_out_) scale = sm;
            x0_[j] = scale * init_rng.normal();
        }
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
        const auto v = static_cast<std::size_t>(cfg_.vocab);
        const auto d = static_cast<std::size_t>(cfg_.d_model);
        const auto m = static_cast<std::size_t>(cfg_.mlp_hidden);
        const auto h = static_cast<std::size_t>(cfg_.heads);
        return {
            {"embed", TensorKind::embed, {v, d}, 0, 0, v},
            {"attn.query", TensorKind::query, {d, d}, h, 0, 0},
            {"attn.key", TensorKind::key, {d, d}, h, 0, 0},
            {"attn.value", TensorKind::value, {d, d}, 0, d, 0},
            {"attn.proj", TensorKind::attn_proj, {d, d}, 0, d, 0},
            {"mlp.fc1", TensorKind::mlp, {m, d}, 0, m, 0},
            {"mlp.fc2", TensorKind::mlp, {d, m}, 0, d, 0},
            {"head", TensorKind::output, {v, d}, 0, 0, v},
        };
    }

    const SequenceData& data() const { return data_; }
    const AttentionTaskConfig& config() const { return cfg_; }

private:
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    const std::vector<int>& client_samples(int client) const {
        if (client < 0 || client >= num_clients())
            throw Error("attention: client id out of range");
        return clients_[static_cast<std::size_t>(client)];
    }

    LossGrad batch_loss_grad(const ParamVector& x, const std::vector<int>& idx) const {
        if (x.size() != dim_) throw Error("attention: dimension mismatch");
        if (idx.empty()) throw Error("attention: empty batch");
        const int vcb = cfg_.vocab, d = cfg_.d_model, m = cfg_.mlp_hidden;
        const int L = cfg_.seq_len, nh = cfg_.heads, dh = d / nh;
        const double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));

        const double* p = x.data();
        const Eigen::Map<const RowMajor> te(p + off_e_, vcb, d);
        const Eigen::Map<const RowMajor> wq(p + off_q_, d, d);
        const Eigen::Map<const RowMajor> wk(p + off_k_, d, d);
        const Eigen::Map<const RowMajor> wv(p + off_v_, d, d);
        const Eigen::Map<const RowMajor> wo(p + off_o_, d, d);
        const Eigen::Map<const RowMajor> w1(p + off_w1_, m, d);
        const Eigen::Map<const RowMajor> w2(p + off_w2_, d, m);
        const Eigen::Map<const RowMajor> wout(p + off_out_, vcb, d);

        LossGrad out;
        out.grad.assign(dim_, 0.0);
        double* gp = out.grad.data();
        Eigen::Map<RowMajor> ge(gp + off_e_, vcb, d);
        Eigen::Map<RowMajor> gwq(gp + off_q_, d, d);
        Eigen::Map<RowMajor> gwk(gp + off_k_, d, d);
        Eigen::Map<RowMajor> gwv(gp + off_v_, d, d);
        Eigen::Map<RowMajor> gwo(gp + off_o_, d, d);
        Eigen::Map<RowMajor> gw1(gp + off_w1_, m, d);
        Eigen::Map<RowMajor> gw2(gp + off_w2_, d, m);
        Eigen::Map<RowMajor> gwout(gp + off_out_, vcb, d);

        RowMajor xmat(L, d), q(L, d), k(L, d), v(L, d), o(L, d);
        RowMajor h1(L, d), z1f(L, m), z2(L, d), h2(L, d);
        std::vector<RowMajor> attn(static_cast<std::size_t>(nh));

        for (int id : idx) {
            const auto& seq = data_.tokens[static_cast<std::size_t>(id)];
            const int y = data_.labels[static_cast<std::size_t>(id)];

            // Forward.
            for (int l = 0; l < L; ++l) xmat.row(l) = te.row(seq[static_cast<std::size_t>(l)]);
            q.noalias() = xmat * wq.transpose();
            k.noalias() = xmat * wk.transpose();
            v.noalias() = xmat * wv.transpose();
            for (int h = 0; h < nh; ++h) {
                auto qh = q.middleCols(h * dh, dh);
                auto kh = k.middleCols(h * dh, dh);
                auto vh = v.middleCols(h * dh, dh);
                RowMajor scores = qh * kh.transpose() * inv_sqrt_dh;
                for (int l = 0; l < L; ++l) {
                    const double rmax = scores.row(l).maxCoeff();
                    scores.row(l) = (scores.row(l).array() - rmax).exp();
                    scores.row(l) /= scores.row(l).sum();
                }
                attn[static_cast<std::size_t>(h)] = scores;
                o.middleCols(h * dh, dh).noalias() = scores * vh;
            }
            h1.noalias() = o * wo.transpose();
            h1 += xmat;
            z1f.noalias() = h1 * w1.transpose();
            z1f = z1f.array().tanh();  // activations, kept for backward
            z2.noalias() = z1f * w2.transpose();
            h2 = h1 + z2;
            Eigen::VectorXd pooled = h2.colwise().mean().transpose();
            Eigen::VectorXd logits = wout * pooled;
            const double zmax = logits.maxCoeff();
            Eigen::VectorXd prob = (logits.array() - zmax).exp();
            const double zsum = prob.sum();
            prob /= zsum;
            out.loss += -(logits(y) - zmax - std::log(zsum));

            // Backward.
            prob(y) -= 1.0;  // dL/dlogits
            gwout.noalias() += prob * pooled.transpose();
            Eigen::VectorXd dpooled = wout.transpose() * prob;
            RowMajor dh2 = (1.0 / static_cast<double>(L)) *
                           dpooled.transpose().replicate(L, 1);
            // Residual: h2 = h1 + z2.
            RowMajor dh1 = dh2;
            gw2.noalias() += dh2.transpose() * z1f;
            RowMajor df = dh2 * w2;
            RowMajor dz1 = df.array() * (1.0 - z1f.array().square());
            gw1.noalias() += dz1.transpose() * h1;
            dh1.noalias() += dz1 * w1;
            // Residual: h1 = x + o*Wo'.
            RowMajor dxmat = dh1;
            gwo.noalias() += dh1.transpose() * o;
            RowMajor do_ = dh1 * wo;
            RowMajor dq(L, d), dk(L, d), dv(L, d);
            for (int h = 0; h < nh; ++h) {
                const auto& a = attn[static_cast<std::size_t>(h)];
                auto kh = k.middleCols(h * dh, dh);
                auto qh = q.middleCols(h * dh, dh);
                auto vh = v.middleCols(h * dh, dh);
                auto doh = do_.middleCols(h * dh, dh);
                RowMajor da = doh * vh.transpose();
                dv.middleCols(h * dh, dh).noalias() = a.transpose() * doh;
                RowMajor ds(L, L);
                for (int l = 0; l < L; ++l) {
                    const double dot = da.row(l).cwiseProduct(a.row(l)).sum();
                    ds.row(l) = a.row(l).array() * (da.row(l).array() - dot);
                }
                dq.middleCols(h * dh, dh).noalias() = ds * kh * inv_sqrt_dh;
                dk.middleCols(h * dh, dh).noalias() = ds.transpose() * qh * inv_sqrt_dh;
            }
            gwq.noalias() += dq.transpose() * xmat;
            gwk.noalias() += dk.transpose() * xmat;
            gwv.noalias() += dv.transpose() * xmat;
            dxmat.noalias() += dq * wq;
            dxmat.noalias() += dk * wk;
            dxmat.noalias() += dv * wv;
            for (int l = 0; l < L; ++l) ge.row(seq[static_cast<std::size_t>(l)]) += dxmat.row(l);
        }
        const double inv = 1.0 / static_cast<double>(idx.size());
        out.loss *= inv;
        for (double& g : out.grad) g *= inv;
        return out;
    }

    AttentionTaskConfig cfg_;
    SequenceData data_;
    std::vector<std::vector<int>> clients_;
    std::size_t dim_ = 0;
    std::size_t off_e_ = 0, off_q_ = 0, off_k_ = 0, off_v_ = 0, off_o_ = 0;
    std::size_t off_w1_ = 0, off_w2_ = 0, off_out_ = 0;
    ParamVector x0_;
};

}  // namespace fedopt
