// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "fedopt/params.hpp"
#include "fedopt/partition_builder.hpp"
#include "fedopt/rng.hpp"

namespace fedopt {

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

// A federated objective f = (1/N) sum_i f_i with per-client oracles.
//
// loss_and_grad draws an unbiased stochastic gradient of f_i using the given
// stream; exact_loss_and_grad is the deterministic full-batch / noiseless
// oracle used for metrics and finite-difference checks. Task objects are
// immutable after construction, so concurrent client evaluation is safe.
class Task {
public:
    virtual ~Task() = default;

    virtual std::size_t dim() const = 0;
    virtual int num_clients() const = 0;

    virtual const ParamVector& initial_params() const = 0;

    virtual LossGrad loss_and_grad(const ParamVector& x, int client, RngStream& rng) const = 0;

    virtual LossGrad exact_loss_and_grad(const ParamVector& x, int client) const = 0;

    // Exact global objective; clients averaged in ascending id order.
    virtual LossGrad global_loss_and_grad(const ParamVector& x) const {
        const int n = num_clients();
        LossGrad out;
        out.grad.assign(dim(), 0.0);
        for (int i = 0; i < n; ++i) {
            LossGrad li = exact_loss_and_grad(x, i);
            out.loss += li.loss;
            for (std::size_t j = 0; j < out.grad.size(); ++j) out.grad[j] += li.grad[j];
        }
        const double inv = 1.0 / static_cast<double>(n);
        out.loss *= inv;
        for (double& g : out.grad) g *= inv;
        return out;
    }

    // Named-tensor layout consumed by the partition builder.
    virtual std::vector<TensorMeta> tensor_metas() const = 0;
};

}  // namespace fedopt
