// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fedopt/rng.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

// Central-difference validation of the deterministic gradient oracle on a
// random subset of coordinates. Returns the max relative error, with the
// denominator floored at 1 so near-zero gradient entries do not blow up.
inline double finite_diff_check(const Task& task, const ParamVector& x, int client,
                                RngStream& rng, int num_coords = 32, double h = 1e-5) {
    const LossGrad exact = task.exact_loss_and_grad(x, client);
    const std::size_t d = x.size();
    std::vector<std::size_t> coords;
    if (static_cast<std::size_t>(num_coords) >= d) {
        coords.resize(d);
        for (std::size_t j = 0; j < d; ++j) coords[j] = j;
    } else {
        std::vector<std::size_t> all(d);
        for (std::size_t j = 0; j < d; ++j) all[j] = j;
        for (int i = 0; i < num_coords; ++i) {
            const auto pick = static_cast<std::size_t>(
                rng.uniform_int(i, static_cast<std::int64_t>(d) - 1));
            std::swap(all[static_cast<std::size_t>(i)], all[pick]);
            coords.push_back(all[static_cast<std::size_t>(i)]);
        }
    }
    ParamVector xp = x;
    double max_rel = 0.0;
    for (std::size_t j : coords) {
        const double orig = xp[j];
        xp[j] = orig + h;
        const double fp = task.exact_loss_and_grad(xp, client).loss;
        xp[j] = orig - h;
        const double fm = task.exact_loss_and_grad(xp, client).loss;
        xp[j] = orig;
        const double fd = (fp - fm) / (2.0 * h);
        const double denom = std::max(1.0, std::abs(exact.grad[j]));
        max_rel = std::max(max_rel, std::abs(fd - exact.grad[j]) / denom);
    }
    return max_rel;
}

}  // namespace fedopt
