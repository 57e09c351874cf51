// SPDX-License-Identifier: Apache-2.0
//
// Dirichlet non-i.i.d. data partitioning: for each class, client proportions
// are drawn from Dir(conc * 1_N) and that class's samples are assigned
// multinomially. Smaller conc means higher heterogeneity.
#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"

namespace fedopt {

struct DirichletPartition {
    std::vector<std::vector<int>> client_indices;  // per client, ascending sample ids
    int repaired_clients = 0;                      // empty clients filled by repair
};

inline DirichletPartition dirichlet_partition(const std::vector<int>& labels, int num_clients,
                                              double conc, RngStream& rng) {
    if (num_clients < 1) throw ConfigError("dirichlet_partition: need at least one client");
    if (!(conc > 0.0)) throw ConfigError("dirichlet_partition: concentration must be > 0");
    if (labels.empty()) throw ConfigError("dirichlet_partition: empty label array");

    int num_classes = 0;
    for (int c : labels) {
        if (c < 0) throw ConfigError("dirichlet_partition: negative class id");
        num_classes = std::max(num_classes, c + 1);
    }

    DirichletPartition out;
    out.client_indices.assign(static_cast<std::size_t>(num_clients), {});

    // Sample ids grouped per class, ascending.
    std::vector<std::vector<int>> by_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[static_cast<std::size_t>(labels[i])].push_back(static_cast<int>(i));

    std::vector<double> cumulative(static_cast<std::size_t>(num_clients));
    for (const auto& samples : by_class) {
        if (samples.empty()) continue;
        // Dirichlet via normalized gammas.
        double total = 0.0;
        for (int n = 0; n < num_clients; ++n) {
            double g = rng.gamma(conc);
            cumulative[static_cast<std::size_t>(n)] = g;
            total += g;
        }
        double acc = 0.0;
        for (int n = 0; n < num_clients; ++n) {
            acc += cumulative[static_cast<std::size_t>(n)] / total;
            cumulative[static_cast<std::size_t>(n)] = acc;
        }
        cumulative[static_cast<std::size_t>(num_clients) - 1] = 1.0;
        for (int id : samples) {
            const double u = rng.uniform();
            const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            auto n = static_cast<std::size_t>(std::distance(cumulative.begin(), it));
            if (n >= cumulative.size()) n = cumulative.size() - 1;
            out.client_indices[n].push_back(id);
        }
    }

    // Empty-client repair: move one sample from the currently largest client.
    for (std::size_t n = 0; n < out.client_indices.size(); ++n) {
        if (!out.client_indices[n].empty()) continue;
        std::size_t largest = 0;
        for (std::size_t m = 1; m < out.client_indices.size(); ++m) {
            if (out.client_indices[m].size() > out.client_indices[largest].size()) largest = m;
        }
        if (out.client_indices[largest].size() < 2)
            throw ConfigError("dirichlet_partition: not enough samples to repair empty clients");
        out.client_indices[n].push_back(out.client_indices[largest].back());
        out.client_indices[largest].pop_back();
        out.repaired_clients += 1;
    }

    for (auto& idx : out.client_indices) std::sort(idx.begin(), idx.end());
    return out;
}

}  // namespace fedopt
