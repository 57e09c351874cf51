// SPDX-License-Identifier: Apache-2.0
//
// Synthetic labeled datasets (Gaussian blobs, token sequences) and a small
// CSV loader for external data. Client index lists come from the Dirichlet
// partitioner or an equal round-robin split.
#pragma once

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/rng.hpp"
#include "fedopt/tasks/dirichlet.hpp"

namespace fedopt {

struct LabeledData {
    Eigen::MatrixXd features;  // n x f
    std::vector<int> labels;   // n, in [0, classes)
    int classes = 0;
};

// Gaussian blobs: class centers ~ N(0, sep^2 I), samples = center + N(0, I).
inline LabeledData make_blobs(int samples, int features, int classes, double sep,
                              RngStream& rng) {
    if (samples < classes || classes < 2 || features < 1)
        throw ConfigError("make_blobs: need samples >= classes >= 2 and features >= 1");
    LabeledData out;
    out.classes = classes;
    out.features.resize(samples, features);
    out.labels.resize(static_cast<std::size_t>(samples));
    Eigen::MatrixXd centers(classes, features);
    for (int c = 0; c < classes; ++c)
        for (int j = 0; j < features; ++j) centers(c, j) = sep * rng.normal();
    for (int i = 0; i < samples; ++i) {
        const int c = i % classes;  // balanced classes
        out.labels[static_cast<std::size_t>(i)] = c;
        for (int j = 0; j < features; ++j) out.features(i, j) = centers(c, j) + rng.normal();
    }
    return out;
}

// Token sequences for the attention task: label c in [0, vocab); each token
// equals c with probability `bias`, otherwise uniform over the vocabulary.
struct SequenceData {
    std::vector<std::vector<int>> tokens;  // n sequences of fixed length
    std::vector<int> labels;
    int vocab = 0;
};

inline SequenceData make_token_sequences(int samples, int seq_len, int vocab, double bias,
                                         RngStream& rng) {
    if (samples < 1 || seq_len < 1 || vocab < 2)
        throw ConfigError("make_token_sequences: need samples >= 1, seq_len >= 1, vocab >= 2");
    SequenceData out;
    out.vocab = vocab;
    out.tokens.resize(static_cast<std::size_t>(samples));
    out.labels.resize(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        const int c = i % vocab;
        out.labels[static_cast<std::size_t>(i)] = c;
        auto& seq = out.tokens[static_cast<std::size_t>(i)];
        seq.resize(static_cast<std::size_t>(seq_len));
        for (int l = 0; l < seq_len; ++l) {
            seq[static_cast<std::size_t>(l)] =
                rng.uniform() < bias ? c : static_cast<int>(rng.uniform_int(0, vocab - 1));
        }
    }
    return out;
}

// Rows of (feature..., label); label is the last field.
inline LabeledData load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
        if (fields.size() < 2) throw ConfigError("dataset row needs features and a label: " + path);
        labels.push_back(static_cast<int>(fields.back()));
        fields.pop_back();
        if (!rows.empty() && rows.front().size() != fields.size())
            throw ConfigError("inconsistent field count in dataset: " + path);
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw ConfigError("empty dataset: " + path);
    LabeledData out;
    out.features.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    out.labels = std::move(labels);
    for (int c : out.labels) {
        if (c < 0) throw ConfigError("negative label in dataset: " + path);
        out.classes = std::max(out.classes, c + 1);
    }
    return out;
}

enum class SplitKind { equal, dirichlet };

// Per-client sample index lists forming a disjoint cover of the dataset.
inline std::vector<std::vector<int>> split_clients(const std::vector<int>& labels,
                                                   int num_clients, SplitKind kind,
                                                   double dirichlet_conc, RngStream& rng) {
    if (num_clients < 1) throw ConfigError("split_clients: need at least one client");
    if (kind == SplitKind::dirichlet)
        return dirichlet_partition(labels, num_clients, dirichlet_conc, rng).client_indices;
    std::vector<std::vector<int>> out(static_cast<std::size_t>(num_clients));
    for (std::size_t i = 0; i < labels.size(); ++i)
        out[i % static_cast<std::size_t>(num_clients)].push_back(static_cast<int>(i));
    return out;
}

}  // namespace fedopt
