// SPDX-License-Identifier: Apache-2.0
//
// Flat parameter storage, named block partitions, and block-mean
// reduction/broadcast. All reductions run in ascending index order with
// sequential accumulation so that serial and parallel execution modes
// produce identical bits.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "fedopt/errors.hpp"

namespace fedopt {

// All model parameters as one flat array of 64-bit reals.
using ParamVector = std::vector<double>;

inline void ensure_finite(const ParamVector& v, const char* what) {
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (!std::isfinite(v[j])) {
            throw NumericError(std::string(what) + ": non-finite entry at index " +
                               std::to_string(j));
        }
    }
}

inline void ensure_same_length(const ParamVector& a, const ParamVector& b, const char* what) {
    if (a.size() != b.size()) {
        throw Error(std::string(what) + ": length mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
    }
}

// Sequential ascending-index sum.
inline double sum(const ParamVector& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc;
}

// Kahan compensated variant, selectable behind a config flag.
inline double sum_compensated(const ParamVector& v) {
    double acc = 0.0, comp = 0.0;
    for (double x : v) {
        double y = x - comp;
        double t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    return acc;
}

inline double squared_norm(const ParamVector& v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

inline double norm(const ParamVector& v) { return std::sqrt(squared_norm(v)); }

inline double max_abs_diff(const ParamVector& a, const ParamVector& b) {
    ensure_same_length(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

// One named half-open index range [begin, end) into a parameter vector.
struct Block {
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
};

// An ordered list of blocks forming a disjoint cover of [0, dim).
class BlockPartition {
public:
    BlockPartition(std::vector<Block> blocks, std::size_t dim)
        : blocks_(std::move(blocks)), dim_(dim) {
        validate();
    }

    const std::vector<Block>& blocks() const { return blocks_; }
    std::size_t num_blocks() const { return blocks_.size(); }
    std::size_t dim() const { return dim_; }

private:
    void validate() const {
        if (blocks_.empty()) throw InvalidPartitionError("partition has no blocks");
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        ranges.reserve(blocks_.size());
        for (const auto& b : blocks_) {
            if (b.begin >= b.end)
                throw InvalidPartitionError("block '" + b.name + "' is empty or inverted");
            if (b.end > dim_)
                throw InvalidPartitionError("block '" + b.name + "' exceeds dimension " +
                                            std::to_string(dim_));
            ranges.emplace_back(b.begin, b.end);
        }
        std::sort(ranges.begin(), ranges.end());
        std::size_t cursor = 0;
        for (const auto& [lo, hi] : ranges) {
            if (lo != cursor)
                throw InvalidPartitionError(
                    lo < cursor ? "overlapping blocks at index " + std::to_string(lo)
                                : "gap in partition at index " + std::to_string(cursor));
            cursor = hi;
        }
        if (cursor != dim_)
            throw InvalidPartitionError("partition covers [0, " + std::to_string(cursor) +
                                        ") but dimension is " + std::to_string(dim_));
    }

    std::vector<Block> blocks_;
    std::size_t dim_;
};

// Per-block scalar means, tied to the partition that produced them.
struct BlockMeans {
    std::vector<double> means;
    std::shared_ptr<const BlockPartition> partition;
};

// means[b] = arithmetic mean of v over block b, ascending-index accumulation.
inline BlockMeans block_mean(const ParamVector& v,
                             const std::shared_ptr<const BlockPartition>& p) {
    if (!p) throw InvalidPartitionError("block_mean: null partition");
    if (p->dim() != v.size())
        throw InvalidPartitionError("block_mean: partition of dimension " +
                                    std::to_string(p->dim()) + " does not cover vector of length " +
                                    std::to_string(v.size()));
    BlockMeans out;
    out.partition = p;
    out.means.reserve(p->num_blocks());
    for (const Block& b : p->blocks()) {
        // A constant block's mean is that constant, bit for bit; this makes
        // block_mean an exact left inverse of expand_block_means.
        bool constant = true;
        for (std::size_t j = b.begin + 1; j < b.end && constant; ++j)
            constant = v[j] == v[b.begin];
        if (constant) {
            out.means.push_back(v[b.begin]);
            continue;
        }
        double acc = 0.0;
        for (std::size_t j = b.begin; j < b.end; ++j) acc += v[j];
        out.means.push_back(acc / static_cast<double>(b.size()));
    }
    return out;
}

// Broadcast each block mean across its index range.
inline ParamVector expand_block_means(const BlockMeans& m) {
    if (!m.partition) throw InvalidPartitionError("expand_block_means: null partition");
    if (m.means.size() != m.partition->num_blocks())
        throw InvalidPartitionError("expand_block_means: " + std::to_string(m.means.size()) +
                                    " means for " + std::to_string(m.partition->num_blocks()) +
                                    " blocks");
    ParamVector out(m.partition->dim());
    const auto& blocks = m.partition->blocks();
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t j = blocks[b].begin; j < blocks[b].end; ++j) out[j] = m.means[b];
    }
    return out;
}

}  // namespace fedopt
