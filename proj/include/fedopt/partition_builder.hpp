// SPDX-License-Identifier: Apache-2.0
//
// Builds block partitions from parameter metadata. Transformer tensors are
// split along their leading axis: query/key by attention head, value and
// projection/feedforward tensors by output neuron, embedding and output
// tables by token row. Everything else gets one block per tensor.
#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "fedopt/errors.hpp"
#include "fedopt/params.hpp"

namespace fedopt {

enum class TensorKind { embed, output, query, key, value, attn_proj, mlp, other };

inline const char* to_string(TensorKind k) {
    switch (k) {
        case TensorKind::embed: return "embed";
        case TensorKind::output: return "output";
        case TensorKind::query: return "query";
        case TensorKind::key: return "key";
        case TensorKind::value: return "value";
        case TensorKind::attn_proj: return "attn_proj";
        case TensorKind::mlp: return "mlp";
        case TensorKind::other: return "other";
    }
    return "?";
}

// Metadata for one named tensor inside the flat parameter vector. Tensors are
// laid out contiguously in declaration order, row-major, with the split axis
// (heads / output neurons / tokens) leading, so every block is a contiguous
// index range.
struct TensorMeta {
    std::string name;
    TensorKind kind = TensorKind::other;
    std::vector<std::size_t> shape;
    std::size_t heads = 0;        // query/key
    std::size_t out_neurons = 0;  // value/attn_proj/mlp
    std::size_t tokens = 0;       // embed/output

    std::size_t extent() const {
        std::size_t e = 1;
        for (std::size_t s : shape) e *= s;
        return e;
    }
};

namespace detail {

inline std::size_t split_count(const TensorMeta& meta, bool value_single_block) {
    switch (meta.kind) {
        case TensorKind::embed:
        case TensorKind::output:
            if (meta.tokens == 0)
                throw ConfigError("tensor '" + meta.name + "': kind " + to_string(meta.kind) +
                                  " requires a token count");
            return meta.tokens;
        case TensorKind::query:
        case TensorKind::key:
            if (meta.heads == 0)
                throw ConfigError("tensor '" + meta.name + "': kind " + to_string(meta.kind) +
                                  " requires a head count");
            return meta.heads;
        case TensorKind::value:
            if (value_single_block) return 1;
            [[fallthrough]];
        case TensorKind::attn_proj:
        case TensorKind::mlp:
            if (meta.out_neurons == 0)
                throw ConfigError("tensor '" + meta.name + "': kind " + to_string(meta.kind) +
                                  " requires an output-neuron count");
            return meta.out_neurons;
        case TensorKind::other:
            return 1;
    }
    return 1;
}

inline void append_blocks(std::vector<Block>& out, const TensorMeta& meta, std::size_t offset,
                          std::size_t count) {
    const std::size_t extent = meta.extent();
    if (extent == 0) throw ConfigError("tensor '" + meta.name + "' has zero extent");
    if (extent % count != 0)
        throw ConfigError("tensor '" + meta.name + "': split count " + std::to_string(count) +
                          " does not divide extent " + std::to_string(extent));
    const std::size_t stride = extent / count;
    if (count == 1) {
        out.push_back({meta.name, offset, offset + extent});
        return;
    }
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({meta.name + "." + std::to_string(i), offset + i * stride,
                       offset + (i + 1) * stride});
    }
}

}  // namespace detail

// Appendix-style transformer rule set.
inline std::shared_ptr<const BlockPartition> partition_transformer(
    const std::vector<TensorMeta>& metas, bool value_single_block = false) {
    std::vector<Block> blocks;
    std::size_t offset = 0;
    for (const auto& meta : metas) {
        detail::append_blocks(blocks, meta, offset,
                              detail::split_count(meta, value_single_block));
        offset += meta.extent();
    }
    return std::make_shared<BlockPartition>(std::move(blocks), offset);
}

// One block per named tensor (the rule for CNNs and other architectures).
inline std::shared_ptr<const BlockPartition> partition_default(
    const std::vector<TensorMeta>& metas) {
    std::vector<Block> blocks;
    std::size_t offset = 0;
    for (const auto& meta : metas) {
        detail::append_blocks(blocks, meta, offset, 1);
        offset += meta.extent();
    }
    return std::make_shared<BlockPartition>(std::move(blocks), offset);
}

// B = d: one block per coordinate.
inline std::shared_ptr<const BlockPartition> partition_singleton(std::size_t dim) {
    std::vector<Block> blocks;
    blocks.reserve(dim);
    for (std::size_t j = 0; j < dim; ++j) blocks.push_back({"p" + std::to_string(j), j, j + 1});
    return std::make_shared<BlockPartition>(std::move(blocks), dim);
}

// B = 1: single global block.
inline std::shared_ptr<const BlockPartition> partition_global(std::size_t dim) {
    return std::make_shared<BlockPartition>(std::vector<Block>{{"all", 0, dim}}, dim);
}

// B near-equal contiguous chunks (used by the block-count sweep axis).
inline std::shared_ptr<const BlockPartition> partition_chunks(std::size_t dim,
                                                              std::size_t count) {
    if (count == 0 || count > dim)
        throw ConfigError("chunk partition: count must be in [1, dim]");
    std::vector<Block> blocks;
    blocks.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::size_t lo = i * dim / count;
        std::size_t hi = (i + 1) * dim / count;
        blocks.push_back({"chunk" + std::to_string(i), lo, hi});
    }
    return std::make_shared<BlockPartition>(std::move(blocks), dim);
}

// Partition selection as expressed in run configurations.
struct PartitionSpec {
    enum class Rule { transformer, per_tensor, singleton, global, chunks, explicit_list };
    Rule rule = Rule::per_tensor;
    bool value_single_block = false;
    std::size_t chunk_count = 1;       // rule == chunks
    std::vector<Block> blocks;         // rule == explicit_list
};

inline std::shared_ptr<const BlockPartition> build_partition(
    const PartitionSpec& spec, const std::vector<TensorMeta>& metas, std::size_t dim) {
    switch (spec.rule) {
        case PartitionSpec::Rule::transformer:
            return partition_transformer(metas, spec.value_single_block);
        case PartitionSpec::Rule::per_tensor:
            return partition_default(metas);
        case PartitionSpec::Rule::singleton:
            return partition_singleton(dim);
        case PartitionSpec::Rule::global:
            return partition_global(dim);
        case PartitionSpec::Rule::chunks:
            return partition_chunks(dim, spec.chunk_count);
        case PartitionSpec::Rule::explicit_list:
            return std::make_shared<BlockPartition>(spec.blocks, dim);
    }
    throw ConfigError("unknown partition rule");
}

}  // namespace fedopt
