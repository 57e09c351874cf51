// SPDX-License-Identifier: Apache-2.0
//
// JSON experiment configuration: parsing with field-level diagnostics,
// materialization of every default into a resolved document (so replays are
// never ambiguous), and a stable hash of the resolved form.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedopt/errors.hpp"
#include "fedopt/federation.hpp"
#include "fedopt/tasks/attention.hpp"
#include "fedopt/tasks/logistic.hpp"
#include "fedopt/tasks/mlp.hpp"
#include "fedopt/tasks/quadratic.hpp"
#include "fedopt/tasks/task.hpp"

namespace fedopt {

using json = nlohmann::json;

namespace cfgdetail {

inline void check_known_keys(const json& obj, const std::string& ctx,
                             std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* key : allowed)
            if (it.key() == key) ok = true;
        if (!ok) throw ConfigError("unknown field '" + it.key() + "' in " + ctx);
    }
}

inline const json& require(const json& obj, const std::string& ctx, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError("missing required field '" + std::string(key) + "' in " + ctx);
    return *it;
}

template <typename T>
T get_as(const json& value, const std::string& ctx, const char* key) {
    try {
        return value.get<T>();
    } catch (const json::exception&) {
        throw ConfigError("field '" + std::string(key) + "' in " + ctx + " has the wrong type");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& ctx, const char* key, T def) {
    auto it = obj.find(key);
    if (it == obj.end()) return def;
    return get_as<T>(*it, ctx, key);
}

}  // namespace cfgdetail

inline Algorithm parse_algorithm(const std::string& name) {
    if (name == "local_adamw") return Algorithm::local_adamw;
    if (name == "fedadamw") return Algorithm::fedadamw;
    if (name == "fedadamw_simplified") return Algorithm::fedadamw_simplified;
    if (name == "fedavg") return Algorithm::fedavg;
    if (name == "scaffold") return Algorithm::scaffold;
    if (name == "fedcm") return Algorithm::fedcm;
    throw ConfigError("unknown algorithm '" + name +
                      "' (expected local_adamw, fedadamw, fedadamw_simplified, fedavg, "
                      "scaffold, or fedcm)");
}

struct ExperimentConfig {
    RunConfig run;
    std::string task_kind = "quadratic";
    QuadraticTaskConfig quadratic;
    LogisticTaskConfig logistic;
    MlpTaskConfig mlp;
    AttentionTaskConfig attention;
    std::string output_dir = "out";
    // Sweep axes in a fixed enumeration order; empty = plain run.
    std::vector<std::pair<std::string, std::vector<json>>> sweep_axes;
    int repetitions = 1;
};

inline SplitKind parse_split(const std::string& s, const std::string& ctx) {
    if (s == "dirichlet") return SplitKind::dirichlet;
    if (s == "equal") return SplitKind::equal;
    throw ConfigError("field 'split' in " + ctx + " must be 'dirichlet' or 'equal'");
}

inline ExperimentConfig parse_experiment(const json& root) {
    using namespace cfgdetail;
    if (!root.is_object()) throw ConfigError("config root must be a JSON object");
    check_known_keys(root, "config",
                     {"algorithm", "rounds", "clients", "clients_per_round", "local_steps",
                      "seed", "jobs", "warm_start_v", "warm_start_m", "compensated_sums",
                      "decay_exclude", "optim", "lr_schedule", "partition", "task",
                      "output_dir", "sweep", "repetitions"});

    ExperimentConfig cfg;
    RunConfig& rc = cfg.run;
    rc.algorithm =
        parse_algorithm(get_as<std::string>(require(root, "config", "algorithm"), "config",
                                            "algorithm"));
    rc.rounds = get_as<int>(require(root, "config", "rounds"), "config", "rounds");
    rc.num_clients = get_as<int>(require(root, "config", "clients"), "config", "clients");
    rc.clients_per_round = get_or<int>(root, "config", "clients_per_round", rc.num_clients);
    rc.local_steps = get_as<int>(require(root, "config", "local_steps"), "config", "local_steps");
    rc.seeds.master = get_or<std::uint64_t>(root, "config", "seed", 0);
    rc.jobs = get_or<int>(root, "config", "jobs", 1);
    rc.warm_start_v = get_or<bool>(root, "config", "warm_start_v", true);
    rc.warm_start_m = get_or<bool>(root, "config", "warm_start_m", false);
    rc.compensated_sums = get_or<bool>(root, "config", "compensated_sums", false);
    rc.decay_exclude =
        get_or<std::vector<std::string>>(root, "config", "decay_exclude", {});

    if (root.contains("optim")) {
        const json& o = root["optim"];
        check_known_keys(o, "optim",
                         {"eta", "lambda", "beta1", "beta2", "eps", "alpha", "gamma", "clip",
                          "paper_literal_decay_sign"});
        rc.optim.eta = get_or<double>(o, "optim", "eta", rc.optim.eta);
        rc.optim.lambda = get_or<double>(o, "optim", "lambda", rc.optim.lambda);
        rc.optim.beta1 = get_or<double>(o, "optim", "beta1", rc.optim.beta1);
        rc.optim.beta2 = get_or<double>(o, "optim", "beta2", rc.optim.beta2);
        rc.optim.eps = get_or<double>(o, "optim", "eps", rc.optim.eps);
        rc.optim.alpha = get_or<double>(o, "optim", "alpha", rc.optim.alpha);
        rc.optim.gamma = get_or<double>(o, "optim", "gamma", rc.optim.gamma);
        rc.optim.clip = get_or<double>(o, "optim", "clip", rc.optim.clip);
        rc.optim.paper_literal_decay_sign =
            get_or<bool>(o, "optim", "paper_literal_decay_sign", false);
    }

    if (root.contains("lr_schedule")) {
        const json& s = root["lr_schedule"];
        check_known_keys(s, "lr_schedule", {"kind", "eta_min"});
        const std::string kind = get_or<std::string>(s, "lr_schedule", "kind", "constant");
        if (kind == "constant") rc.lr_schedule.kind = LrScheduleKind::constant;
        else if (kind == "cosine") rc.lr_schedule.kind = LrScheduleKind::cosine;
        else throw ConfigError("field 'kind' in lr_schedule must be 'constant' or 'cosine'");
        rc.lr_schedule.eta_min = get_or<double>(s, "lr_schedule", "eta_min", 0.0);
    }

    if (root.contains("partition")) {
        const json& p = root["partition"];
        check_known_keys(p, "partition", {"rule", "value_single_block", "chunk_count", "blocks"});
        const std::string rule = get_or<std::string>(p, "partition", "rule", "per_tensor");
        if (rule == "transformer") rc.partition.rule = PartitionSpec::Rule::transformer;
        else if (rule == "per_tensor") rc.partition.rule = PartitionSpec::Rule::per_tensor;
        else if (rule == "singleton") rc.partition.rule = PartitionSpec::Rule::singleton;
        else if (rule == "global") rc.partition.rule = PartitionSpec::Rule::global;
        else if (rule == "chunks") rc.partition.rule = PartitionSpec::Rule::chunks;
        else if (rule == "explicit") rc.partition.rule = PartitionSpec::Rule::explicit_list;
        else
            throw ConfigError("field 'rule' in partition must be one of transformer, "
                              "per_tensor, singleton, global, chunks, explicit");
        rc.partition.value_single_block = get_or<bool>(p, "partition", "value_single_block", false);
        rc.partition.chunk_count =
            static_cast<std::size_t>(get_or<std::int64_t>(p, "partition", "chunk_count", 1));
        if (p.contains("blocks")) {
            for (const json& b : p["blocks"]) {
                check_known_keys(b, "partition.blocks[]", {"name", "start", "end"});
                Block blk;
                blk.name = get_as<std::string>(require(b, "partition.blocks[]", "name"),
                                               "partition.blocks[]", "name");
                blk.begin = get_as<std::size_t>(require(b, "partition.blocks[]", "start"),
                                                "partition.blocks[]", "start");
                blk.end = get_as<std::size_t>(require(b, "partition.blocks[]", "end"),
                                              "partition.blocks[]", "end");
                rc.partition.blocks.push_back(blk);
            }
        }
        if (rc.partition.rule == PartitionSpec::Rule::explicit_list && rc.partition.blocks.empty())
            throw ConfigError("partition rule 'explicit' requires a non-empty 'blocks' list");
    }

    const json& t = require(root, "config", "task");
    cfg.task_kind = get_as<std::string>(require(t, "task", "kind"), "task", "kind");
    if (cfg.task_kind == "quadratic") {
        check_known_keys(t, "task",
                         {"kind", "dim", "sigma_l", "sigma_g", "spectrum_min", "spectrum_max",
                          "jitter"});
        auto& q = cfg.quadratic;
        q.dim = static_cast<std::size_t>(get_or<std::int64_t>(t, "task", "dim", 20));
        q.num_clients = rc.num_clients;
        q.sigma_l = get_or<double>(t, "task", "sigma_l", 0.0);
        q.sigma_g = get_or<double>(t, "task", "sigma_g", 0.0);
        q.spectrum_min = get_or<double>(t, "task", "spectrum_min", q.spectrum_min);
        q.spectrum_max = get_or<double>(t, "task", "spectrum_max", q.spectrum_max);
        q.jitter = get_or<double>(t, "task", "jitter", q.jitter);
    } else if (cfg.task_kind == "logistic") {
        check_known_keys(t, "task",
                         {"kind", "samples", "features", "classes", "batch", "blob_sep", "split",
                          "dirichlet_conc", "csv_path"});
        auto& l = cfg.logistic;
        l.samples = get_or<int>(t, "task", "samples", l.samples);
        l.features = get_or<int>(t, "task", "features", l.features);
        l.classes = get_or<int>(t, "task", "classes", l.classes);
        l.batch = get_or<int>(t, "task", "batch", l.batch);
        l.blob_sep = get_or<double>(t, "task", "blob_sep", l.blob_sep);
        l.split = parse_split(get_or<std::string>(t, "task", "split", "dirichlet"), "task");
        l.dirichlet_conc = get_or<double>(t, "task", "dirichlet_conc", l.dirichlet_conc);
        l.csv_path = get_or<std::string>(t, "task", "csv_path", "");
        l.num_clients = rc.num_clients;
    } else if (cfg.task_kind == "mlp") {
        check_known_keys(t, "task",
                         {"kind", "samples", "features", "hidden", "classes", "batch", "blob_sep",
                          "split", "dirichlet_conc"});
        auto& m = cfg.mlp;
        m.samples = get_or<int>(t, "task", "samples", m.samples);
        m.features = get_or<int>(t, "task", "features", m.features);
        m.hidden = get_or<int>(t, "task", "hidden", m.hidden);
        m.classes = get_or<int>(t, "task", "classes", m.classes);
        m.batch = get_or<int>(t, "task", "batch", m.batch);
        m.blob_sep = get_or<double>(t, "task", "blob_sep", m.blob_sep);
        m.split = parse_split(get_or<std::string>(t, "task", "split", "dirichlet"), "task");
        m.dirichlet_conc = get_or<double>(t, "task", "dirichlet_conc", m.dirichlet_conc);
        m.num_clients = rc.num_clients;
    } else if (cfg.task_kind == "attention") {
        check_known_keys(t, "task",
                         {"kind", "vocab", "d_model", "heads", "mlp_hidden", "seq_len", "samples",
                          "batch", "token_bias", "split", "dirichlet_conc"});
        auto& a = cfg.attention;
        a.vocab = get_or<int>(t, "task", "vocab", a.vocab);
        a.d_model = get_or<int>(t, "task", "d_model", a.d_model);
        a.heads = get_or<int>(t, "task", "heads", a.heads);
        a.mlp_hidden = get_or<int>(t, "task", "mlp_hidden", a.mlp_hidden);
        a.seq_len = get_or<int>(t, "task", "seq_len", a.seq_len);
        a.samples = get_or<int>(t, "task", "samples", a.samples);
        a.batch = get_or<int>(t, "task", "batch", a.batch);
        a.token_bias = get_or<double>(t, "task", "token_bias", a.token_bias);
        a.split = parse_split(get_or<std::string>(t, "task", "split", "dirichlet"), "task");
        a.dirichlet_conc = get_or<double>(t, "task", "dirichlet_conc", a.dirichlet_conc);
        a.num_clients = rc.num_clients;
    } else {
        throw ConfigError("unknown task kind '" + cfg.task_kind +
                          "' (expected quadratic, logistic, mlp, or attention)");
    }

    cfg.output_dir = get_or<std::string>(root, "config", "output_dir", "out");
    cfg.repetitions = get_or<int>(root, "config", "repetitions", 1);
    if (cfg.repetitions < 1) throw ConfigError("repetitions must be >= 1");

    if (root.contains("sweep")) {
        const json& s = root["sweep"];
        check_known_keys(s, "sweep",
                         {"alpha", "lambda", "clients_per_round", "local_steps", "blocks",
                          "algorithm"});
        // Fixed enumeration order for deterministic cell layout.
        for (const char* axis :
             {"alpha", "lambda", "clients_per_round", "local_steps", "blocks", "algorithm"}) {
            if (!s.contains(axis)) continue;
            const json& values = s[axis];
            if (!values.is_array() || values.empty())
                throw ConfigError("sweep axis '" + std::string(axis) +
                                  "' must be a non-empty array");
            cfg.sweep_axes.emplace_back(axis,
                                        std::vector<json>(values.begin(), values.end()));
        }
    }
    return cfg;
}

// Applies one sweep-cell assignment to a copy of the base config.
inline void apply_axis_value(ExperimentConfig& cfg, const std::string& axis, const json& value) {
    using namespace cfgdetail;
    if (axis == "alpha") cfg.run.optim.alpha = get_as<double>(value, "sweep", "alpha");
    else if (axis == "lambda") cfg.run.optim.lambda = get_as<double>(value, "sweep", "lambda");
    else if (axis == "clients_per_round")
        cfg.run.clients_per_round = get_as<int>(value, "sweep", "clients_per_round");
    else if (axis == "local_steps")
        cfg.run.local_steps = get_as<int>(value, "sweep", "local_steps");
    else if (axis == "blocks") {
        cfg.run.partition.rule = PartitionSpec::Rule::chunks;
        cfg.run.partition.chunk_count =
            static_cast<std::size_t>(get_as<std::int64_t>(value, "sweep", "blocks"));
    } else if (axis == "algorithm") {
        cfg.run.algorithm = parse_algorithm(get_as<std::string>(value, "sweep", "algorithm"));
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "'");
    }
}

inline std::unique_ptr<Task> make_task(const ExperimentConfig& cfg) {
    if (cfg.task_kind == "quadratic")
        return std::make_unique<QuadraticTask>(cfg.quadratic, cfg.run.seeds);
    if (cfg.task_kind == "logistic")
        return std::make_unique<LogisticTask>(cfg.logistic, cfg.run.seeds);
    if (cfg.task_kind == "mlp") return std::make_unique<MlpTask>(cfg.mlp, cfg.run.seeds);
    if (cfg.task_kind == "attention")
        return std::make_unique<TinyAttentionTask>(cfg.attention, cfg.run.seeds);
    throw ConfigError("unknown task kind '" + cfg.task_kind + "'");
}

inline std::string to_string(PartitionSpec::Rule rule) {
    switch (rule) {
        case PartitionSpec::Rule::transformer: return "transformer";
        case PartitionSpec::Rule::per_tensor: return "per_tensor";
        case PartitionSpec::Rule::singleton: return "singleton";
        case PartitionSpec::Rule::global: return "global";
        case PartitionSpec::Rule::chunks: return "chunks";
        case PartitionSpec::Rule::explicit_list: return "explicit";
    }
    return "?";
}

inline std::string to_string(SplitKind s) {
    return s == SplitKind::dirichlet ? "dirichlet" : "equal";
}

// Every default materialized; replaying this document reproduces the run.
inline json resolved_config(const ExperimentConfig& cfg) {
    const RunConfig& rc = cfg.run;
    json root;
    root["algorithm"] = to_string(rc.algorithm);
    root["rounds"] = rc.rounds;
    root["clients"] = rc.num_clients;
    root["clients_per_round"] = rc.clients_per_round;
    root["local_steps"] = rc.local_steps;
    root["seed"] = rc.seeds.master;
    root["jobs"] = rc.jobs;
    root["warm_start_v"] = rc.warm_start_v;
    root["warm_start_m"] = rc.warm_start_m;
    root["compensated_sums"] = rc.compensated_sums;
    root["decay_exclude"] = rc.decay_exclude;
    root["optim"] = {{"eta", rc.optim.eta},
                     {"lambda", rc.optim.lambda},
                     {"beta1", rc.optim.beta1},
                     {"beta2", rc.optim.beta2},
                     {"eps", rc.optim.eps},
                     {"alpha", rc.optim.alpha},
                     {"gamma", rc.optim.gamma},
                     {"clip", rc.optim.clip},
                     {"paper_literal_decay_sign", rc.optim.paper_literal_decay_sign}};
    root["lr_schedule"] = {
        {"kind", rc.lr_schedule.kind == LrScheduleKind::cosine ? "cosine" : "constant"},
        {"eta_min", rc.lr_schedule.eta_min}};
    json part;
    part["rule"] = to_string(rc.partition.rule);
    part["value_single_block"] = rc.partition.value_single_block;
    part["chunk_count"] = rc.partition.chunk_count;
    json blocks = json::array();
    for (const Block& b : rc.partition.blocks)
        blocks.push_back({{"name", b.name}, {"start", b.begin}, {"end", b.end}});
    part["blocks"] = blocks;
    root["partition"] = part;

    json task;
    task["kind"] = cfg.task_kind;
    if (cfg.task_kind == "quadratic") {
        const auto& q = cfg.quadratic;
        task["dim"] = q.dim;
        task["sigma_l"] = q.sigma_l;
        task["sigma_g"] = q.sigma_g;
        task["spectrum_min"] = q.spectrum_min;
        task["spectrum_max"] = q.spectrum_max;
        task["jitter"] = q.jitter;
    } else if (cfg.task_kind == "logistic") {
        const auto& l = cfg.logistic;
        task["samples"] = l.samples;
        task["features"] = l.features;
        task["classes"] = l.classes;
        task["batch"] = l.batch;
        task["blob_sep"] = l.blob_sep;
        task["split"] = to_string(l.split);
        task["dirichlet_conc"] = l.dirichlet_conc;
        task["csv_path"] = l.csv_path;
    } else if (cfg.task_kind == "mlp") {
        const auto& m = cfg.mlp;
        task["samples"] = m.samples;
        task["features"] = m.features;
        task["hidden"] = m.hidden;
        task["classes"] = m.classes;
        task["batch"] = m.batch;
        task["blob_sep"] = m.blob_sep;
        task["split"] = to_string(m.split);
        task["dirichlet_conc"] = m.dirichlet_conc;
    } else if (cfg.task_kind == "attention") {
        const auto& a = cfg.attention;
        task["vocab"] = a.vocab;
        task["d_model"] = a.d_model;
        task["heads"] = a.heads;
        task["mlp_hidden"] = a.mlp_hidden;
        task["seq_len"] = a.seq_len;
        task["samples"] = a.samples;
        task["batch"] = a.batch;
        task["token_bias"] = a.token_bias;
        task["split"] = to_string(a.split);
        task["dirichlet_conc"] = a.dirichlet_conc;
    }
    root["task"] = task;
    root["output_dir"] = cfg.output_dir;
    root["repetitions"] = cfg.repetitions;
    json sweep = json::object();
    for (const auto& [axis, values] : cfg.sweep_axes) sweep[axis] = values;
    root["sweep"] = sweep;
    return root;
}

// FNV-1a over the canonical (sorted-key) serialization.
inline std::uint64_t config_hash(const json& resolved) {
    const std::string text = resolved.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string config_hash_hex(const json& resolved) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = config_hash(resolved);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xF];
        h >>= 4;
    }
    return out;
}

}  // namespace fedopt
