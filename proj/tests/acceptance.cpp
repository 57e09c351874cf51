// SPDX-License-Identifier: Apache-2.0
//
// Acceptance suite: runs every acceptance criterion end to end and prints
// one PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "fedopt/analysis.hpp"
#include "fedopt/config.hpp"
#include "fedopt/csv.hpp"
#include "fedopt/federation.hpp"
#include "fedopt/tasks/attention.hpp"
#include "fedopt/tasks/finite_diff.hpp"
#include "fedopt/tasks/mlp.hpp"
#include "fedopt/tasks/quadratic.hpp"

using namespace fedopt;
namespace fs = std::filesystem;

namespace {

int g_jobs = 4;

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The shared heterogeneous-quadratic benchmark: d=50, N=100, S=10, K=20,
// R=200, sigma_g=5, sigma_l=1.
QuadraticTask benchmark_task(std::uint64_t seed) {
    QuadraticTaskConfig qc;
    qc.dim = 50;
    qc.num_clients = 100;
    qc.sigma_l = 1.0;
    qc.sigma_g = 5.0;
    return QuadraticTask(qc, SeedSpec{seed});
}

RunConfig benchmark_config(double eta, double alpha, std::uint64_t seed) {
    RunConfig cfg;
    cfg.algorithm = Algorithm::fedadamw;
    cfg.num_clients = 100;
    cfg.clients_per_round = 10;
    cfg.local_steps = 20;
    cfg.rounds = 200;
    cfg.optim.eta = eta;
    cfg.optim.lambda = 0.001;
    cfg.optim.alpha = alpha;
    cfg.seeds.master = seed;
    cfg.jobs = g_jobs;
    return cfg;
}

// ---------------------------------------------------------------------------

CriterionResult criterion_exact_reduction() {
    MlpTaskConfig mc;
    mc.samples = 300;
    mc.features = 8;
    mc.hidden = 16;
    mc.classes = 4;
    mc.num_clients = 10;
    mc.batch = 10;
    MlpTask task(mc, SeedSpec{101});

    RunConfig fed;
    fed.algorithm = Algorithm::fedadamw;
    fed.num_clients = 10;
    fed.clients_per_round = 5;
    fed.local_steps = 10;
    fed.rounds = 20;
    fed.optim.eta = 0.01;
    fed.optim.lambda = 0.01;
    fed.optim.alpha = 0.0;
    fed.warm_start_v = false;
    fed.seeds.master = 31;
    fed.jobs = g_jobs;
    RunConfig local = fed;
    local.algorithm = Algorithm::local_adamw;

    std::vector<ParamVector> fed_x, local_x;
    run(fed, task, [&](const ServerState&, const ServerState& after, double,
                       const std::vector<ClientUpdate>&) { fed_x.push_back(after.x); });
    run(local, task, [&](const ServerState&, const ServerState& after, double,
                         const std::vector<ClientUpdate>&) { local_x.push_back(after.x); });

    double worst = 0.0;
    for (std::size_t r = 0; r < fed_x.size(); ++r)
        worst = std::max(worst, max_abs_diff(fed_x[r], local_x[r]));
    CriterionResult res;
    res.pass = fed_x.size() == 20 && worst <= 1e-12;
    res.detail = "max per-round |x_fed - x_local| = " + format_double(worst);
    return res;
}

CriterionResult criterion_server_identity() {
    QuadraticTask task = benchmark_task(1009);
    RunConfig cfg = benchmark_config(0.01, 0.5, 17);
    cfg.lr_schedule.kind = LrScheduleKind::cosine;
    cfg.lr_schedule.eta_min = 0.001;

    double worst_rel = 0.0;
    int rounds_seen = 0;
    run(cfg, task, [&](const ServerState& before, const ServerState& after, double eta,
                       const std::vector<ClientUpdate>&) {
        double err_sq = 0.0;
        for (std::size_t j = 0; j < before.x.size(); ++j) {
            const double e =
                (after.x[j] - before.x[j]) + cfg.local_steps * eta * after.delta_g[j];
            err_sq += e * e;
        }
        const double scale = std::max(1e-300, norm(before.x));
        worst_rel = std::max(worst_rel, std::sqrt(err_sq) / scale);
        ++rounds_seen;
    });
    CriterionResult res;
    res.pass = rounds_seen == 200 && worst_rel <= 1e-10;
    res.detail = "max ||dx + K*eta*dg|| / ||x|| over 200 rounds = " + format_double(worst_rel);
    return res;
}

CriterionResult criterion_bias_correction() {
    OptimConfig oc;
    oc.eta = 0.01;
    oc.beta1 = 0.9;
    oc.beta2 = 0.999;
    oc.eps = 1e-8;

    bool ok = true;
    std::string detail;
    const double g = 0.8125;
    for (int target : {1, 5, 50}) {
        MomentState s = make_moment_state(ParamVector(1, 0.0), ParamVector(1, 0.0), 0, target);
        for (int k = 0; k < target; ++k) s = moment_update(std::move(s), {g}, oc);
        auto [m_hat, v_hat] = bias_correct(s, oc);
        const double rel = std::abs(m_hat[0] - g) / g;
        if (rel > 1e-12) {
            ok = false;
            detail += "m_hat mismatch at k=" + std::to_string(target) + "; ";
        }
    }

    // Preconditioner bound under clipping, across warm-started rounds.
    oc.clip = 2.0;
    RngStream rng = derive_rng(SeedSpec{47}, 0, 0, StreamPurpose::probe);
    double theta_min = 1e300, theta_max = 0.0;
    MomentState s = make_moment_state(ParamVector(6, 0.0), ParamVector(6, 0.0), 0, 30);
    std::vector<double> carried;
    for (int round = 0; round < 3; ++round) {
        if (round > 0) {
            double mean = 0.0;
            for (double x : carried) mean += x;
            mean /= static_cast<double>(carried.size());
            s = make_moment_state(ParamVector(6, 0.0), ParamVector(6, mean), round, 30);
        }
        for (int k = 0; k < 30; ++k) {
            ParamVector grad(6);
            for (double& x : grad) x = 8.0 * rng.normal();
            grad = clip_gradient(std::move(grad), oc.clip);
            s = moment_update(std::move(s), grad, oc);
            auto [m_hat, v_hat] = bias_correct(s, oc);
            for (double th : preconditioner(v_hat, oc)) {
                theta_min = std::min(theta_min, th);
                theta_max = std::max(theta_max, th);
            }
        }
        carried = s.v;
    }
    // Lower end carries an eps-sized tolerance: theta >= 1/(G_g + eps).
    const bool bound_ok = theta_min >= 1.0 / oc.clip - oc.eps && theta_max <= 1.0 / oc.eps;
    if (!bound_ok) ok = false;
    CriterionResult res;
    res.pass = ok;
    res.detail = detail + "theta range [" + format_double(theta_min) + ", " +
                 format_double(theta_max) + "] within [1/G_g - eps, 1/eps]";
    return res;
}

CriterionResult criterion_gradient_oracles() {
    RngStream rng = derive_rng(SeedSpec{53}, 0, 0, StreamPurpose::probe);
    double worst_quad = 0.0, worst_mlp = 0.0, worst_attn = 0.0;

    QuadraticTaskConfig qc;
    qc.dim = 30;
    qc.num_clients = 5;
    qc.sigma_g = 2.0;
    QuadraticTask quad(qc, SeedSpec{54});
    for (int p = 0; p < 5; ++p) {
        ParamVector x(qc.dim);
        for (double& xi : x) xi = rng.normal();
        worst_quad = std::max(worst_quad, finite_diff_check(quad, x, p % 5, rng));
    }

    MlpTaskConfig mc;
    mc.samples = 200;
    mc.features = 8;
    mc.hidden = 12;
    mc.classes = 4;
    mc.num_clients = 5;
    mc.batch = 0;
    MlpTask mlp(mc, SeedSpec{55});
    for (int p = 0; p < 5; ++p) {
        ParamVector x = mlp.initial_params();
        for (double& xi : x) xi += 0.3 * rng.normal();
        worst_mlp = std::max(worst_mlp, finite_diff_check(mlp, x, p % 5, rng));
    }

    AttentionTaskConfig ac;
    ac.samples = 64;
    ac.num_clients = 4;
    ac.batch = 0;
    TinyAttentionTask attn(ac, SeedSpec{56});
    for (int p = 0; p < 5; ++p) {
        ParamVector x = attn.initial_params();
        for (double& xi : x) xi += 0.1 * rng.normal();
        worst_attn = std::max(worst_attn, finite_diff_check(attn, x, p % 4, rng));
    }

    CriterionResult res;
    res.pass = worst_quad <= 1e-7 && worst_mlp <= 1e-4 && worst_attn <= 1e-4;
    res.detail = "max rel err: quadratic " + format_double(worst_quad) + " (<=1e-7), mlp " +
                 format_double(worst_mlp) + " (<=1e-4), attention " + format_double(worst_attn) +
                 " (<=1e-4)";
    return res;
}

CriterionResult criterion_drift_correction() {
    const std::vector<double> alphas{0.0, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> medians;
    for (double alpha : alphas) {
        std::vector<double> gaps;
        for (int seed = 0; seed < 5; ++seed) {
            QuadraticTask task = benchmark_task(1000 + static_cast<std::uint64_t>(seed));
            const double fstar = task.global_optimum().second;
            RunConfig cfg = benchmark_config(0.001, alpha, static_cast<std::uint64_t>(seed));
            gaps.push_back(run(cfg, task).back().loss - fstar);
        }
        medians.push_back(median(gaps));
    }
    const auto argmin = static_cast<std::size_t>(
        std::min_element(medians.begin(), medians.end()) - medians.begin());
    CriterionResult res;
    res.pass = medians[2] < medians[0] && argmin > 0 && argmin + 1 < medians.size();
    std::string vals;
    for (double m : medians) vals += format_double(m) + " ";
    res.detail = "median optimality gaps over alpha {0,0.25,0.5,0.75,1}: " + vals +
                 "(argmin at alpha=" + format_double(alphas[argmin]) + ")";
    return res;
}

CriterionResult criterion_variance_reduction() {
    auto tail_mean = [](const std::vector<RoundMetrics>& m) {
        double acc = 0.0;
        int n = 0;
        for (const auto& r : m) {
            if (r.round >= 50) {
                acc += r.v_variance;
                ++n;
            }
        }
        return acc / n;
    };
    std::vector<double> warm, cold;
    for (int seed = 0; seed < 5; ++seed) {
        QuadraticTask task = benchmark_task(1000 + static_cast<std::uint64_t>(seed));
        RunConfig cfg = benchmark_config(0.05, 0.5, static_cast<std::uint64_t>(seed));
        warm.push_back(tail_mean(run(cfg, task)));
        cfg.warm_start_v = false;
        cold.push_back(tail_mean(run(cfg, task)));
    }
    CriterionResult res;
    res.pass = median(warm) < median(cold);
    res.detail = "median v-variance (rounds 50-200): warm " + format_double(median(warm)) +
                 " vs cold " + format_double(median(cold));
    return res;
}

CriterionResult criterion_linear_speedup() {
    std::vector<double> plateaus;
    for (int s : {5, 10, 20}) {
        std::vector<double> per_seed;
        for (int seed = 0; seed < 3; ++seed) {
            QuadraticTaskConfig qc;
            qc.dim = 20;
            qc.num_clients = 20;
            qc.sigma_l = 1.0;
            qc.sigma_g = 0.0;
            QuadraticTask task(qc, SeedSpec{2000 + static_cast<std::uint64_t>(seed)});
            RunConfig cfg;
            cfg.algorithm = Algorithm::fedadamw;
            cfg.num_clients = 20;
            cfg.clients_per_round = s;
            cfg.local_steps = 10;
            cfg.rounds = 300;
            cfg.optim.eta = 0.05;
            cfg.optim.lambda = 0.0;
            cfg.optim.alpha = 0.5;
            cfg.seeds.master = static_cast<std::uint64_t>(seed);
            cfg.jobs = g_jobs;
            auto m = run(cfg, task);
            double acc = 0.0;
            int n = 0;
            for (const auto& r : m) {
                if (r.round >= 250) {
                    acc += r.grad_norm_sq;
                    ++n;
                }
            }
            per_seed.push_back(acc / n);
        }
        plateaus.push_back(median(per_seed));
    }
    const double r1 = plateaus[0] / plateaus[1];
    const double r2 = plateaus[1] / plateaus[2];
    CriterionResult res;
    res.pass = r1 >= 1.4 && r1 <= 2.8 && r2 >= 1.4 && r2 <= 2.8;
    res.detail = "plateau ||grad f||^2 for S={5,10,20}: " + format_double(plateaus[0]) + ", " +
                 format_double(plateaus[1]) + ", " + format_double(plateaus[2]) +
                 "; halving ratios " + format_double(r1) + ", " + format_double(r2) +
                 " (need [1.4, 2.8])";
    return res;
}

CriterionResult criterion_pac_calculator() {
    // Independent straight-loop oracle, evaluated before the library path.
    auto oracle = [](const PacInputs& in) {
        double term1 = 0.0, term2 = 0.0;
        for (double s : in.sigmas)
            term1 += std::log(2.0 * in.rho * in.b * (std::sqrt(s) + in.lambda) / in.eta);
        for (double s : in.sigmas) term2 += 1.0 / (std::sqrt(s) + in.lambda);
        term2 *= in.eta / (2.0 * in.rho * in.b);
        const double d = static_cast<double>(in.sigmas.size());
        const double c0 = in.xstar_norm * in.xstar_norm / (2.0 * in.rho) - d / 2.0 +
                          2.0 * std::log(2.0 * in.n / in.tau);
        return std::sqrt(8.0 / in.n) * std::sqrt(term1 + term2 + c0);
    };

    PacInputs worked;
    worked.sigmas = {1.0};
    worked.lambda = 0.0;
    worked.eta = 2.0;
    worked.rho = 1.0;
    worked.b = 1.0;
    worked.n = 100.0;
    worked.tau = 0.5;
    worked.xstar_norm = 0.0;
    const double oracle_value = oracle(worked);
    const double lib_value = pac_bayes_bound(worked).bound;

    bool ok = std::abs(oracle_value - 0.9994) <= 1e-3;
    ok = ok && std::abs(lib_value - 0.9994) <= 1e-3;
    ok = ok && std::abs(lib_value - oracle_value) <= 1e-12 * oracle_value;

    RngStream rng = derive_rng(SeedSpec{59}, 0, 0, StreamPurpose::probe);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        PacInputs in;
        const int d = 1 + static_cast<int>(rng.uniform_int(0, 31));
        for (int i = 0; i < d; ++i) in.sigmas.push_back(std::abs(rng.normal()) * 5.0);
        in.lambda = rng.uniform(0.0, 1.0);
        in.eta = rng.uniform(1e-4, 2.0);
        in.rho = rng.uniform(0.1, 5.0);
        in.b = 1.0 + rng.uniform(0.0, 63.0);
        in.n = 10.0 + rng.uniform(0.0, 1e5);
        in.tau = rng.uniform(0.01, 0.99);
        in.xstar_norm = std::abs(rng.normal());
        const double got = pac_bayes_bound(in).bound;
        const double want = oracle(in);
        worst = std::max(worst, std::abs(got - want) / want);
    }
    ok = ok && worst <= 1e-12;

    CriterionResult res;
    res.pass = ok;
    res.detail = "worked example: oracle " + format_double(oracle_value) + ", library " +
                 format_double(lib_value) + "; worst rel dev over 100 random inputs " +
                 format_double(worst);
    return res;
}

CriterionResult criterion_ou_covariance() {
    // Scalar oracle for the closed form: eta/(2b) * 1/(sqrt(H) + lambda).
    const double h = 4.0, eta = 0.01, b = 10.0;
    const double closed_oracle = eta / (2.0 * b) * 1.0 / (std::sqrt(h) + 0.0);

    Eigen::MatrixXd hm(1, 1);
    hm(0, 0) = h;
    const double closed_lib = stationary_covariance(hm, eta, b, 0.0)(0, 0);

    RngStream rng0 = derive_rng(SeedSpec{67}, 0, -1, StreamPurpose::ou_sim);
    const double emp0 =
        empirical_stationary_covariance(hm, eta, b, 0.0, 1000000, 10000, rng0)(0, 0);
    RngStream rng1 = derive_rng(SeedSpec{67}, 0, -1, StreamPurpose::ou_sim);
    const double emp1 =
        empirical_stationary_covariance(hm, eta, b, 1.0, 1000000, 10000, rng1)(0, 0);

    CriterionResult res;
    const bool lib_matches = std::abs(closed_lib - closed_oracle) <= 1e-12 * closed_oracle;
    const bool within = std::abs(emp0 - closed_oracle) <= 0.2 * closed_oracle;
    res.pass = lib_matches && within && emp1 < emp0;
    res.detail = "closed form " + format_double(closed_oracle) + ", sample variance " +
                 format_double(emp0) + " (within 20%), with decay " + format_double(emp1) +
                 " (strictly smaller)";
    return res;
}

CriterionResult criterion_determinism_replay() {
    const fs::path root = fs::temp_directory_path() / "fedopt_acceptance" / "determinism";
    fs::remove_all(root);
    fs::create_directories(root);

    json cfg{{"algorithm", "fedadamw"},
             {"rounds", 30},
             {"clients", 12},
             {"clients_per_round", 6},
             {"local_steps", 8},
             {"seed", 2024},
             {"optim", {{"eta", 0.01}, {"lambda", 0.001}, {"alpha", 0.5}}},
             {"lr_schedule", {{"kind", "cosine"}, {"eta_min", 0.001}}},
             {"task",
              {{"kind", "quadratic"}, {"dim", 24}, {"sigma_l", 1.0}, {"sigma_g", 3.0}}}};

    cfg["output_dir"] = (root / "serial").string();
    std::ofstream(root / "serial.json") << cfg.dump();
    cfg["output_dir"] = (root / "parallel").string();
    std::ofstream(root / "parallel.json") << cfg.dump();

    const std::string bin = FEDOPT_LAB_BIN;
    const int rc1 =
        std::system((bin + " run " + (root / "serial.json").string() + " --jobs 1").c_str());
    const int rc2 =
        std::system((bin + " run " + (root / "parallel.json").string() + " --jobs 4").c_str());

    CriterionResult res;
    if (rc1 != 0 || rc2 != 0) {
        res.detail = "runner exited nonzero";
        return res;
    }
    const std::string serial = slurp(root / "serial" / "metrics.csv");
    const std::string parallel = slurp(root / "parallel" / "metrics.csv");
    res.pass = !serial.empty() && serial == parallel;
    res.detail = res.pass ? "serial and --jobs 4 metrics.csv byte-identical"
                          : "metrics.csv differ between serial and parallel runs";
    return res;
}

CriterionResult criterion_partition_correctness() {
    AttentionTaskConfig ac;
    ac.vocab = 8;
    ac.d_model = 16;
    ac.heads = 4;
    ac.mlp_hidden = 32;
    ac.seq_len = 8;
    ac.samples = 64;
    ac.num_clients = 4;
    TinyAttentionTask task(ac, SeedSpec{71});

    auto p = partition_transformer(task.tensor_metas());
    const std::map<std::string, int> expected{
        {"embed", 8},      {"attn.query", 4}, {"attn.key", 4}, {"attn.value", 16},
        {"attn.proj", 16}, {"mlp.fc1", 32},   {"mlp.fc2", 16}, {"head", 8}};
    std::map<std::string, int> counts;
    for (const Block& b : p->blocks()) {
        const auto dot = b.name.rfind('.');
        std::string tensor = b.name;
        if (dot != std::string::npos &&
            b.name.find_first_not_of("0123456789", dot + 1) == std::string::npos)
            tensor = b.name.substr(0, dot);
        counts[tensor] += 1;
    }

    bool covers_ok = true;
    const auto metas = task.tensor_metas();
    for (const auto& builder : {partition_default(metas), partition_singleton(task.dim()),
                                partition_global(task.dim()), partition_chunks(task.dim(), 13)}) {
        // Constructities already validate; re-derive the cover property here.
        std::vector<char> hit(task.dim(), 0);
        for (const Block& b : builder->blocks())
            for (std::size_t j = b.begin; j < b.end; ++j) hit[j] += 1;
        for (char h : hit) covers_ok = covers_ok && h == 1;
    }

    CriterionResult res;
    res.pass = counts == expected && p->num_blocks() == 104 && covers_ok;
    std::string got;
    for (const auto& [name, n] : counts) got += name + ":" + std::to_string(n) + " ";
    res.detail = "block counts " + got + "(total " + std::to_string(p->num_blocks()) +
                 ", expected 104); disjoint covers verified";
    return res;
}

CriterionResult criterion_communication_accounting() {
    MlpTaskConfig mc;
    mc.samples = 120;
    mc.features = 6;
    mc.hidden = 8;
    mc.classes = 3;
    mc.num_clients = 6;
    mc.batch = 8;
    MlpTask task(mc, SeedSpec{83});
    const std::uint64_t d = task.dim();

    RunConfig cfg;
    cfg.algorithm = Algorithm::fedadamw;
    cfg.num_clients = 6;
    cfg.clients_per_round = 3;
    cfg.local_steps = 4;
    cfg.rounds = 2;
    cfg.optim.eta = 0.01;
    cfg.seeds.master = 3;
    cfg.jobs = g_jobs;

    const auto fed = run(cfg, task);  // per-tensor: B = 4 blocks
    cfg.algorithm = Algorithm::local_adamw;
    const auto local = run(cfg, task);

    RunConfig aggvm = cfg;
    aggvm.algorithm = Algorithm::fedadamw;
    aggvm.partition.rule = PartitionSpec::Rule::singleton;
    aggvm.warm_start_m = true;
    const auto vm = run(aggvm, task);

    const bool exact = fed[0].bytes_up == local[0].bytes_up + 8 * 4;
    const bool ordered = vm[0].bytes_up > fed[0].bytes_up;
    const bool vm_value = vm[0].bytes_up == 8 * (d + d + d);
    CriterionResult res;
    res.pass = exact && ordered && vm_value;
    res.detail = "uplink/client/round: local " + std::to_string(local[0].bytes_up) +
                 ", mean-v " + std::to_string(fed[0].bytes_up) + " (= local + 8*B), full-vm " +
                 std::to_string(vm[0].bytes_up) + " (strictly larger)";
    return res;
}

}  // namespace

int main() {
    g_jobs = std::max(2u, std::min(8u, std::thread::hardware_concurrency()));

    struct Criterion {
        int number;
        const char* name;
        double time_limit_s;  // 0 = no stated limit
        std::function<CriterionResult()> fn;
    };
    // Criteria 5 and 6 share one five-minute budget; it is split below.
    const std::vector<Criterion> criteria{
        {1, "exact reduction to local AdamW", 10.0, criterion_exact_reduction},
        {2, "server aggregation identity", 30.0, criterion_server_identity},
        {3, "bias correction and preconditioner bound", 0.0, criterion_bias_correction},
        {4, "gradient oracles vs finite differences", 60.0, criterion_gradient_oracles},
        {5, "drift correction: interior alpha optimum", 240.0, criterion_drift_correction},
        {6, "warm start reduces cross-client v variance", 60.0, criterion_variance_reduction},
        {7, "linear speedup in participating clients", 300.0, criterion_linear_speedup},
        {8, "generalization-bound calculator", 0.0, criterion_pac_calculator},
        {9, "stationary covariance vs simulation", 60.0, criterion_ou_covariance},
        {10, "determinism and replay", 0.0, criterion_determinism_replay},
        {11, "partition rules", 0.0, criterion_partition_correctness},
        {12, "communication accounting", 0.0, criterion_communication_accounting},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult res;
        try {
            res = c.fn();
        } catch (const std::exception& e) {
            res.pass = false;
            res.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.time_limit_s == 0.0 || elapsed < c.time_limit_s;
        const bool pass = res.pass && in_time;
        if (!pass) ++failures;
        std::printf("[%s] criterion %2d: %s (%.1fs%s) - %s\n", pass ? "PASS" : "FAIL", c.number,
                    c.name, elapsed,
                    in_time ? "" : (", over the " + format_double(c.time_limit_s) + "s limit").c_str(),
                    res.detail.c_str());
        std::fflush(stdout);
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    else std::printf("all 12 criteria passed\n");
    return failures == 0 ? 0 : 1;
}
