// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fedopt/optim.hpp"
#include "fedopt/params.hpp"
#include "fedopt/rng.hpp"

using namespace fedopt;

namespace {

OptimConfig base_config() {
    OptimConfig cfg;
    cfg.eta = 0.1;
    cfg.lambda = 0.0;
    cfg.beta1 = 0.9;
    cfg.beta2 = 0.999;
    cfg.eps = 1e-8;
    cfg.alpha = 0.5;
    return cfg;
}

MomentState zero_state(std::size_t d, int round = 0, int local_steps = 10) {
    return make_moment_state(ParamVector(d, 0.0), ParamVector(d, 0.0), round, local_steps);
}

}  // namespace

TEST_CASE("moment_update: zero gradient keeps zero moments") {
    auto cfg = base_config();
    MomentState s = moment_update(zero_state(3), ParamVector(3, 0.0), cfg);
    CHECK(s.m == ParamVector(3, 0.0));
    CHECK(s.v == ParamVector(3, 0.0));
    CHECK(s.k == 1);
    CHECK(s.t == 1);
}

TEST_CASE("moment_update: scalar hand computation") {
    auto cfg = base_config();
    MomentState s = moment_update(zero_state(1), {0.5}, cfg);
    CHECK(s.m[0] == Catch::Approx(0.05).epsilon(1e-14));
    CHECK(s.v[0] == Catch::Approx(2.5e-4).epsilon(1e-14));
}

TEST_CASE("moment_update: constant gradient gives geometric series") {
    auto cfg = base_config();
    const double g = 0.7;
    MomentState s = zero_state(1);
    for (int k = 1; k <= 20; ++k) {
        s = moment_update(std::move(s), {g}, cfg);
        const double expected = (1.0 - std::pow(cfg.beta1, k)) * g;
        CHECK(s.m[0] == Catch::Approx(expected).epsilon(1e-13));
    }
}

TEST_CASE("moment_update rejects non-finite gradients") {
    auto cfg = base_config();
    CHECK_THROWS_AS(moment_update(zero_state(1), {std::nan("")}, cfg), NumericError);
}

TEST_CASE("bias_correct: constant gradient recovers g exactly") {
    auto cfg = base_config();
    const double g = -1.3;
    for (int target : {1, 5, 50}) {
        MomentState s = zero_state(1, 0, target);
        for (int k = 0; k < target; ++k) s = moment_update(std::move(s), {g}, cfg);
        auto [m_hat, v_hat] = bias_correct(s, cfg);
        CHECK(std::abs(m_hat[0] - g) <= 1e-12 * std::abs(g));
        CHECK(std::abs(v_hat[0] - g * g) <= 1e-12 * g * g);
    }
}

TEST_CASE("bias_correct: scalar v with global step counter") {
    auto cfg = base_config();
    MomentState s;
    s.m = {0.0};
    s.v = {2.5e-4};
    s.k = 1;
    s.t = 1;
    auto [m_hat, v_hat] = bias_correct(s, cfg);
    CHECK(v_hat[0] == Catch::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("bias_correct: large k makes the correction vanish") {
    auto cfg = base_config();
    MomentState s;
    s.m = {0.42};
    s.v = {0.1};
    s.k = 100000;
    s.t = 100000;
    auto [m_hat, v_hat] = bias_correct(s, cfg);
    CHECK(m_hat[0] == Catch::Approx(0.42).epsilon(1e-12));
    CHECK(v_hat[0] == Catch::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("bias_correct requires k >= 1 and t >= 1") {
    auto cfg = base_config();
    CHECK_THROWS_AS(bias_correct(zero_state(1), cfg), Error);
}

TEST_CASE("bias correction of v uses the global step counter, not the local one") {
    // Second round (round index 1, K = 10): local k = 1 but t = 11.
    auto cfg = base_config();
    const double g = 2.0;
    MomentState s = zero_state(1, 1, 10);
    s = moment_update(std::move(s), {g}, cfg);
    REQUIRE(s.k == 1);
    REQUIRE(s.t == 11);
    auto [m_hat, v_hat] = bias_correct(s, cfg);
    const double expected_v = (1.0 - cfg.beta2) * g * g / (1.0 - std::pow(cfg.beta2, 11));
    CHECK(v_hat[0] == Catch::Approx(expected_v).epsilon(1e-13));
    CHECK(m_hat[0] == Catch::Approx(g).epsilon(1e-13));
}

TEST_CASE("preconditioner boundary and scalar values") {
    auto cfg = base_config();
    CHECK(preconditioner({0.0}, cfg)[0] == Catch::Approx(1e8).epsilon(1e-12));
    CHECK(preconditioner({0.25}, cfg)[0] == Catch::Approx(2.0).epsilon(1e-7));
    CHECK_THROWS_AS(preconditioner({-1e-9}, cfg), NumericError);
}

TEST_CASE("preconditioner entries stay within the clipped-gradient bounds") {
    auto cfg = base_config();
    cfg.clip = 2.0;  // G_g
    RngStream rng = derive_rng(SeedSpec{5}, 0, 0, StreamPurpose::probe);
    // Two rounds with a warm start between them; bound must hold throughout.
    MomentState s = zero_state(4, 0, 25);
    ParamVector carried;
    for (int round = 0; round < 2; ++round) {
        if (round == 1) {
            double mean = 0.0;
            for (double x : carried) mean += x;
            mean /= static_cast<double>(carried.size());
            s = make_moment_state(ParamVector(4, 0.0), ParamVector(4, mean), 1, 25);
        }
        for (int k = 0; k < 25; ++k) {
            ParamVector g(4);
            for (double& x : g) x = 10.0 * rng.normal();
            g = clip_gradient(std::move(g), cfg.clip);
            s = moment_update(std::move(s), g, cfg);
            auto [m_hat, v_hat] = bias_correct(s, cfg);
            ParamVector theta = preconditioner(v_hat, cfg);
            for (double th : theta) {
                CHECK(th >= 1.0 / (cfg.clip + cfg.eps) * (1.0 - 1e-12));
                CHECK(th <= 1.0 / cfg.eps * (1.0 + 1e-12));
            }
        }
        carried = s.v;
    }
}

TEST_CASE("adamw_step: zero momentum and zero decay is a fixed point") {
    auto cfg = base_config();
    ParamVector x{1.0, -2.0, 3.0};
    ParamVector out = adamw_step(x, ParamVector(3, 0.0), ParamVector(3, 0.04), cfg);
    CHECK(out == x);
}

TEST_CASE("adamw_step: scalar hand computation") {
    auto cfg = base_config();
    cfg.lambda = 0.01;
    ParamVector out = adamw_step({1.0}, {0.5}, {0.25}, cfg);
    CHECK(out[0] == Catch::Approx(0.899).margin(1e-6));
}

TEST_CASE("adamw_step: decay-only dynamics shrink geometrically") {
    auto cfg = base_config();
    cfg.lambda = 0.05;
    ParamVector x{2.0};
    for (int i = 0; i < 10; ++i) {
        ParamVector next = adamw_step(x, {0.0}, {0.0}, cfg);
        CHECK(next[0] == Catch::Approx((1.0 - cfg.eta * cfg.lambda) * x[0]).epsilon(1e-15));
        x = next;
    }
}

TEST_CASE("decay contribution is exactly -eta*lambda*x when gradients vanish") {
    auto with_decay = base_config();
    with_decay.lambda = 0.02;
    auto no_decay = base_config();
    ParamVector x{3.0, -1.5};
    ParamVector a = adamw_step(x, ParamVector(2, 0.0), ParamVector(2, 0.0), with_decay);
    ParamVector b = adamw_step(x, ParamVector(2, 0.0), ParamVector(2, 0.0), no_decay);
    for (std::size_t j = 0; j < x.size(); ++j) {
        // With g == 0 the update reduces to the pure decay term.
        CHECK(a[j] == x[j] - with_decay.eta * (with_decay.lambda * x[j]));
        CHECK(b[j] == x[j]);
        CHECK(a[j] - b[j] ==
              Catch::Approx(-with_decay.eta * with_decay.lambda * x[j]).margin(1e-14));
    }
}

TEST_CASE("paper-literal decay sign grows weights instead of shrinking") {
    auto cfg = base_config();
    cfg.lambda = 0.05;
    cfg.paper_literal_decay_sign = true;
    ParamVector out = adamw_step({2.0}, {0.0}, {0.0}, cfg);
    CHECK(out[0] == Catch::Approx((1.0 + cfg.eta * cfg.lambda) * 2.0).epsilon(1e-15));
}

TEST_CASE("fedadamw_local_step with alpha = 0 matches adamw_step bit for bit") {
    auto cfg = base_config();
    cfg.alpha = 0.0;
    cfg.lambda = 0.003;
    RngStream rng = derive_rng(SeedSpec{11}, 0, 0, StreamPurpose::probe);
    ParamVector x(16), m(16), v(16), dg(16);
    for (std::size_t j = 0; j < 16; ++j) {
        x[j] = rng.normal();
        m[j] = rng.normal();
        v[j] = std::abs(rng.normal());
        dg[j] = rng.normal();
    }
    ParamVector fed = fedadamw_local_step(x, m, v, dg, cfg);
    ParamVector plain = adamw_step(x, m, v, cfg);
    CHECK(fed == plain);
}

TEST_CASE("fedadamw_local_step with zero drift matches adamw_step") {
    auto cfg = base_config();
    ParamVector x{0.4, -1.0}, m{0.2, 0.3}, v{0.09, 0.16};
    ParamVector fed = fedadamw_local_step(x, m, v, ParamVector(2, 0.0), cfg);
    ParamVector plain = adamw_step(x, m, v, cfg);
    CHECK(fed[0] == Catch::Approx(plain[0]).epsilon(1e-15));
    CHECK(fed[1] == Catch::Approx(plain[1]).epsilon(1e-15));
}

TEST_CASE("fedadamw_local_step: scalar hand computation") {
    auto cfg = base_config();
    cfg.alpha = 0.5;
    ParamVector out = fedadamw_local_step({1.0}, {0.5}, {0.25}, {0.2}, cfg);
    CHECK(out[0] == Catch::Approx(0.89).margin(1e-6));
}

TEST_CASE("simplified_local_step reductions and hand value") {
    auto cfg = base_config();
    cfg.beta1 = 0.0;
    cfg.lambda = 0.0;

    SECTION("alpha = 1 is a pure preconditioned gradient step") {
        cfg.alpha = 1.0;
        ParamVector out = simplified_local_step({1.0}, {2.0}, {4.0}, {99.0}, cfg);
        CHECK(out[0] == Catch::Approx(1.0 - cfg.eta * 2.0 / (2.0 + cfg.eps)).epsilon(1e-12));
    }
    SECTION("alpha = 0 moves all clients identically") {
        cfg.alpha = 0.0;
        ParamVector out = simplified_local_step({1.0}, {123.0}, {4.0}, {2.0}, cfg);
        CHECK(out[0] == Catch::Approx(1.0 - cfg.eta * 2.0).epsilon(1e-14));
    }
    SECTION("scalar hand computation with eps = 0") {
        cfg.alpha = 0.5;
        cfg.eps = 0.0;
        ParamVector out = simplified_local_step({0.0}, {1.0}, {1.0}, {2.0}, cfg);
        CHECK(out[0] == Catch::Approx(-0.15).epsilon(1e-14));
    }
}

TEST_CASE("simplified_local_step enforces its parameter restrictions") {
    auto cfg = base_config();
    cfg.lambda = 0.01;
    cfg.beta1 = 0.0;
    CHECK_THROWS_AS(simplified_local_step({0.0}, {1.0}, {1.0}, {0.0}, cfg), ConfigError);
    cfg.lambda = 0.0;
    cfg.beta1 = 0.9;
    CHECK_THROWS_AS(simplified_local_step({0.0}, {1.0}, {1.0}, {0.0}, cfg), ConfigError);
}

TEST_CASE("v stays elementwise nonnegative under updates") {
    auto cfg = base_config();
    RngStream rng = derive_rng(SeedSpec{77}, 0, 0, StreamPurpose::probe);
    MomentState s = zero_state(8, 0, 200);
    for (int k = 0; k < 200; ++k) {
        ParamVector g(8);
        for (double& x : g) x = 5.0 * rng.normal();
        s = moment_update(std::move(s), g, cfg);
        for (double vj : s.v) CHECK(vj >= 0.0);
    }
}

TEST_CASE("decay mask exempts selected coordinates") {
    auto cfg = base_config();
    cfg.lambda = 0.1;
    ParamVector x{1.0, 1.0};
    ParamVector mask{1.0, 0.0};
    ParamVector out = adamw_step(x, ParamVector(2, 0.0), ParamVector(2, 0.0), cfg, &mask);
    CHECK(out[0] == Catch::Approx(1.0 - cfg.eta * cfg.lambda).epsilon(1e-15));
    CHECK(out[1] == 1.0);
}

TEST_CASE("config validation rejects out-of-range values") {
    auto cfg = base_config();
    cfg.eta = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_config();
    cfg.beta2 = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_config();
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = base_config();
    cfg.lambda = -0.1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
