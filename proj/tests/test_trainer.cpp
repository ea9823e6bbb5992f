#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "rscopt/data.hpp"
#include "rscopt/trainer.hpp"

using namespace rscopt;

namespace {

NetworkConfig cfg_of(std::size_t L, std::size_t d, std::size_t m, ActKind k, std::uint64_t seed) {
    NetworkConfig c;
    c.depth = L;
    c.input_dim = d;
    c.width = m;
    c.act = Activation::make(k);
    c.sigma1 = 1.0;
    c.seed = seed;
    return c;
}

}  // namespace

TEST_CASE("zero network on zero labels stops immediately") {
    const NetworkConfig c = cfg_of(2, 4, 8, ActKind::Tanh, 1);
    Params p = init(c);
    for (Matrix& w : p.W)
        for (double& v : w.a) v = 0.0;
    const Dataset ds = synthetic(4, 4, 2);
    TrainConfig tc;
    const TrainResult r = train(p, c, tc, ds.X, std::vector<double>(4, 0.0));
    CHECK(r.reached_target);
    CHECK(r.steps == 0);
    REQUIRE(r.log.size() == 1);
    CHECK(r.log[0].loss == 0.0);
}

TEST_CASE("one step equals explicit gradient descent") {
    const NetworkConfig c = cfg_of(2, 3, 5, ActKind::Tanh, 3);
    const Params p0 = init(c);
    const Dataset ds = synthetic(4, 3, 4);
    TrainConfig tc;
    tc.max_iters = 1;
    tc.loss_target = 0.0;
    tc.omega = 0.7;
    const TrainResult r = train(p0, c, tc, ds.X, ds.y);
    // eta = omega / beta with beta computed once from the context
    const double eta = tc.omega / r.ctx.beta;
    CHECK(r.log[0].eta_t == doctest::Approx(eta).epsilon(1e-15));
    // theta_1 = theta_0 - eta * (2/n) J^T (f - y), assembled sample by sample
    std::vector<double> expect = p0.to_flat();
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<double> x(3);
        for (std::size_t j = 0; j < 3; ++j) x[j] = ds.X(i, j);
        const ForwardTrace t = forward(p0, c, x);
        const GradientBundle g = backward(p0, c, t);
        const double coef = eta * 2.0 * (t.output - ds.y[i]) / 4.0;
        for (std::size_t k = 0; k < expect.size(); ++k) expect[k] -= coef * g.flat[k];
    }
    const std::vector<double> got = r.params.to_flat();
    for (std::size_t k = 0; k < expect.size(); ++k)
        CHECK(got[k] == doctest::Approx(expect[k]).epsilon(1e-10).scale(1e-12));
    // derived rho2 follows the default rule
    CHECK(r.ctx.rho2 ==
          doctest::Approx(eta * 2.0 * std::sqrt(r.ctx.c_loss_ball) * r.ctx.varrho));
}

TEST_CASE("config validation and label checks") {
    const NetworkConfig c = cfg_of(1, 3, 4, ActKind::Tanh, 5);
    const Params p = init(c);
    const Dataset ds = synthetic(3, 3, 6);
    TrainConfig tc;
    tc.omega = 2.0;
    CHECK_THROWS_AS(train(p, c, tc, ds.X, ds.y), std::invalid_argument);
    tc.omega = 1.0;
    tc.monitor_every = 0;
    CHECK_THROWS_AS(train(p, c, tc, ds.X, ds.y), std::invalid_argument);
    tc.monitor_every = 1;
    std::vector<double> bad = ds.y;
    bad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train(p, c, tc, ds.X, bad), std::invalid_argument);
    CHECK_THROWS_AS(train(p, c, tc, ds.X, {1.0}), std::invalid_argument);
}

TEST_CASE("divergence is reported, not thrown") {
    const NetworkConfig c = cfg_of(2, 3, 4, ActKind::Softplus, 7);
    Params p = init(c);
    for (double& v : p.v) v = 1e200;  // absurd start
    const Dataset ds = synthetic(3, 3, 8);
    TrainConfig tc;
    const TrainResult r = train(p, c, tc, ds.X, ds.y);
    CHECK(r.diverged);
    CHECK_FALSE(r.reached_target);
}

TEST_CASE("deterministic bit-identical replay") {
    const NetworkConfig c = cfg_of(2, 6, 12, ActKind::Tanh, 9);
    const Params p0 = init(c);
    const Dataset ds = synthetic(8, 6, 10);
    TrainConfig tc;
    tc.max_iters = 25;
    tc.loss_target = 0.0;
    const TrainResult a = train(p0, c, tc, ds.X, ds.y);
    const TrainResult b = train(p0, c, tc, ds.X, ds.y);
    CHECK(a.params.to_flat() == b.params.to_flat());
    REQUIRE(a.log.size() == b.log.size());
    for (std::size_t i = 0; i < a.log.size(); ++i) {
        CHECK(a.log[i].loss == b.log[i].loss);
        CHECK(a.log[i].gbar_norm == b.log[i].gbar_norm);
        CHECK(a.log[i].alpha_t == b.log[i].alpha_t);
    }
}

TEST_CASE("descent inequality holds along a short run") {
    const NetworkConfig c = cfg_of(2, 6, 32, ActKind::Tanh, 11);
    const Params p0 = init(c);
    const Dataset ds = synthetic(8, 6, 12);
    TrainConfig tc;
    tc.max_iters = 60;
    tc.loss_target = 0.0;
    const TrainResult r = train(p0, c, tc, ds.X, ds.y);
    CHECK_FALSE(r.diverged);
    CHECK(verify_one_step_inequalities(r.log, r.ctx.beta).empty());
    // loss is nonincreasing under eta = omega/beta
    for (std::size_t i = 0; i + 1 < r.log.size(); ++i)
        CHECK(r.log[i + 1].loss <= r.log[i].loss + 1e-12);
    // gradient-of-loss bound while in the ball
    for (const TrainLogRecord& rec : r.log)
        if (rec.in_ball)
            CHECK(rec.grad_loss_norm <= 2.0 * std::sqrt(rec.loss) * r.ctx.varrho + 1e-9);
    // contraction is recorded for consecutive monitored pairs
    bool saw = false;
    for (std::size_t i = 0; i + 1 < r.log.size(); ++i)
        if (!std::isnan(r.log[i].contraction)) saw = true;
    CHECK(saw);
}

TEST_CASE("min gbar over run") {
    std::vector<TrainLogRecord> log(3);
    log[0].gbar_norm = 0.5;
    log[1].gbar_norm = 0.2;
    log[2].gbar_norm = 0.9;
    CHECK(min_gbar_over_run(log) == doctest::Approx(0.2));
    CHECK_THROWS_AS(min_gbar_over_run({}), std::invalid_argument);
}

TEST_CASE("violation detector flags a fabricated increase") {
    std::vector<TrainLogRecord> log(2);
    log[0].t = 0;
    log[0].loss = 1.0;
    log[0].eta_t = 0.1;
    log[0].grad_loss_norm = 1.0;
    log[1].t = 1;
    log[1].loss = 2.0;  // went up: must violate for beta*eta < 2
    const std::vector<std::size_t> v = verify_one_step_inequalities(log, 1.0);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == 0);
    // non-consecutive records are skipped
    log[1].t = 5;
    CHECK(verify_one_step_inequalities(log, 1.0).empty());
}

TEST_CASE("csv schema is frozen") {
    std::vector<TrainLogRecord> log(1);
    log[0].t = 3;
    log[0].loss = 0.25;
    write_log_csv(log, "t_train_log.csv");
    std::ifstream in("t_train_log.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "t,loss,gbar_norm,alpha_t,eta_t,in_ball,step_norm,contraction");
    std::string row;
    std::getline(in, row);
    CHECK(row.substr(0, 7) == "3,0.25,");
    in.close();
    std::remove("t_train_log.csv");
    CHECK_THROWS_AS(write_log_csv(log, "no_such_dir/x.csv"), std::runtime_error);
}

TEST_CASE("monitor_every thins the log but keeps the final record") {
    const NetworkConfig c = cfg_of(1, 4, 8, ActKind::Tanh, 13);
    const Params p0 = init(c);
    const Dataset ds = synthetic(4, 4, 14);
    TrainConfig tc;
    tc.max_iters = 10;
    tc.loss_target = 0.0;
    tc.monitor_every = 4;
    const TrainResult r = train(p0, c, tc, ds.X, ds.y);
    REQUIRE_FALSE(r.log.empty());
    CHECK(r.log.back().t == 10);
    for (const TrainLogRecord& rec : r.log)
        CHECK((rec.t % 4 == 0 || rec.t == 10));
}
