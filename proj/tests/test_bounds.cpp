#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rscopt/bounds.hpp"
#include "rscopt/network.hpp"

using namespace rscopt;

namespace {

BoundContext manual_ctx(std::size_t L, std::size_t m, double gamma, double beta_phi,
                        double phi0_abs, double rho1) {
    BoundContext c;
    c.L = L;
    c.m = m;
    c.beta_phi = beta_phi;
    c.phi0_abs = phi0_abs;
    c.rho1 = rho1;
    c.gamma = gamma;
    c.h = h_seq(gamma, phi0_abs, L);
    c.psi_H = psi_H_const(gamma, c.h, beta_phi, L);
    c.c_H = c_H_const(gamma, c.h, c.psi_H, rho1, L);
    c.varrho = varrho_const(gamma, c.h, rho1, L, m);
    return c;
}

}  // namespace

TEST_CASE("gamma") {
    CHECK(gamma_const(1.0, 1.0, 4) == doctest::Approx(1.5));
    CHECK(gamma_const(0.5, 0.0, 100) == doctest::Approx(0.5));
    CHECK(gamma_const(1.0, 2.0, 1000000) == doctest::Approx(1.002));
    CHECK_THROWS_AS(gamma_const(1.0, 1.0, 0), std::invalid_argument);
}

TEST_CASE("h sequence") {
    // phi(0)=0, gamma=2, l=3 -> 4
    const std::vector<double> h = h_seq(2.0, 0.0, 3);
    CHECK(h[3] == doctest::Approx(4.0));
    CHECK(h[1] == 1.0);
    // softplus |phi(0)| = ln 2, gamma = 1, l = 2 -> 1 + ln 2
    const std::vector<double> hs = h_seq(1.0, std::log(2.0), 2);
    CHECK(hs[2] == doctest::Approx(1.693147).epsilon(1e-6));
    CHECK(hs[1] == 1.0);
    CHECK_THROWS_AS(h_seq(1.0, 0.0, 0), std::invalid_argument);
}

TEST_CASE("g") {
    CHECK(g_of(2.0, 0.0, 3) == doctest::Approx(8.0));
    CHECK(g_of(1.0, 1.0, 2) == doctest::Approx(3.0));  // 1 + (1 + 1)
    CHECK(g_of(0.5, std::log(2.0), 1) == doctest::Approx(0.5 + std::log(2.0) * 0.5));
}

TEST_CASE("c_H spot values") {
    // L=2, gamma=1, beta_phi=1, phi(0)=0, rho1=0: psi_H = 2, c_H = 14*2 + 2 = 30
    const BoundContext c2 = manual_ctx(2, 100, 1.0, 1.0, 0.0, 0.0);
    CHECK(c2.psi_H == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(c2.c_H == doctest::Approx(30.0).epsilon(1e-15));
    // L=3 same parameters: 3*(9+3+1)*2 + 3 = 81
    const BoundContext c3 = manual_ctx(3, 100, 1.0, 1.0, 0.0, 0.0);
    CHECK(c3.c_H == doctest::Approx(81.0).epsilon(1e-15));
    // doubling (1 + rho1) from 1 to 2 doubles the first additive term only
    const BoundContext c2r = manual_ctx(2, 100, 1.0, 1.0, 0.0, 1.0);
    CHECK(c2r.c_H == doctest::Approx(2.0 * 28.0 + 2.0).epsilon(1e-15));
    // L=1 extension: psi_H = beta_phi * h(1)^2
    const BoundContext c1 = manual_ctx(1, 100, 1.0, 0.7, 0.0, 0.0);
    CHECK(c1.psi_H == doctest::Approx(0.7));
}

TEST_CASE("varrho spot value and limit") {
    // L=1, gamma=1, phi(0)=0, rho1=0, m=100: varrho^2 = 1 + 2/100
    const BoundContext c = manual_ctx(1, 100, 1.0, 1.0, 0.0, 0.0);
    CHECK(c.varrho * c.varrho == doctest::Approx(1.02).epsilon(1e-15));
    // m -> infinity: varrho -> h(L+1)
    const BoundContext big = manual_ctx(2, 100000000, 1.3, 1.0, 0.5, 0.0);
    CHECK(big.varrho == doctest::Approx(big.h[3]).epsilon(1e-6));
}

TEST_CASE("loss constants") {
    // c_{a,b} = (2/n) sum y^2 + 2 (1+a)^2 g(b)^2
    const std::vector<double> y = {1.0, -1.0, 0.0, 2.0};
    const double c = loss_constant(y, 1.0, 1.0, 0.0, 2);  // g(1)=1 for phi0=0
    CHECK(c == doctest::Approx(2.0 * 6.0 / 4.0 + 2.0 * 4.0).epsilon(1e-15));
    CHECK_THROWS_AS(loss_constant({}, 1.0, 1.0, 0.0, 2), std::invalid_argument);
    // zero labels: only the g term survives
    CHECK(loss_constant({0.0}, 0.0, 2.0, 0.0, 3) == doctest::Approx(2.0 * 64.0));
}

TEST_CASE("smoothness beta example") {
    BoundContext c;
    c.loss_b = 2.0;
    c.varrho = std::sqrt(1.02);
    c.c_H = 30.0;
    c.c_loss_ball = 2.0;
    c.m = 10000;
    CHECK(smoothness_beta(c) == doctest::Approx(2.4642640687).epsilon(1e-10));
    // m -> infinity limit
    c.m = 10000000000000000ull;  // tail term c_H sqrt(c)/sqrt(m) ~ 4e-7
    CHECK(smoothness_beta(c) == doctest::Approx(2.04).epsilon(1e-5));
}

TEST_CASE("rsc alpha example, sign, affine structure") {
    BoundContext c;
    c.loss_a = 2.0;
    c.kappa = 1.0;
    c.c_H = 30.0;
    c.varrho = 2.0;
    c.rho2 = 1.0;
    c.c_loss_ball = 9.0;  // sqrt = 3
    c.m = 10000;
    CHECK(rsc_alpha(1.0, c) == doctest::Approx(-2.2).epsilon(1e-12));
    // zero gradient: always negative when the constants are positive
    CHECK(rsc_alpha(0.0, c) < 0.0);
    // affine in ||gbar||^2 with slope a*kappa^2
    const double s = rsc_alpha(2.0, c) - rsc_alpha(1.0, c);
    CHECK(s == doctest::Approx(c.loss_a * c.kappa * c.kappa).epsilon(1e-12));
}

TEST_CASE("rsc alpha general reduces to the square-loss form") {
    BoundContext c;
    c.loss_a = 2.0;
    c.kappa = 0.8;
    c.c_H = 30.0;
    c.varrho = 2.0;
    c.rho2 = 0.5;
    c.c_loss_ball = 4.0;
    c.m = 256;
    // For square loss lambda_t = 4 * loss; with loss = c_loss_ball the two
    // correction terms coincide: c4 + c_H*sqrt(4 c) = 2 c_H (a varrho rho2 + sqrt(c)).
    const double lam = 4.0 * c.c_loss_ball;
    CHECK(rsc_alpha_general(0.37, lam, c) == doctest::Approx(rsc_alpha(0.37, c)).epsilon(1e-12));
    CHECK_THROWS_AS(rsc_alpha_general(1.0, -1.0, c), std::invalid_argument);
}

TEST_CASE("alpha below beta for valid configurations") {
    for (std::size_t m : {64u, 256u, 1024u}) {
        NetworkConfig cfg;
        cfg.depth = 2;
        cfg.input_dim = 8;
        cfg.width = m;
        cfg.act = Activation::make(ActKind::Tanh);
        cfg.sigma1 = 1.0;
        BoundContext c = make_bound_context(cfg, 1.0, 1.0, 0.1, 0.9);
        set_loss_constants(c, {0.5, -0.5, 1.0});
        const double beta = smoothness_beta(c);
        for (double g2 : {0.0, 0.1, 1.0}) CHECK(rsc_alpha(g2, c) < beta);
    }
}

TEST_CASE("make_bound_context validation and wiring") {
    NetworkConfig cfg;
    cfg.depth = 2;
    cfg.input_dim = 4;
    cfg.width = 16;
    cfg.act = Activation::make(ActKind::Tanh);
    cfg.sigma1 = 1.0;
    CHECK_THROWS_AS(make_bound_context(cfg, 1.0, 1.0, 0.1, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_bound_context(cfg, 1.0, 1.0, 0.1, 1.5), std::invalid_argument);
    const BoundContext c = make_bound_context(cfg, 1.0, 1.0, 0.1, 1.0);
    CHECK(c.gamma == doctest::Approx(1.25));
    CHECK(c.beta_phi == doctest::Approx(4.0 / (3.0 * std::sqrt(3.0))));
    CHECK(c.h.size() == 4);
}

TEST_CASE("spectral ball membership") {
    NetworkConfig cfg;
    cfg.depth = 2;
    cfg.input_dim = 4;
    cfg.width = 8;
    cfg.act = Activation::make(ActKind::Tanh);
    cfg.sigma1 = 1.0;
    cfg.seed = 77;
    const Params p0 = init(cfg);
    // theta = theta0 is trivially inside
    BallReport r = in_spec_ball(p0, p0, 0.5, 0.5);
    CHECK(r.member);
    REQUIRE(r.margins.size() == 3);
    for (double mg : r.margins) CHECK(mg == doctest::Approx(0.5).epsilon(1e-6));
    // rank-one bump of known spectral norm
    Params p = p0;
    for (std::size_t j = 0; j < 4; ++j) p.W[0](0, j) += 0.3;  // spectral norm 0.6
    CHECK(in_spec_ball(p, p0, 0.7, 0.5).member);
    CHECK_FALSE(in_spec_ball(p, p0, 0.5, 0.5).member);
    CHECK(in_spec_ball(p, p0, 0.7, 0.5).margins[0] == doctest::Approx(0.1).epsilon(1e-6));
    // last-layer radius
    p = p0;
    p.v[0] += 0.4;
    CHECK(in_spec_ball(p, p0, 0.5, 0.5).member);
    CHECK_FALSE(in_spec_ball(p, p0, 0.5, 0.3).member);
}

TEST_CASE("q_kappa cone membership") {
    const std::vector<double> t0 = {0.0, 0.0};
    const std::vector<double> g = {1.0, 0.0};
    CHECK(in_q_kappa({1.0, 0.0}, t0, g, 0.9));       // aligned
    CHECK(in_q_kappa({-1.0, 0.0}, t0, g, 0.9));      // anti-aligned (absolute cosine)
    CHECK_FALSE(in_q_kappa({0.0, 1.0}, t0, g, 0.1)); // orthogonal
    CHECK(in_q_kappa({1.0, 1.0}, t0, g, 0.7));       // cos = 1/sqrt(2)
    CHECK_FALSE(in_q_kappa({1.0, 1.0}, t0, g, 0.8));
    CHECK_THROWS_AS(in_q_kappa(t0, t0, g, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(in_q_kappa({1.0, 0.0}, t0, {0.0, 0.0}, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(in_q_kappa({1.0, 0.0}, t0, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(in_q_kappa({1.0, 0.0}, t0, {1.0}, 0.5), std::invalid_argument);
}

TEST_CASE("monotonicity grids") {
    // gamma increasing in rho; h increasing in l for gamma >= 1
    double prev = 0.0;
    for (double rho : {0.0, 0.5, 1.0, 2.0}) {
        const double g = gamma_const(1.0, rho, 16);
        CHECK(g >= prev);
        prev = g;
    }
    const std::vector<double> h = h_seq(1.2, 0.3, 5);
    for (std::size_t l = 1; l <= 5; ++l) CHECK(h[l + 1] >= h[l]);
    // c_H nondecreasing in gamma on a grid (gamma >= 1)
    double prev_ch = 0.0;
    for (double gamma : {1.0, 1.1, 1.3, 1.6, 2.0}) {
        const std::vector<double> hh = h_seq(gamma, 0.0, 3);
        const double ch = c_H_const(gamma, hh, psi_H_const(gamma, hh, 1.0, 3), 0.0, 3);
        CHECK(ch >= prev_ch);
        prev_ch = ch;
    }
}
