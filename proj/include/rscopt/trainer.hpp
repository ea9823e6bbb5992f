#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rscopt/bounds.hpp"
#include "rscopt/matrix.hpp"
#include "rscopt/network.hpp"

namespace rscopt {

struct TrainConfig {
    std::size_t max_iters = 3000;
    double loss_target = 1e-3;
    double omega = 1.0;  // step size eta = omega / beta, omega in (0,2)
    double kappa = 0.5;
    double rho = 1.0, rho1 = 1.0;
    double rho2 = -1.0;  // negative: derive eta * 2 sqrt(c_{rho1,gamma}) varrho
    std::size_t monitor_every = 1;

    void validate() const {
        if (!(omega > 0.0 && omega < 2.0))
            throw std::invalid_argument("TrainConfig: omega must lie in (0,2)");
        if (monitor_every < 1) throw std::invalid_argument("TrainConfig: monitor_every >= 1");
    }
};

struct TrainLogRecord {
    std::size_t t = 0;
    double loss = 0.0;
    double gbar_norm = 0.0;
    double alpha_t = 0.0;
    double eta_t = 0.0;
    bool in_ball = true;
    double min_margin = 0.0;
    double step_norm = 0.0;
    double contraction = std::numeric_limits<double>::quiet_NaN();
    double grad_loss_norm = 0.0;  // not part of the CSV schema
};

struct TrainResult {
    Params params;
    std::vector<TrainLogRecord> log;
    BoundContext ctx;
    bool diverged = false;
    bool reached_target = false;
    std::size_t steps = 0;
    std::vector<std::size_t> alpha_nonpositive_steps;  // Assumption check A4.1
    std::vector<std::size_t> ball_exit_steps;          // Assumption check A4.2
};

inline double square_loss(const std::vector<double>& f, const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - y[i]) * (f[i] - y[i]);
    return s / static_cast<double>(f.size());
}

/// Full-batch gradient descent with the constant step size omega/beta,
/// restricted-strong-convexity monitoring, and trajectory logging.
inline TrainResult train(const Params& p0, const NetworkConfig& net_cfg, const TrainConfig& tc,
                         const Matrix& X, const std::vector<double>& y) {
    tc.validate();
    if (X.rows != y.size()) throw std::invalid_argument("train: sample/label count mismatch");
    for (double yi : y)
        if (!std::isfinite(yi)) throw std::invalid_argument("train: labels must be finite");
    const std::size_t n = X.rows;

    TrainResult res;
    res.ctx = make_bound_context(net_cfg, tc.rho, tc.rho1, /*rho2=*/0.0, tc.kappa);
    set_loss_constants(res.ctx, y);
    res.ctx.beta = smoothness_beta(res.ctx);
    const double eta = tc.omega / res.ctx.beta;
    res.ctx.rho2 = tc.rho2 >= 0.0
                       ? tc.rho2
                       : eta * 2.0 * std::sqrt(res.ctx.c_loss_ball) * res.ctx.varrho;

    Params p = p0;
    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    double best_loss = std::numeric_limits<double>::infinity();
    double prev_loss = 0.0, prev_best = 0.0;
    bool prev_monitored = false;
    std::size_t prev_t = 0;

    for (std::size_t t = 0;; ++t) {
        const BatchTrace bt = forward_batch(p, net_cfg, X);
        const double loss = square_loss(bt.f, y);
        if (!std::isfinite(loss) || loss > 1e6) {
            res.diverged = true;
            res.params = std::move(p);
            res.steps = t;
            return res;
        }
        if (prev_monitored && prev_t + 1 == t && !res.log.empty()) {
            // best visited loss including the new iterate, so the denominator
            // stays positive on strictly decreasing runs
            const double best = std::min(prev_best, loss);
            const double denom = prev_loss - best;
            res.log.back().contraction =
                denom > 0.0 ? (loss - best) / denom
                            : std::numeric_limits<double>::quiet_NaN();
        }
        prev_monitored = false;

        const bool stop = loss < tc.loss_target || t >= tc.max_iters;
        const bool monitored = stop || (t % tc.monitor_every == 0);
        TrainLogRecord rec;
        if (monitored) {
            rec.t = t;
            rec.loss = loss;
            rec.eta_t = eta;
            const std::vector<double> gbar = backward_batch(p, net_cfg, bt, uniform);
            rec.gbar_norm = norm2(gbar);
            rec.alpha_t = rsc_alpha(rec.gbar_norm * rec.gbar_norm, res.ctx);
            const BallReport ball = in_spec_ball(p, p0, tc.rho, tc.rho1);
            rec.in_ball = ball.member;
            rec.min_margin = *std::min_element(ball.margins.begin(), ball.margins.end());
            if (rec.alpha_t <= 0.0) res.alpha_nonpositive_steps.push_back(t);
            if (!rec.in_ball) res.ball_exit_steps.push_back(t);
        }
        if (stop) {
            if (monitored) res.log.push_back(rec);
            res.reached_target = loss < tc.loss_target;
            res.params = std::move(p);
            res.steps = t;
            return res;
        }

        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i)
            c[i] = 2.0 * (bt.f[i] - y[i]) / static_cast<double>(n);
        const std::vector<double> grad = backward_batch(p, net_cfg, bt, c);
        const double gn = norm2(grad);
        if (monitored) {
            rec.grad_loss_norm = gn;
            rec.step_norm = eta * gn;
            res.log.push_back(rec);
            prev_monitored = true;
            prev_t = t;
            prev_loss = loss;
            prev_best = std::min(best_loss, loss);
        }
        best_loss = std::min(best_loss, loss);

        std::vector<double> theta = p.to_flat();
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= eta * grad[i];
        p = Params::from_flat(theta, net_cfg);
    }
}

inline double min_gbar_over_run(const std::vector<TrainLogRecord>& log) {
    if (log.empty()) throw std::invalid_argument("min_gbar_over_run: empty log");
    double best = log[0].gbar_norm;
    for (const TrainLogRecord& r : log) best = std::min(best, r.gbar_norm);
    return best;
}

/// Steps violating the descent inequality
/// L(theta_{t+1}) <= L(theta_t) - eta (1 - beta eta / 2) ||grad L||^2.
inline std::vector<std::size_t> verify_one_step_inequalities(
    const std::vector<TrainLogRecord>& log, double beta, double slack = 1e-10) {
    std::vector<std::size_t> violations;
    for (std::size_t i = 0; i + 1 < log.size(); ++i) {
        if (log[i].t + 1 != log[i + 1].t) continue;  // non-consecutive records
        const double eta = log[i].eta_t;
        const double g2 = log[i].grad_loss_norm * log[i].grad_loss_norm;
        const double rhs = log[i].loss - eta * (1.0 - beta * eta / 2.0) * g2;
        if (log[i + 1].loss > rhs + slack * std::max(1.0, std::abs(rhs)))
            violations.push_back(log[i].t);
    }
    return violations;
}

inline void write_log_csv(const std::vector<TrainLogRecord>& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_log_csv: cannot open " + path);
    out << "t,loss,gbar_norm,alpha_t,eta_t,in_ball,step_norm,contraction\n";
    char buf[256];
    for (const TrainLogRecord& r : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g\n", r.t, r.loss,
                      r.gbar_norm, r.alpha_t, r.eta_t, r.in_ball ? 1 : 0, r.step_norm,
                      r.contraction);
        out << buf;
    }
    if (!out) throw std::runtime_error("write_log_csv: write failed");
}

}  // namespace rscopt
