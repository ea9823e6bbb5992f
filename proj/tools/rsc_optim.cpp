// Command-line front end: training runs, bound verification, kernel reports,
// Hermite coefficient tables, closed-form constants, and the width-sweep
// experiment. Every run writes a manifest.json with the resolved settings.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rscopt/bounds.hpp"
#include "rscopt/data.hpp"
#include "rscopt/hermite.hpp"
#include "rscopt/network.hpp"
#include "rscopt/ntk.hpp"
#include "rscopt/trainer.hpp"
#include "rscopt/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rscopt;

namespace {

struct CommonOpts {
    std::size_t width = 512, depth = 3, input_dim = 16, n = 512;
    std::string activation = "tanh";
    double sigma1 = 1.0;
    std::uint64_t seed = 0;
    double rho = 1.0, rho1 = 1.0, rho2 = -1.0, kappa = 0.5, omega = 1.0;
    std::size_t max_iters = 3000, monitor_every = 1;
    double loss_target = 1e-3;
    std::string data = "synthetic";
    std::string data_dir;
    std::string outdir = "out";
    std::size_t threads = 0;

    void add_to(CLI::App* app) {
        app->add_option("--width", width, "network width m");
        app->add_option("--depth", depth, "network depth L");
        app->add_option("--input-dim", input_dim, "input dimension for synthetic data");
        app->add_option("--n", n, "number of training points");
        app->add_option("--activation", activation, "tanh|sigmoid|gelu|softplus|identity");
        app->add_option("--sigma1", sigma1, "initialization scale sigma1");
        app->add_option("--seed", seed, "global seed");
        app->add_option("--rho", rho, "spectral ball radius");
        app->add_option("--rho1", rho1, "last-layer ball radius");
        app->add_option("--rho2", rho2, "trust radius (negative: derive from step size)");
        app->add_option("--kappa", kappa, "direction-cosine threshold in (0,1]");
        app->add_option("--omega", omega, "step size factor in (0,2), eta = omega/beta");
        app->add_option("--max-iters", max_iters, "iteration cap");
        app->add_option("--loss-target", loss_target, "stop when loss drops below this");
        app->add_option("--monitor-every", monitor_every, "log every k-th step");
        app->add_option("--data", data, "synthetic|mnist|fashion-mnist|cifar10|csv:<path>");
        app->add_option("--data-dir", data_dir, "dataset directory (default $RSC_OPTIM_DATA_DIR or ./data)");
        app->add_option("--outdir", outdir, "output directory");
        app->add_option("--threads", threads, "worker cap (default $RSC_OPTIM_THREADS or 1)");
    }

    std::size_t resolved_threads() const {
        if (threads > 0) return threads;
        if (const char* e = std::getenv("RSC_OPTIM_THREADS")) {
            const long v = std::atol(e);
            if (v > 0) return static_cast<std::size_t>(v);
        }
        return 1;
    }

    std::string resolved_data_dir() const {
        if (!data_dir.empty()) return data_dir;
        if (const char* e = std::getenv("RSC_OPTIM_DATA_DIR")) return e;
        return "data";
    }

    NetworkConfig net_config() const {
        NetworkConfig cfg;
        cfg.depth = depth;
        cfg.input_dim = input_dim;
        cfg.width = width;
        cfg.act = Activation::from_name(activation);
        cfg.sigma1 = sigma1;
        cfg.seed = seed;
        return cfg;
    }

    TrainConfig train_config() const {
        TrainConfig tc;
        tc.max_iters = max_iters;
        tc.loss_target = loss_target;
        tc.omega = omega;
        tc.kappa = kappa;
        tc.rho = rho;
        tc.rho1 = rho1;
        tc.rho2 = rho2;
        tc.monitor_every = monitor_every;
        return tc;
    }

    json manifest(const std::string& subcommand) const {
        return json{{"subcommand", subcommand}, {"width", width},
                    {"depth", depth},           {"input_dim", input_dim},
                    {"n", n},                   {"activation", activation},
                    {"sigma1", sigma1},         {"seed", seed},
                    {"rho", rho},               {"rho1", rho1},
                    {"rho2", rho2},             {"kappa", kappa},
                    {"omega", omega},           {"max_iters", max_iters},
                    {"loss_target", loss_target}, {"monitor_every", monitor_every},
                    {"data", data},             {"data_dir", resolved_data_dir()},
                    {"outdir", outdir},         {"threads", resolved_threads()}};
    }
};

Dataset load_data(const CommonOpts& o, std::uint64_t seed) {
    if (o.data == "synthetic") return synthetic(o.n, o.input_dim, seed);
    if (o.data.rfind("csv:", 0) == 0) {
        Dataset ds = load_csv_cache(o.data.substr(4));
        return o.n < ds.n ? subsample(ds, o.n, seed) : ds;
    }
    const std::string dir = o.resolved_data_dir();
    if (o.data == "mnist" || o.data == "fashion-mnist") {
        const std::string sub = dir + "/" + o.data;
        Dataset ds = load_idx(sub + "/train-images-idx3-ubyte", sub + "/train-labels-idx1-ubyte");
        return o.n < ds.n ? subsample(ds, o.n, seed) : ds;
    }
    if (o.data == "cifar10") {
        Dataset ds = load_cifar10(dir + "/cifar-10-batches-bin/data_batch_1.bin");
        return o.n < ds.n ? subsample(ds, o.n, seed) : ds;
    }
    throw std::runtime_error("unknown dataset: " + o.data);
}

void write_manifest(const CommonOpts& o, const std::string& subcommand) {
    fs::create_directories(o.outdir);
    std::ofstream out(o.outdir + "/manifest.json");
    if (!out) throw std::runtime_error("cannot write manifest in " + o.outdir);
    out << o.manifest(subcommand).dump(2) << "\n";
}

int cmd_train(const CommonOpts& o) {
    write_manifest(o, "train");
    const Dataset ds = load_data(o, o.seed);
    NetworkConfig cfg = o.net_config();
    cfg.input_dim = ds.d;
    const Params p0 = init(cfg);
    const TrainResult r = train(p0, cfg, o.train_config(), ds.X, ds.y);
    write_log_csv(r.log, o.outdir + "/train_log.csv");
    save_params(r.params, cfg, o.outdir + "/params_final.bin");
    json summary{{"steps", r.steps},
                 {"final_loss", r.log.empty() ? -1.0 : r.log.back().loss},
                 {"reached_target", r.reached_target},
                 {"diverged", r.diverged},
                 {"beta", r.ctx.beta},
                 {"c_H", r.ctx.c_H},
                 {"varrho", r.ctx.varrho},
                 {"rho2", r.ctx.rho2},
                 {"min_gbar_norm", r.log.empty() ? -1.0 : min_gbar_over_run(r.log)},
                 {"alpha_nonpositive_steps", r.alpha_nonpositive_steps.size()},
                 {"ball_exit_steps", r.ball_exit_steps.size()}};
    std::cout << summary.dump(2) << "\n";
    return r.diverged ? 1 : 0;
}

int cmd_verify(const CommonOpts& o) {
    write_manifest(o, "verify");
    const Dataset ds = load_data(o, o.seed);
    NetworkConfig cfg = o.net_config();
    cfg.input_dim = ds.d;
    const Params p0 = init(cfg);
    BoundContext ctx = make_bound_context(cfg, o.rho, o.rho1, std::max(o.rho2, 0.0), o.kappa);
    set_loss_constants(ctx, ds.y);
    ctx.beta = smoothness_beta(ctx);
    std::vector<VerificationReport> reports =
        verify_appendix_A(p0, cfg, ctx, ds.X, ds.y, o.seed, /*at_init=*/true);
    if (p0.flat_size() <= 2000 || cfg.width <= 512)
        reports.push_back(verify_hessian_bound(p0, cfg, ctx, ds.X, p0, o.seed));
    json arr = json::array();
    bool all_ok = true;
    for (const VerificationReport& r : reports) {
        arr.push_back(json{{"quantity", r.quantity},
                           {"empirical", r.empirical},
                           {"bound", r.bound},
                           {"satisfied", r.satisfied},
                           {"margin_ratio", r.margin_ratio},
                           {"method", r.method},
                           {"note", r.note}});
        all_ok = all_ok && r.satisfied;
    }
    std::cout << arr.dump(2) << "\n";
    return all_ok ? 0 : 1;
}

int cmd_ntk(const CommonOpts& o) {
    write_manifest(o, "ntk");
    Dataset ds = load_data(o, o.seed);
    NetworkConfig cfg = o.net_config();
    cfg.input_dim = ds.d;
    const double s0 = init_stddev(cfg);
    const NTKBoundConstants hcst0 = ntk_lower_bound_constants(cfg.depth, cfg.act, s0, 12);
    // self-consistent normalization: weight variance nu0^2, inputs scaled so
    // pre-activation variance is sigma0^2 at every depth
    const double input_scale = std::sqrt(hcst0.c_phi_sigma0);
    for (double& v : ds.X.a) v *= input_scale;
    const Params p = init_with_stddev(cfg, std::sqrt(hcst0.nu0_sq));
    NTKReport rep = ntk_gram(p, cfg, ds.X);
    NTKBoundConstants hcst = hcst0;
    {
        Matrix Xn = ds.X;
        for (double& v : Xn.a) v /= input_scale;
        const McEstimate lam =
            lambda1_estimate(Xn, std::sqrt(hcst.nu0_sq), cfg.act, 4096, o.seed);
        hcst.lambda1 = lam.estimate;
        hcst.lambda1_se = lam.std_error;
    }
    const MinEigBound b = ntk_min_eig_bound(rep, hcst);
    const std::vector<LayerConcReport> conc =
        layer_gram_concentration(cfg, std::sqrt(hcst.nu0_sq), ds.X, 20);
    json per_layer = json::array();
    for (const LayerConcReport& c : conc)
        per_layer.push_back(json{{"layer", c.layer},
                                 {"pass_fraction", c.pass_fraction},
                                 {"rank_deficient", c.rank_deficient},
                                 {"mean_lambda_hat", c.mean_lambda_hat},
                                 {"mean_lambda_min", c.mean_lambda_min}});
    json outj{{"lambda_min", rep.lambda_min_empirical},
              {"lower_bound", b.bound},
              {"bound_satisfied", b.satisfied},
              {"decomposition_gap", rep.frob_gap_rel},
              {"c0", hcst.c0},
              {"lambda1", hcst.lambda1},
              {"lambda1_se", hcst.lambda1_se},
              {"per_layer_concentration", per_layer}};
    std::cout << outj.dump(2) << "\n";
    return b.satisfied && rep.frob_gap_rel < 1e-8 ? 0 : 1;
}

int cmd_hermite(const CommonOpts& o, double variance, std::size_t order, std::size_t nodes) {
    write_manifest(o, "hermite");
    const Activation act = Activation::from_name(o.activation);
    const HermiteCoeffs c = hermite_coeffs(act, variance, order, nodes);
    std::printf("r,mu_r,mu_r_squared_cumsum\n");
    double cum = 0.0;
    for (std::size_t r = 0; r < c.mu.size(); ++r) {
        cum += c.mu[r] * c.mu[r];
        std::printf("%zu,%.17g,%.17g\n", r, c.mu[r], cum);
    }
    return 0;
}

int cmd_bounds(const CommonOpts& o, double gamma_target, double beta_phi_override,
               double phi0_override) {
    write_manifest(o, "bounds");
    const Activation act = Activation::from_name(o.activation);
    const double beta_phi = beta_phi_override >= 0.0 ? beta_phi_override : act.smoothness;
    const double phi0 = phi0_override >= 0.0 ? phi0_override : std::abs(act.value_at_zero);
    const double gamma =
        gamma_target > 0.0 ? gamma_target : gamma_const(o.sigma1, o.rho, o.width);
    const std::vector<double> h = h_seq(gamma, phi0, o.depth);
    const double psi = psi_H_const(gamma, h, beta_phi, o.depth);
    const double cH = c_H_const(gamma, h, psi, o.rho1, o.depth);
    const double varrho = varrho_const(gamma, h, o.rho1, o.depth, o.width);
    const std::vector<double> y0(1, 0.0);
    const double c_ball = loss_constant(y0, o.rho1, gamma, phi0, o.depth);
    const double a = 2.0, b = 2.0;
    const double beta = b * varrho * varrho +
                        cH * std::sqrt(c_ball) / std::sqrt(static_cast<double>(o.width));
    double rho2 = o.rho2;
    if (rho2 < 0.0) rho2 = (o.omega / beta) * 2.0 * std::sqrt(c_ball) * varrho;
    json j{{"gamma", gamma},
           {"h", std::vector<double>(h.begin() + 1, h.end())},
           {"psi_H", psi},
           {"c_H", cH},
           {"varrho", varrho},
           {"beta", beta},
           {"c_loss_ball", c_ball},
           {"c1", a * o.kappa * o.kappa},
           {"c2", 2.0 * cH * (a * varrho * rho2 + std::sqrt(c_ball))}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_experiment_rsc(const CommonOpts& o, std::vector<std::size_t> widths,
                       std::size_t n_run_seeds) {
    write_manifest(o, "experiment-rsc");
    if (widths.empty()) widths = {64, 128, 256, 512, 1024, 2048};
    const Dataset base = load_data(o, o.seed);

    struct Cell {
        std::size_t width = 0;
        std::uint64_t seed = 0;
        std::vector<TrainLogRecord> log;
    };
    std::vector<Cell> cells;
    for (std::size_t w : widths)
        for (std::size_t s = 0; s < n_run_seeds; ++s)
            cells.push_back({w, o.seed + s, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            NetworkConfig cfg = o.net_config();
            cfg.width = cells[i].width;
            cfg.input_dim = base.d;
            cfg.seed = cells[i].seed;
            const Params p0 = init(cfg);
            const TrainResult r = train(p0, cfg, o.train_config(), base.X, base.y);
            cells[i].log = r.log;
        }
    };
    const std::size_t nw = std::min(o.resolved_threads(), cells.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < nw; ++i) pool.emplace_back(worker);
    worker();
    for (std::thread& t : pool) t.join();

    fs::create_directories(o.outdir);
    std::ofstream sweep(o.outdir + "/min_gbar_vs_width.csv");
    sweep << "width,min_gbar_norm_mean,min_gbar_norm_std\n";
    char buf[128];
    for (std::size_t wi = 0; wi < widths.size(); ++wi) {
        std::vector<const Cell*> group;
        for (const Cell& c : cells)
            if (c.width == widths[wi]) group.push_back(&c);
        // trajectory averaged over the seeds still running at each step
        std::size_t tmax = 0;
        for (const Cell* c : group)
            if (!c->log.empty()) tmax = std::max(tmax, c->log.back().t + 1);
        std::ofstream traj(o.outdir + "/gbar_trajectory_m" + std::to_string(widths[wi]) + ".csv");
        traj << "t,gbar_norm,loss\n";
        std::vector<std::size_t> pos(group.size(), 0);
        for (std::size_t t = 0; t < tmax; ++t) {
            double sg = 0.0, sl = 0.0;
            std::size_t cnt = 0;
            for (std::size_t gi = 0; gi < group.size(); ++gi) {
                const std::vector<TrainLogRecord>& lg = group[gi]->log;
                while (pos[gi] < lg.size() && lg[pos[gi]].t < t) ++pos[gi];
                if (pos[gi] < lg.size() && lg[pos[gi]].t == t) {
                    sg += lg[pos[gi]].gbar_norm;
                    sl += lg[pos[gi]].loss;
                    ++cnt;
                }
            }
            if (cnt == 0) continue;
            std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t, sg / cnt, sl / cnt);
            traj << buf;
        }
        double mean = 0.0, var = 0.0;
        std::vector<double> mins;
        for (const Cell* c : group) mins.push_back(min_gbar_over_run(c->log));
        for (double v : mins) mean += v;
        mean /= static_cast<double>(mins.size());
        for (double v : mins) var += (v - mean) * (v - mean);
        if (mins.size() > 1) var /= static_cast<double>(mins.size() - 1);
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", widths[wi], mean, std::sqrt(var));
        sweep << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-network optimization bound toolkit"};
    app.require_subcommand(1);
    app.set_config("--config")->configurable(false);

    CommonOpts o;
    double hermite_variance = 1.0;
    std::size_t hermite_order = 12, hermite_nodes = 200;
    double gamma_target = -1.0, beta_phi_override = -1.0, phi0_override = -1.0;
    std::vector<std::size_t> widths;
    std::size_t run_seeds = 3;

    CLI::App* strain = app.add_subcommand("train", "full-batch gradient descent run");
    CLI::App* sverify = app.add_subcommand("verify", "bound-vs-empirical verification");
    CLI::App* sntk = app.add_subcommand("ntk", "kernel report at initialization");
    CLI::App* shermite = app.add_subcommand("hermite", "activation Hermite coefficients");
    CLI::App* sbounds = app.add_subcommand("bounds", "closed-form constants report");
    CLI::App* sexp = app.add_subcommand("experiment-rsc", "width sweep experiment");
    for (CLI::App* s : {strain, sverify, sntk, shermite, sbounds, sexp}) o.add_to(s);
    shermite->add_option("--variance", hermite_variance, "Hermite weight variance a");
    shermite->add_option("--order", hermite_order, "truncation order R");
    shermite->add_option("--nodes", hermite_nodes, "quadrature nodes");
    sbounds->add_option("--gamma-target", gamma_target, "set gamma directly");
    sbounds->add_option("--beta-phi", beta_phi_override, "override beta_phi");
    sbounds->add_option("--phi0-abs", phi0_override, "override |phi(0)|");
    sexp->add_option("--widths", widths, "width grid");
    sexp->add_option("--run-seeds", run_seeds, "independent runs per width");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (strain->parsed()) return cmd_train(o);
        if (sverify->parsed()) return cmd_verify(o);
        if (sntk->parsed()) return cmd_ntk(o);
        if (shermite->parsed())
            return cmd_hermite(o, hermite_variance, hermite_order, hermite_nodes);
        if (sbounds->parsed())
            return cmd_bounds(o, gamma_target, beta_phi_override, phi0_override);
        if (sexp->parsed()) return cmd_experiment_rsc(o, widths, run_seeds);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
