// Command-line front end. Talks to the library only through eplab.h.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eplab/eplab.h"

namespace fs = std::filesystem;

namespace {

// Config errors exit with 2, everything else that goes wrong with 1.
struct Failure {
    int code;
    std::string message;
};

void check(eplab_status st, const std::string& what) {
    if (st == EPLAB_OK) return;
    const int code = st == EPLAB_INVALID_ARGUMENT ? 2 : 1;
    throw Failure{code, what + ": " + eplab_last_error() + " [" + eplab_status_name(st) + "]"};
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const fs::path& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) throw Failure{1, "cannot write " + path.string()};
}

struct Global {
    std::string out = "out";
    unsigned threads = 1;
    int verbose = 0;
};

struct PresetArgs {
    std::string preset = "laser";
    double a = 0.05;
    double s = 1.0;
    double b = 0.0;
    double sign = 1.0;

    void add(CLI::App* app) {
        app->add_option("--preset", preset, "Initial data: laser, gaussian_e, zero")
            ->check(CLI::IsMember({"laser", "laser_pulse", "gaussian_e", "gaussian", "zero"}))
            ->capture_default_str();
        app->add_option("--a", a, "Amplitude")->capture_default_str();
        app->add_option("--s", s, "Gaussian width")->capture_default_str();
        app->add_option("--b", b, "Gaussian velocity amplitude")->capture_default_str();
        app->add_option("--sign", sign, "Laser pulse sign convention (+1 or -1)")->capture_default_str();
    }

    eplab_init* make() const {
        eplab_init* init = nullptr;
        check(eplab_init_preset(preset.c_str(), a, s, b, sign, &init), "initial data");
        return init;
    }
};

struct GridArgs {
    double x_min = -10.0;
    double x_max = 10.0;
    int cells = 1024;

    void add(CLI::App* app) {
        app->add_option("--x-min", x_min, "Left window edge")->capture_default_str();
        app->add_option("--x-max", x_max, "Right window edge")->capture_default_str();
        app->add_option("--cells", cells, "Grid cells")->capture_default_str();
    }
};

struct SolverArgs {
    eplab_solver_config cfg{};
    std::string advection = "upwind";

    SolverArgs() { eplab_solver_defaults(&cfg); }

    void add(CLI::App* app, GridArgs& grid) {
        grid.add(app);
        app->add_option("--cfl", cfg.cfl, "CFL number in (0, 1)")->capture_default_str();
        app->add_option("--t-end", cfg.t_end, "Final time")->capture_default_str();
        app->add_option("--output-dt", cfg.output_dt, "Snapshot spacing (0: first and last only)")
            ->capture_default_str();
        app->add_option("--advection", advection, "upwind or central")
            ->check(CLI::IsMember({"upwind", "central"}))
            ->capture_default_str();
        app->add_option("--filter", cfg.filter, "Fourth-difference damping for central advection")
            ->capture_default_str();
        app->add_option("--nu", cfg.nu, "Constant friction")->capture_default_str();
        app->add_option("--nu0", cfg.nu0, "Density friction coefficient (nu0 n^gamma-f)")->capture_default_str();
        app->add_option("--gamma-f", cfg.nu_gamma, "Density friction exponent")->capture_default_str();
        app->add_option("--alpha", cfg.alpha, "Pressure coefficient")->capture_default_str();
        app->add_option("--gamma", cfg.gamma_p, "Pressure exponent")->capture_default_str();
        app->add_option("--mu", cfg.mu, "Viscosity")->capture_default_str();
        app->add_option("--exotic", cfg.exotic_viscosity, "Use mu (V_x/n)_x instead of mu V_xx")
            ->capture_default_str();
        app->add_option("--kappa", cfg.kappa, "Field diffusion")->capture_default_str();
        app->add_option("--b12", cfg.b12, "Cross diffusion V_xx in the E equation")->capture_default_str();
        app->add_option("--allow-combinations", cfg.allow_combinations, "Allow several regularizers at once")
            ->capture_default_str();
        app->add_option("--vx-factor", cfg.vx_factor, "Blow-up: max|V_x| above factor (max|V_x(0)| + 1)")
            ->capture_default_str();
        app->add_option("--min-density", cfg.min_density, "Blow-up: min n below this")->capture_default_str();
        app->add_option("--max-density", cfg.max_density, "Blow-up: max n above this")->capture_default_str();
        app->add_option("--steepness", cfg.steepness, "Blow-up: one-cell jump over running range above this")
            ->capture_default_str();
        app->add_option("--exotic-threshold", cfg.exotic_threshold, "Blow-up: min V_x/n below minus this")
            ->capture_default_str();
        app->add_option("--max-steps", cfg.max_steps, "Step budget")->capture_default_str();
    }

    eplab_solver_config finish(const GridArgs& grid, unsigned threads) {
        cfg.x_min = grid.x_min;
        cfg.x_max = grid.x_max;
        cfg.n_cells = grid.cells;
        cfg.advection = advection == "central" ? 1 : 0;
        cfg.threads = threads;
        return cfg;
    }
};

template <class T>
struct Handle {
    T* p = nullptr;
    void (*del)(T*);
    explicit Handle(void (*d)(T*)) : del(d) {}
    ~Handle() {
        if (p) del(p);
    }
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
};

fs::path prepare_out(const Global& g, CLI::App& app) {
    const fs::path dir(g.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Failure{2, "cannot create output directory " + g.out};
    // Globals, then the active subcommand's section; readable back with --config.
    std::ostringstream cfg;
    cfg << "threads=" << g.threads << "\nverbose=" << g.verbose << '\n';
    for (const CLI::App* sub : app.get_subcommands()) {
        cfg << '[' << sub->get_name() << "]\n";
        std::istringstream lines(sub->config_to_str(true, false));
        // Unset optional values would not read back.
        for (std::string line; std::getline(lines, line);)
            if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) cfg << line << '\n';
    }
    write_file(dir / "config.ini", cfg.str());
    return dir;
}

// ---- subcommands ----

int cmd_criterion(const Global& g, CLI::App& app, PresetArgs& pa, GridArgs& grid, double alpha, double gamma,
                  std::optional<double> v0, std::optional<double> e0, double e0p) {
    const fs::path dir = prepare_out(g, app);
    if (v0 || e0) {
        if (!v0 || !e0) throw Failure{2, "point mode needs both --v0 and --e0"};
        double lhs = 0.0, rhs = 0.0;
        check(eplab_criterion_point(*v0, *e0, e0p, alpha, gamma, &lhs, &rhs), "criterion");
        const char* verdict = lhs < rhs ? "smooth" : "blowup";
        std::ostringstream out;
        out << "v0,e0,e0p,lhs,rhs,verdict\n"
            << num(*v0) << ',' << num(*e0) << ',' << num(e0p) << ',' << num(lhs) << ',' << num(rhs) << ',' << verdict
            << '\n';
        write_file(dir / "criterion_point.csv", out.str());
        std::printf("delta=%s rhs=%s verdict=%s\n", num(lhs).c_str(), num(rhs).c_str(), verdict);
        return 0;
    }
    Handle<eplab_init> init(eplab_init_free);
    init.p = pa.make();
    int blowup = 0;
    double margin = 0.0, at = 0.0;
    check(eplab_criterion_table(init.p, grid.x_min, grid.x_max, grid.cells, alpha, gamma,
                                (dir / "criterion.csv").string().c_str(), &blowup, &margin, &at),
          "criterion");
    const char* verdict = blowup ? "blowup" : "smooth";
    std::ostringstream summary;
    summary << "verdict=" << verdict << "\nmax_margin=" << num(margin) << "\nargmax_x=" << num(at) << '\n';
    write_file(dir / "summary.txt", summary.str());
    std::printf("verdict=%s max_margin=%s argmax_x=%s\n", verdict, num(margin).c_str(), num(at).c_str());
    return 0;
}

int cmd_phase(const Global& g, CLI::App& app, const std::vector<double>& nus, eplab_separatrix_options opts) {
    const fs::path dir = prepare_out(g, app);
    opts.threads = g.threads;
    std::ostringstream eq;
    eq << "nu,e,v,kind,re1,im1,re2,im2\n";
    for (double nu : nus) {
        eplab_equilibrium buf[4];
        std::size_t count = 0;
        check(eplab_equilibria(nu, buf, 4, &count), "equilibria");
        for (std::size_t k = 0; k < count; ++k) {
            eq << num(nu) << ',' << num(buf[k].e) << ',' << num(buf[k].v) << ',' << buf[k].kind << ','
               << num(buf[k].re[0]) << ',' << num(buf[k].im[0]) << ',' << num(buf[k].re[1]) << ','
               << num(buf[k].im[1]) << '\n';
            std::printf("nu=%s equilibrium (e=%s, v=%s) %s\n", num(nu).c_str(), num(buf[k].e).c_str(),
                        num(buf[k].v).c_str(), buf[k].kind);
        }
        std::size_t n = 0;
        eplab_status st = eplab_separatrix(nu, &opts, nullptr, nullptr, 0, &n);
        if (st != EPLAB_BUFFER_TOO_SMALL) check(st, "separatrix");
        std::vector<double> e(n), v(n);
        check(eplab_separatrix(nu, &opts, e.data(), v.data(), n, &n), "separatrix");
        std::ostringstream poly;
        poly << "e,v\n";
        for (std::size_t k = 0; k < n; ++k) poly << num(e[k]) << ',' << num(v[k]) << '\n';
        write_file(dir / ("separatrix_nu" + num(nu) + ".csv"), poly.str());
        std::printf("nu=%s boundary points=%zu\n", num(nu).c_str(), n);
    }
    write_file(dir / "equilibria.csv", eq.str());
    return 0;
}

struct CharArgs {
    double nu = 0.0;
    std::array<double, 5> state{0.0, 0.0, 0.0, 0.0, 0.0};
    double t_end = 100.0;
    eplab_integrator_options integ{};
    bool sweep = false;
    double lo = -2.0, hi = 2.0, band = 1e-2;
    int points = 101;
};

int cmd_characteristics(const Global& g, CLI::App& app, CharArgs& c) {
    const fs::path dir = prepare_out(g, app);
    if (c.sweep) {
        std::size_t blowups = 0, mismatches = 0;
        check(eplab_sweep(c.nu, c.lo, c.hi, c.points, c.t_end, c.band, &c.integ, g.threads,
                          (dir / "sweep.csv").string().c_str(), &blowups, &mismatches),
              "sweep");
        std::printf("points=%d blowups=%zu mismatches=%zu\n", c.points * c.points, blowups, mismatches);
        return 0;
    }
    eplab_trajectory_summary s{};
    check(eplab_characteristic(c.nu, c.state.data(), c.t_end, &c.integ, (dir / "trajectory.csv").string().c_str(), &s),
          "characteristic");
    std::printf("blew_up=%d t_star=%s witness=%s t=%s v=%s e=%s\n", s.blew_up, num(s.t_star).c_str(), s.witness,
                num(s.t).c_str(), num(s.v).c_str(), num(s.e).c_str());
    return 0;
}

struct SolveExtras {
    bool json = false;
    bool periodicity = false;
    bool cole_hopf = false;
    bool reconcile = false;
    double band = 1e-2;
    std::string run_id = "run";
};

int cmd_solve(const Global& g, CLI::App& app, PresetArgs& pa, SolverArgs& sa, GridArgs& grid, SolveExtras& x) {
    const fs::path dir = prepare_out(g, app);
    Handle<eplab_init> init(eplab_init_free);
    init.p = pa.make();
    const eplab_solver_config cfg = sa.finish(grid, g.threads);
    if (x.reconcile) {
        int agree = 0, failed = 0;
        check(eplab_reconcile(init.p, &cfg, x.band, (dir / "reconcile.json").string().c_str(),
                              (dir / "reconcile.txt").string().c_str(), &agree, &failed),
              "reconcile");
        std::printf("agree=%d failed=%d\n", agree, failed);
        return failed ? 1 : 0;
    }
    Handle<eplab_run> run(eplab_run_free);
    check(eplab_solve(init.p, &cfg, &run.p), "solve");
    check(eplab_run_write(run.p, dir.string().c_str(), x.run_id.c_str(), x.json), "write");
    eplab_run_summary s{};
    check(eplab_run_get_summary(run.p, &s), "summary");
    std::ostringstream summary;
    summary << "blew_up=" << s.blew_up << "\nt_star=" << num(s.t_star) << "\ntrigger=" << s.trigger
            << "\nwitness=" << s.witness << "\nsteps=" << s.steps << "\nt_final=" << num(s.t_final)
            << "\nsnapshots=" << s.snapshots << '\n';
    // Kept on disk even if a diagnostic below fails.
    write_file(dir / "summary.txt", summary.str());
    if (x.periodicity) {
        double defect = 0.0, budget = 0.0;
        check(eplab_run_periodicity(run.p, &defect, &budget), "periodicity");
        summary << "periodicity_defect=" << num(defect) << "\nperiodicity_budget=" << num(budget) << '\n';
    }
    if (x.cole_hopf) {
        double worst = 0.0;
        check(eplab_run_cole_hopf(run.p, cfg.mu, 0.0, (dir / "cole_hopf.csv").string().c_str(), &worst), "cole-hopf");
        summary << "cole_hopf_max=" << num(worst) << '\n';
    }
    write_file(dir / "summary.txt", summary.str());
    std::fputs(summary.str().c_str(), stdout);
    return 0;
}

struct StochArgs {
    double sigma = 0.1;
    std::size_t n = 100000;
    std::uint64_t seed = 1;
    std::string f0 = "uniform";
    double f0_p1 = -6.0, f0_p2 = 6.0;
    double t_end = 3.141592653589793;
    double dt = 0.01;
    double output_dt = 0.0;
    double bandwidth = 0.0;
    bool checkpoint = false;
    std::string resume;
    std::vector<double> sigmas;
    std::vector<double> times;
};

int cmd_stochastic(const Global& g, CLI::App& app, PresetArgs& pa, GridArgs& grid, StochArgs& s) {
    const fs::path dir = prepare_out(g, app);
    Handle<eplab_init> init(eplab_init_free);
    init.p = pa.make();
    if (!s.sigmas.empty()) {
        if (s.times.empty()) s.times.push_back(s.t_end);
        if (s.f0 != "uniform") throw Failure{2, "convergence study supports uniform f0 only"};
        check(eplab_convergence(init.p, s.sigmas.data(), s.sigmas.size(), s.n, s.times.data(), s.times.size(), s.f0_p1,
                                s.f0_p2, s.dt, s.seed, grid.x_min, grid.x_max, grid.cells, g.threads,
                                (dir / "convergence.csv").string().c_str()),
              "convergence");
        std::printf("wrote %s\n", (dir / "convergence.csv").string().c_str());
        return 0;
    }
    Handle<eplab_ensemble> ens(eplab_ensemble_free);
    if (!s.resume.empty()) check(eplab_ensemble_load(s.resume.c_str(), &ens.p), "resume");
    else check(eplab_ensemble_create(init.p, s.f0.c_str(), s.f0_p1, s.f0_p2, s.n, s.sigma, s.seed, g.threads, &ens.p),
               "ensemble");
    const std::string moments = (dir / "moments.csv").string();
    std::error_code ec;
    fs::remove(moments, ec);
    double t = 0.0, mass = 0.0, max_rho = 0.0;
    check(eplab_ensemble_info(ens.p, nullptr, &t, nullptr, nullptr), "info");
    auto emit = [&] {
        check(eplab_ensemble_moments(ens.p, grid.x_min, grid.x_max, grid.cells, s.bandwidth, g.threads, moments.c_str(),
                                     1, &mass, &max_rho),
              "moments");
        check(eplab_ensemble_info(ens.p, nullptr, &t, nullptr, nullptr), "info");
        if (g.verbose) std::printf("t=%s mass=%s max_rho=%s\n", num(t).c_str(), num(mass).c_str(), num(max_rho).c_str());
    };
    emit();
    if (s.output_dt > 0.0) {
        while (true) {
            const double next = std::min(s.t_end, t + s.output_dt);
            if (next <= t) break;
            check(eplab_ensemble_advance(ens.p, next, s.dt, g.threads), "advance");
            emit();
            if (next >= s.t_end) break;
        }
    } else if (t < s.t_end) {
        check(eplab_ensemble_advance(ens.p, s.t_end, s.dt, g.threads), "advance");
        emit();
    }
    if (s.checkpoint) check(eplab_ensemble_save(ens.p, (dir / "ensemble.bin").string().c_str()), "checkpoint");
    std::printf("t=%s mass=%s max_rho=%s\n", num(t).c_str(), num(mass).c_str(), num(max_rho).c_str());
    return 0;
}

void print_line(int, int, const char* line, void*) {
    std::printf("%s\n", line);
    std::fflush(stdout);
}

int cmd_verify(const Global& g, CLI::App& app, const std::string& suite) {
    const fs::path dir = prepare_out(g, app);
    int failures = 0;
    check(eplab_verify(suite.c_str(), g.threads, dir.string().c_str(), print_line, nullptr, &failures), "verify");
    std::printf("%s: %d failing\n", suite.c_str(), failures);
    return failures ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cold-plasma Euler-Poisson experiments: criteria, phase portraits, solvers, stochastic moments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Read options from a key/value file with [subcommand] sections");
    Global g;
    app.add_option("--out", g.out, "Output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u))
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "More console output");

    // criterion
    auto* crit = app.add_subcommand("criterion", "Pointwise blow-up criterion table and verdict");
    PresetArgs crit_preset;
    GridArgs crit_grid;
    double crit_alpha = 0.0, crit_gamma = 2.0, crit_e0p = 0.0;
    std::optional<double> crit_v0, crit_e0;
    crit_preset.add(crit);
    crit_grid.add(crit);
    crit->add_option("--alpha", crit_alpha, "Pressure coefficient (0: plain criterion)")->capture_default_str();
    crit->add_option("--gamma", crit_gamma, "Pressure exponent")->capture_default_str();
    crit->add_option("--v0", crit_v0, "Point mode: V_x at the point");
    crit->add_option("--e0", crit_e0, "Point mode: E_x at the point");
    crit->add_option("--e0p", crit_e0p, "Point mode: E_xx at the point")->capture_default_str();

    // phase
    auto* phase = app.add_subcommand("phase", "Equilibria and smoothness boundary of the friction phase plane");
    std::vector<double> phase_nu{0.0};
    eplab_separatrix_options sep{};
    eplab_separatrix_defaults(&sep);
    phase->add_option("--nu", phase_nu, "Friction values")->capture_default_str();
    phase->add_option("--e-min", sep.e_min)->capture_default_str();
    phase->add_option("--e-max", sep.e_max)->capture_default_str();
    phase->add_option("--v-min", sep.v_min)->capture_default_str();
    phase->add_option("--v-max", sep.v_max)->capture_default_str();
    phase->add_option("--rays", sep.rays, "Bisection rays")->capture_default_str();
    phase->add_option("--tolerance", sep.tolerance, "Bisection tolerance")->capture_default_str();
    phase->add_option("--horizon", sep.horizon, "Membership horizon")->capture_default_str();

    // characteristics
    auto* chars = app.add_subcommand("characteristics", "One characteristic, or a (v0, e0) sweep");
    CharArgs ca;
    eplab_integrator_defaults(&ca.integ);
    chars->add_option("--nu", ca.nu, "Constant friction")->capture_default_str();
    chars->add_option("--x", ca.state[0])->capture_default_str();
    chars->add_option("--V", ca.state[1])->capture_default_str();
    chars->add_option("--E", ca.state[2])->capture_default_str();
    chars->add_option("--v", ca.state[3], "V_x at t=0")->capture_default_str();
    chars->add_option("--e", ca.state[4], "E_x at t=0")->capture_default_str();
    chars->add_option("--t-end", ca.t_end)->capture_default_str();
    chars->add_option("--rtol", ca.integ.rtol)->capture_default_str();
    chars->add_option("--atol", ca.integ.atol)->capture_default_str();
    chars->add_option("--sample-dt", ca.integ.sample_dt, "0 records every step")->capture_default_str();
    chars->add_option("--blowup-threshold", ca.integ.blowup_threshold)->capture_default_str();
    chars->add_flag("--sweep", ca.sweep, "Sweep a (v0, e0) grid instead");
    chars->add_option("--lo", ca.lo)->capture_default_str();
    chars->add_option("--hi", ca.hi)->capture_default_str();
    chars->add_option("--points", ca.points, "Points per axis")->capture_default_str();
    chars->add_option("--band", ca.band, "Criterion band excluded from mismatch counts")->capture_default_str();

    // solve
    auto* solve = app.add_subcommand("solve", "Eulerian run with optional regularizers");
    PresetArgs solve_preset;
    SolverArgs solve_args;
    GridArgs solve_grid;
    SolveExtras extras;
    solve_preset.add(solve);
    solve_args.add(solve, solve_grid);
    solve->add_option("--run-id", extras.run_id, "Prefix of snapshot files")->capture_default_str();
    solve->add_flag("--json", extras.json, "One JSON document instead of CSV snapshots");
    solve->add_flag("--periodicity", extras.periodicity, "Report the defect at t = 2 pi");
    solve->add_flag("--cole-hopf", extras.cole_hopf, "Report the Cole-Hopf residual (viscous runs)");
    solve->add_flag("--reconcile", extras.reconcile, "Compare the pointwise criterion with the solver verdict");
    solve->add_option("--band", extras.band, "Criterion boundary band")->capture_default_str();

    // stochastic
    auto* stoch = app.add_subcommand("stochastic", "Particle ensemble with noise and kernel moment fields");
    PresetArgs stoch_preset;
    GridArgs stoch_grid;
    stoch_grid.cells = 512;
    StochArgs sa;
    stoch_preset.add(stoch);
    stoch_grid.add(stoch);
    stoch->add_option("--sigma", sa.sigma, "Noise intensity (> 0)")->capture_default_str();
    stoch->add_option("--n", sa.n, "Particles (>= 1000)")->capture_default_str();
    stoch->add_option("--seed", sa.seed)->capture_default_str();
    stoch->add_option("--f0", sa.f0, "Spatial law: uniform [p1, p2] or gaussian (mean p1, sd p2)")
        ->check(CLI::IsMember({"uniform", "gaussian"}))
        ->capture_default_str();
    stoch->add_option("--f0-p1", sa.f0_p1)->capture_default_str();
    stoch->add_option("--f0-p2", sa.f0_p2)->capture_default_str();
    stoch->add_option("--t-end", sa.t_end)->default_str("3.141592653589793");
    stoch->add_option("--dt", sa.dt)->capture_default_str();
    stoch->add_option("--output-dt", sa.output_dt, "Moment output spacing (0: start and end)")->capture_default_str();
    stoch->add_option("--bandwidth", sa.bandwidth, "Kernel bandwidth (0: Silverman)")->capture_default_str();
    stoch->add_flag("--checkpoint", sa.checkpoint, "Write ensemble.bin at the end");
    stoch->add_option("--resume", sa.resume, "Continue from a checkpoint");
    stoch->add_option("--sigmas", sa.sigmas, "Run a convergence study over these sigmas");
    stoch->add_option("--times", sa.times, "Checkpoint times for the convergence study");

    // verify
    auto* verify = app.add_subcommand("verify", "Acceptance suites with a pass/fail line per criterion");
    std::string suite = "all";
    verify->add_option("--suite", suite, "all, criterion, friction, pressure, viscosity, stochastic, or 1..10")
        ->capture_default_str();

    for (CLI::App* sub : {crit, phase, chars, solve, stoch, verify}) sub->configurable();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*crit) return cmd_criterion(g, app, crit_preset, crit_grid, crit_alpha, crit_gamma, crit_v0, crit_e0, crit_e0p);
        if (*phase) {
            for (double nu : phase_nu)
                if (!(nu >= 0.0)) throw Failure{2, "--nu must be non-negative"};
            return cmd_phase(g, app, phase_nu, sep);
        }
        if (*chars) return cmd_characteristics(g, app, ca);
        if (*solve) return cmd_solve(g, app, solve_preset, solve_args, solve_grid, extras);
        if (*stoch) return cmd_stochastic(g, app, stoch_preset, stoch_grid, sa);
        if (*verify) return cmd_verify(g, app, suite);
    } catch (const Failure& f) {
        std::fprintf(stderr, "error: %s\n", f.message.c_str());
        return f.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
