#include "eplab/eplab.h"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <stdexcept>
#include <string>

#include "eplab/acceptance.hpp"
#include "eplab/characteristics.hpp"
#include "eplab/diagnostics.hpp"
#include "eplab/fields.hpp"
#include "eplab/io.hpp"
#include "eplab/stochastic.hpp"

struct eplab_init {
    eplab::InitialData data;
};

struct eplab_run {
    eplab::RunResult result;
};

struct eplab_ensemble {
    eplab::ParticleEnsemble ens;
};

namespace {

thread_local std::string g_last_error;

struct BufferTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};

template <class F>
eplab_status guard(F&& f) {
    try {
        f();
        g_last_error.clear();
        return EPLAB_OK;
    } catch (const BufferTooSmall& e) {
        g_last_error = e.what();
        return EPLAB_BUFFER_TOO_SMALL;
    } catch (const eplab::Error& e) {
        g_last_error = e.what();
        return static_cast<eplab_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return EPLAB_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return EPLAB_INTERNAL;
    }
}

void need(const void* p, const char* what) {
    if (!p) eplab::fail(eplab::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

template <std::size_t N>
void copy_name(char (&dst)[N], std::string_view src) {
    const std::size_t k = std::min(src.size(), N - 1);
    std::memcpy(dst, src.data(), k);
    dst[k] = '\0';
}

double opt_or_nan(const std::optional<double>& v) { return v ? *v : std::numeric_limits<double>::quiet_NaN(); }

eplab::IntegratorOptions integrator(const eplab_integrator_options* o) {
    eplab::IntegratorOptions out;
    if (!o) return out;
    out.rtol = o->rtol;
    out.atol = o->atol;
    out.min_step = o->min_step;
    out.max_step = o->max_step;
    out.blowup_threshold = o->blowup_threshold;
    out.sample_dt = o->sample_dt;
    return out;
}

eplab::SolverConfig solver_config(const eplab_solver_config* c) {
    need(c, "config");
    eplab::SolverConfig cfg;
    cfg.grid = eplab::Grid1D(c->x_min, c->x_max, c->n_cells);
    cfg.cfl = c->cfl;
    cfg.t_end = c->t_end;
    cfg.output_dt = c->output_dt;
    eplab::require(c->advection == 0 || c->advection == 1, "advection must be 0 (upwind) or 1 (central)");
    cfg.advection = c->advection ? eplab::Advection::Central : eplab::Advection::Upwind;
    cfg.filter = c->filter;
    cfg.reg.nu_const = c->nu;
    if (c->nu0 > 0.0) cfg.reg.nu_density = eplab::DensityFriction{c->nu0, c->nu_gamma};
    cfg.reg.alpha = c->alpha;
    cfg.reg.gamma_p = c->gamma_p;
    cfg.reg.mu = c->mu;
    cfg.reg.exotic_viscosity = c->exotic_viscosity != 0;
    cfg.reg.kappa = c->kappa;
    cfg.reg.b12 = c->b12;
    cfg.reg.allow_combinations = c->allow_combinations != 0;
    cfg.thresholds.vx_factor = c->vx_factor;
    cfg.thresholds.min_density = c->min_density;
    cfg.thresholds.max_density = c->max_density;
    cfg.thresholds.steepness = c->steepness;
    cfg.thresholds.exotic = c->exotic_threshold;
    cfg.max_steps = c->max_steps;
    cfg.threads = c->threads;
    return cfg;
}

}  // namespace

extern "C" {

const char* eplab_last_error(void) { return g_last_error.c_str(); }

const char* eplab_status_name(eplab_status status) {
    switch (status) {
        case EPLAB_OK: return "ok";
        case EPLAB_BUFFER_TOO_SMALL: return "buffer_too_small";
        case EPLAB_INTERNAL: return "internal";
        default: break;
    }
    if (status >= EPLAB_INVALID_ARGUMENT && status <= EPLAB_IO)
        return eplab::error_code_name(static_cast<eplab::ErrorCode>(static_cast<int>(status)));
    return "unknown";
}

eplab_status eplab_init_preset(const char* preset, double a, double s, double b, double sign, eplab_init** out) {
    return guard([&] {
        need(preset, "preset");
        need(out, "out");
        eplab::PresetParams p;
        p.a = a;
        p.s = s;
        p.b = b;
        p.sign = sign;
        const eplab::Preset kind = eplab::parse_preset(preset);
        eplab::require(kind != eplab::Preset::CustomTable, "use eplab_init_table for tabulated data");
        *out = new eplab_init{eplab::make_initial_data(kind, p)};
    });
}

eplab_status eplab_init_table(const double* x, const double* V, const double* E, size_t n, eplab_init** out) {
    return guard([&] {
        need(x, "x");
        need(V, "V");
        need(E, "E");
        need(out, "out");
        eplab::PresetParams p;
        p.table = eplab::SampleTable{{x, x + n}, {V, V + n}, {E, E + n}};
        *out = new eplab_init{eplab::make_initial_data(eplab::Preset::CustomTable, p)};
    });
}

void eplab_init_free(eplab_init* init) { delete init; }

eplab_status eplab_init_eval(const eplab_init* init, double x, double out[5]) {
    return guard([&] {
        need(init, "init");
        need(out, "out");
        const auto& d = init->data;
        out[0] = d.V0(x);
        out[1] = d.E0(x);
        out[2] = d.v0(x);
        out[3] = d.e0(x);
        out[4] = d.e0p(x);
    });
}

eplab_status eplab_criterion_point(double v0, double e0, double e0p, double alpha, double gamma, double* lhs,
                                   double* rhs) {
    return guard([&] {
        need(lhs, "lhs");
        need(rhs, "rhs");
        eplab::require(std::isfinite(v0) && std::isfinite(e0), "criterion: v0 and e0 must be finite");
        if (alpha > 0.0) {
            const eplab::DeltaP d = eplab::delta_p(v0, e0, e0p, alpha, gamma);
            *lhs = d.lhs;
            *rhs = d.rhs;
        } else {
            eplab::require(alpha == 0.0, "criterion: alpha must be non-negative");
            *lhs = eplab::delta(v0, e0);
            *rhs = 0.0;
        }
    });
}

eplab_status eplab_criterion_table(const eplab_init* init, double x_min, double x_max, int n_cells, double alpha,
                                   double gamma, const char* csv_path, int* blowup, double* max_margin,
                                   double* argmax_x) {
    return guard([&] {
        need(init, "init");
        const eplab::Grid1D grid(x_min, x_max, n_cells);
        const auto& d = init->data;
        eplab::Table t{{"x", "v0", "e0", "lhs", "rhs", "blowup"}, {}};
        double best = -INFINITY, at = x_min;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid.x(i);
            const double v0 = d.v0(x), e0 = d.e0(x);
            double lhs = eplab::delta(v0, e0), rhs = 0.0;
            if (alpha > 0.0) {
                const eplab::DeltaP p = eplab::delta_p(v0, e0, d.e0p(x), alpha, gamma);
                lhs = p.lhs;
                rhs = p.rhs;
            }
            if (lhs - rhs > best) {
                best = lhs - rhs;
                at = x;
            }
            t.add({eplab::format_number(x), eplab::format_number(v0), eplab::format_number(e0),
                   eplab::format_number(lhs), eplab::format_number(rhs), lhs >= rhs ? "1" : "0"});
        }
        if (csv_path) eplab::write_text(csv_path, t.csv());
        if (blowup) *blowup = best >= 0.0;
        if (max_margin) *max_margin = best;
        if (argmax_x) *argmax_x = at;
    });
}

eplab_status eplab_critical_amplitude(double alpha, double gamma, double lo, double hi, double* a_c) {
    return guard([&] {
        need(a_c, "a_c");
        *a_c = eplab::critical_amplitude(eplab::Preset::LaserPulse, {}, eplab::Grid1D(-10.0, 10.0, 20000), alpha, gamma,
                                         lo, hi);
    });
}

eplab_status eplab_equilibria(double nu, eplab_equilibrium* out, size_t cap, size_t* count) {
    return guard([&] {
        need(count, "count");
        const auto eq = eplab::classify_equilibria(nu);
        *count = eq.size();
        if (cap < eq.size()) throw BufferTooSmall("equilibria: buffer too small");
        need(out, "out");
        for (std::size_t k = 0; k < eq.size(); ++k) {
            out[k].e = eq[k].e;
            out[k].v = eq[k].v;
            for (int j = 0; j < 2; ++j) {
                out[k].re[j] = eq[k].eigenvalues[static_cast<std::size_t>(j)].real();
                out[k].im[j] = eq[k].eigenvalues[static_cast<std::size_t>(j)].imag();
            }
            copy_name(out[k].kind, eplab::equilibrium_kind_name(eq[k].kind));
        }
    });
}

void eplab_separatrix_defaults(eplab_separatrix_options* opts) {
    if (!opts) return;
    const eplab::SeparatrixOptions d;
    *opts = {d.e_min, d.e_max, d.v_min, d.v_max, d.rays, d.tolerance, d.membership.horizon, d.threads};
}

eplab_status eplab_separatrix(double nu, const eplab_separatrix_options* opts, double* e, double* v, size_t cap,
                              size_t* count) {
    eplab_status st = guard([&] {
        need(count, "count");
        eplab::SeparatrixOptions o;
        if (opts) {
            o.e_min = opts->e_min;
            o.e_max = opts->e_max;
            o.v_min = opts->v_min;
            o.v_max = opts->v_max;
            o.rays = opts->rays;
            o.tolerance = opts->tolerance;
            o.membership.horizon = opts->horizon;
            o.threads = opts->threads;
        }
        const auto pts = eplab::trace_separatrix(nu, o);
        *count = pts.size();
        if (cap < pts.size()) throw BufferTooSmall("separatrix: buffer too small");
        need(e, "e");
        need(v, "v");
        for (std::size_t k = 0; k < pts.size(); ++k) {
            e[k] = pts[k].e;
            v[k] = pts[k].v;
        }
    });
    return st;
}

eplab_status eplab_membership(double nu, double v0, double e0, double horizon, int* smooth) {
    return guard([&] {
        need(smooth, "smooth");
        eplab::MembershipOptions o;
        o.horizon = horizon;
        *smooth = eplab::smoothness_membership(nu, v0, e0, o);
    });
}

void eplab_integrator_defaults(eplab_integrator_options* opts) {
    if (!opts) return;
    const eplab::IntegratorOptions d;
    *opts = {d.rtol, d.atol, d.min_step, d.max_step, d.blowup_threshold, d.sample_dt};
}

eplab_status eplab_characteristic(double nu, const double state[5], double t_end,
                                  const eplab_integrator_options* opts, const char* csv_path,
                                  eplab_trajectory_summary* out) {
    return guard([&] {
        need(state, "state");
        need(out, "out");
        eplab::CharState s;
        s.x = state[0];
        s.V = state[1];
        s.E = state[2];
        s.v = state[3];
        s.e = state[4];
        eplab::IntegratorOptions o = integrator(opts);
        if (csv_path && o.sample_dt <= 0.0) o.record_steps = true;
        const auto tr = eplab::integrate_characteristic(eplab::CharSystem{nu}, s, t_end, o);
        if (csv_path) {
            eplab::Table t{{"t", "x", "V", "E", "v", "e"}, {}};
            for (const auto& p : tr.samples)
                t.add({eplab::format_number(p.t), eplab::format_number(p.x), eplab::format_number(p.V),
                       eplab::format_number(p.E), eplab::format_number(p.v), eplab::format_number(p.e)});
            eplab::write_text(csv_path, t.csv());
        }
        out->blew_up = tr.report.blew_up;
        out->t_star = opt_or_nan(tr.report.t_star);
        copy_name(out->witness, eplab::witness_name(tr.report.witness));
        const auto& f = tr.final_state;
        out->t = f.t;
        out->x = f.x;
        out->V = f.V;
        out->E = f.E;
        out->v = f.v;
        out->e = f.e;
    });
}

eplab_status eplab_sweep(double nu, double lo, double hi, int points, double t_end, double band,
                         const eplab_integrator_options* opts, unsigned threads, const char* csv_path,
                         size_t* blowups, size_t* mismatches) {
    return guard([&] {
        const auto rows = eplab::criterion_sweep(eplab::CharSystem{nu}, lo, hi, points, t_end, integrator(opts), threads);
        if (csv_path) eplab::write_text(csv_path, eplab::sweep_table(rows).csv());
        std::size_t b = 0, m = 0;
        for (const auto& r : rows) {
            b += r.blew_up;
            if (nu == 0.0 && std::abs(r.delta) >= band && (r.delta < 0.0) == r.blew_up) ++m;
        }
        if (blowups) *blowups = b;
        if (mismatches) *mismatches = m;
    });
}

void eplab_solver_defaults(eplab_solver_config* c) {
    if (!c) return;
    const eplab::SolverConfig d;
    *c = {};
    c->x_min = d.grid.x_min();
    c->x_max = d.grid.x_max();
    c->n_cells = d.grid.n_cells();
    c->cfl = d.cfl;
    c->t_end = d.t_end;
    c->output_dt = d.output_dt;
    c->advection = 0;
    c->filter = d.filter;
    c->nu_gamma = 1.0;
    c->gamma_p = d.reg.gamma_p;
    c->vx_factor = d.thresholds.vx_factor;
    c->min_density = d.thresholds.min_density;
    c->max_density = d.thresholds.max_density;
    c->steepness = d.thresholds.steepness;
    c->exotic_threshold = d.thresholds.exotic;
    c->max_steps = d.max_steps;
    c->threads = d.threads;
}

eplab_status eplab_solve(const eplab_init* init, const eplab_solver_config* cfg, eplab_run** out) {
    return guard([&] {
        need(init, "init");
        need(out, "out");
        *out = new eplab_run{eplab::solve(init->data, solver_config(cfg))};
    });
}

void eplab_run_free(eplab_run* run) { delete run; }

eplab_status eplab_run_get_summary(const eplab_run* run, eplab_run_summary* out) {
    return guard([&] {
        need(run, "run");
        need(out, "out");
        const auto& r = run->result;
        out->blew_up = r.report.blew_up;
        out->t_star = opt_or_nan(r.report.t_star);
        copy_name(out->trigger, r.trigger);
        copy_name(out->witness, eplab::witness_name(r.report.witness));
        out->snapshots = r.snapshots.size();
        out->steps = r.steps;
        out->t_final = r.snapshots.empty() ? 0.0 : r.snapshots.back().t;
    });
}

eplab_status eplab_run_snapshot(const eplab_run* run, size_t k, double* t, double* V, double* E, size_t cap) {
    return guard([&] {
        need(run, "run");
        eplab::require(k < run->result.snapshots.size(), "snapshot index out of range");
        const auto& s = run->result.snapshots[k];
        if (cap < s.V.size()) throw BufferTooSmall("snapshot: buffer too small");
        if (t) *t = s.t;
        if (V) std::copy(s.V.begin(), s.V.end(), V);
        if (E) std::copy(s.E.begin(), s.E.end(), E);
    });
}

eplab_status eplab_run_write(const eplab_run* run, const char* dir, const char* run_id, int json) {
    return guard([&] {
        need(run, "run");
        need(dir, "dir");
        need(run_id, "run_id");
        const std::string base = std::string(dir) + "/" + run_id;
        if (json) {
            eplab::write_text(base + ".json", eplab::run_json(run->result));
        } else {
            eplab::write_snapshots(run->result, dir, run_id);
            eplab::write_text(base + "_series.csv", eplab::series_table(run->result.series).csv());
        }
    });
}

eplab_status eplab_run_periodicity(const eplab_run* run, double* defect, double* budget) {
    return guard([&] {
        need(run, "run");
        const double d = eplab::periodicity_check(run->result);
        if (defect) *defect = d;
        if (budget) *budget = eplab::periodicity_budget(run->result);
    });
}

eplab_status eplab_run_cole_hopf(const eplab_run* run, double mu, double psi_shift, const char* csv_path,
                                 double* max_residual) {
    return guard([&] {
        need(run, "run");
        const auto series = eplab::cole_hopf_residual(run->result, mu, psi_shift);
        if (csv_path) {
            eplab::Table t{{"t", "residual"}, {}};
            for (std::size_t k = 0; k < series.t.size(); ++k)
                t.add({eplab::format_number(series.t[k]), eplab::format_number(series.residual[k])});
            eplab::write_text(csv_path, t.csv());
        }
        if (max_residual) *max_residual = series.max();
    });
}

eplab_status eplab_reconcile(const eplab_init* init, const eplab_solver_config* cfg, double band,
                             const char* json_path, const char* text_path, int* agree, int* failed) {
    return guard([&] {
        need(init, "init");
        const auto rep = eplab::reconcile_criterion(init->data, solver_config(cfg), band);
        if (json_path) eplab::write_text(json_path, eplab::reconciliation_json(rep));
        if (text_path) eplab::write_text(text_path, eplab::reconciliation_table(rep).text());
        if (agree) *agree = rep.agree;
        if (failed) *failed = rep.failed();
    });
}

eplab_status eplab_ensemble_create(const eplab_init* init, const char* f0, double p1, double p2, size_t n,
                                   double sigma, uint64_t seed, unsigned threads, eplab_ensemble** out) {
    return guard([&] {
        need(init, "init");
        need(f0, "f0");
        need(out, "out");
        const std::string kind = f0;
        eplab::SpatialDensity d;
        if (kind == "uniform") d = eplab::SpatialDensity::uniform(p1, p2);
        else if (kind == "gaussian") d = eplab::SpatialDensity::gaussian(p1, p2);
        else eplab::fail(eplab::ErrorCode::InvalidArgument, "f0 must be 'uniform' or 'gaussian'");
        eplab::require(sigma > 0.0, "sigma must be positive");
        *out = new eplab_ensemble{eplab::init_ensemble(init->data, d, n, sigma, seed, threads)};
    });
}

eplab_status eplab_ensemble_load(const char* path, eplab_ensemble** out) {
    return guard([&] {
        need(path, "path");
        need(out, "out");
        *out = new eplab_ensemble{eplab::read_checkpoint(path)};
    });
}

void eplab_ensemble_free(eplab_ensemble* ens) { delete ens; }

eplab_status eplab_ensemble_advance(eplab_ensemble* ens, double t, double dt, unsigned threads) {
    return guard([&] {
        need(ens, "ensemble");
        eplab::advance_ensemble(ens->ens, t, dt, threads);
    });
}

eplab_status eplab_ensemble_info(const eplab_ensemble* ens, size_t* n, double* t, double* sigma, uint64_t* seed) {
    return guard([&] {
        need(ens, "ensemble");
        if (n) *n = ens->ens.size();
        if (t) *t = ens->ens.t;
        if (sigma) *sigma = ens->ens.sigma;
        if (seed) *seed = ens->ens.seed;
    });
}

eplab_status eplab_ensemble_save(const eplab_ensemble* ens, const char* path) {
    return guard([&] {
        need(ens, "ensemble");
        need(path, "path");
        eplab::write_checkpoint(ens->ens, path);
    });
}

eplab_status eplab_ensemble_moments(const eplab_ensemble* ens, double x_min, double x_max, int n_cells,
                                    double bandwidth, unsigned threads, const char* csv_path, int append,
                                    double* mass, double* max_rho) {
    return guard([&] {
        need(ens, "ensemble");
        std::optional<double> bw;
        if (bandwidth > 0.0) bw = bandwidth;
        const auto m = eplab::estimate_moments(ens->ens, eplab::Grid1D(x_min, x_max, n_cells), bw, threads);
        if (csv_path) {
            std::string body = eplab::moments_table(m).csv();
            if (append) {
                std::ofstream probe(csv_path, std::ios::binary | std::ios::app);
                if (!probe) eplab::fail(eplab::ErrorCode::Io, std::string("cannot open ") + csv_path);
                if (probe.tellp() > 0) body.erase(0, body.find('\n') + 1);
                probe << body;
                if (!probe) eplab::fail(eplab::ErrorCode::Io, std::string("write failed for ") + csv_path);
            } else {
                eplab::write_text(csv_path, body);
            }
        }
        if (mass) *mass = m.mass();
        if (max_rho) *max_rho = m.max_rho();
    });
}

eplab_status eplab_convergence(const eplab_init* init, const double* sigmas, size_t n_sigmas, size_t n,
                               const double* times, size_t n_times, double f0_lo, double f0_hi, double dt,
                               uint64_t seed, double x_min, double x_max, int n_cells, unsigned threads,
                               const char* csv_path) {
    return guard([&] {
        need(init, "init");
        need(sigmas, "sigmas");
        need(times, "times");
        eplab::ConvergenceOptions o;
        o.grid = eplab::Grid1D(x_min, x_max, n_cells);
        o.f0 = eplab::SpatialDensity::uniform(f0_lo, f0_hi);
        o.dt = dt;
        o.seed = seed;
        o.threads = threads;
        const auto rows = eplab::convergence_study(init->data, {sigmas, sigmas + n_sigmas}, n, {times, times + n_times}, o);
        eplab::Table t{{"sigma", "t", "err_V", "err_E", "floor_V", "floor_E", "corrected_V", "corrected_E",
                        "reference_valid", "finite", "max_rho", "max_abs_Vhat", "max_abs_Ehat"},
                       {}};
        using eplab::format_number;
        for (const auto& r : rows)
            t.add({format_number(r.sigma), format_number(r.t), format_number(r.err_V), format_number(r.err_E),
                   format_number(r.floor_V), format_number(r.floor_E), format_number(r.corrected_V()),
                   format_number(r.corrected_E()), r.reference_valid ? "1" : "0", r.finite ? "1" : "0",
                   format_number(r.max_rho), format_number(r.max_abs_Vhat), format_number(r.max_abs_Ehat)});
        if (csv_path) eplab::write_text(csv_path, t.csv());
    });
}

eplab_status eplab_verify(const char* suite, unsigned threads, const char* scratch, eplab_report_fn report,
                          void* user, int* failures) {
    return guard([&] {
        eplab::AcceptanceOptions o;
        o.threads = threads;
        if (scratch) o.scratch = scratch;
        const auto ids = eplab::acceptance_suite(suite ? suite : "all");
        int failed = 0;
        eplab::run_acceptance(ids, o, [&](const eplab::CriterionResult& r) {
            failed += !r.pass;
            if (report) report(r.id, r.pass, eplab::format_result(r).c_str(), user);
        });
        if (failures) *failures = failed;
    });
}

}  // extern "C"
