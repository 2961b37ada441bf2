#include "eplab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eplab/parallel.hpp"

namespace eplab {

Advection parse_advection(std::string_view name) {
    if (name == "upwind") return Advection::Upwind;
    if (name == "central") return Advection::Central;
    fail(ErrorCode::InvalidArgument, "unknown advection scheme '" + std::string(name) + "'");
}

std::string_view advection_name(Advection a) { return a == Advection::Upwind ? "upwind" : "central"; }

namespace {

inline std::size_t wrap_dec(std::size_t i, std::size_t n) { return i == 0 ? n - 1 : i - 1; }
inline std::size_t wrap_inc(std::size_t i, std::size_t n) { return i + 1 == n ? 0 : i + 1; }

SeriesPoint monitor(const FieldState& s, double h) {
    const std::size_t n = s.V.size();
    const double* V = s.V.data();
    const double* E = s.E.data();
    const double inv_2h = 0.5 / h;
    auto node = [&](std::size_t i) { return 1.0 - (E[wrap_inc(i, n)] - E[wrap_dec(i, n)]) * inv_2h; };
    SeriesPoint p;
    p.t = s.t;
    p.min_n = std::numeric_limits<double>::infinity();
    p.max_n = -std::numeric_limits<double>::infinity();
    p.min_vx_over_n = std::numeric_limits<double>::infinity();
    double n_prev = node(n - 1), n_here = node(0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = wrap_inc(i, n), im = wrap_dec(i, n);
        const double n_next = node(ip);
        const double vx = (V[ip] - V[im]) * inv_2h;
        p.max_vx = std::max(p.max_vx, std::abs(vx));
        p.max_ex = std::max(p.max_ex, std::abs((E[ip] - E[im]) * inv_2h));
        p.max_nx = std::max(p.max_nx, std::abs((n_next - n_prev) * inv_2h));
        p.max_de = std::max(p.max_de, std::abs(E[ip] - E[i]));
        p.min_n = std::min(p.min_n, n_here);
        p.max_n = std::max(p.max_n, n_here);
        if (n_here > 0.0) p.min_vx_over_n = std::min(p.min_vx_over_n, vx / n_here);
        n_prev = n_here;
        n_here = n_next;
    }
    if (!std::isfinite(p.min_vx_over_n)) p.min_vx_over_n = 0.0;
    return p;
}

// Largest one-cell jump of f relative to the largest range f has had so far.
struct Steepness {
    double range_max = 0.0;

    double operator()(const Field& f) {
        const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
        range_max = std::max(range_max, *hi - *lo);
        if (!(range_max > 1e-12)) return 0.0;
        double jump = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) jump = std::max(jump, std::abs(f[wrap_inc(i, f.size())] - f[i]));
        return jump / range_max;
    }
};

bool finite(const FieldState& s) {
    for (double v : s.V)
        if (!std::isfinite(v)) return false;
    for (double e : s.E)
        if (!std::isfinite(e)) return false;
    return true;
}

}  // namespace

namespace {

void eval_rhs_general(const double* V, const double* E, std::size_t n, const RegularizerSpec& reg, double h,
              Advection advection, double filter, double* out_v, double* out_e) {
    const double inv_h = 1.0 / h, inv_2h = 0.5 / h, inv_h2 = 1.0 / (h * h);
    const bool pressure = reg.alpha > 0.0;
    const bool face_needed = pressure || reg.exotic_viscosity;
    const bool density_friction = reg.nu_density.has_value();
    const bool linear_viscosity = reg.mu > 0.0 && !reg.exotic_viscosity;
    const bool exotic = reg.mu > 0.0 && reg.exotic_viscosity;

    double speed = 1.0;
    for (std::size_t i = 0; i < n; ++i) speed = std::max(speed, std::abs(V[i]) + 1.0);
    const double damp = filter * speed * inv_h;

    auto cell = [&](std::size_t i, std::size_t ip, std::size_t im, std::size_t ipp, std::size_t imm) {
        double adv_v, adv_e;
        if (advection == Advection::Upwind) {
            if (V[i] > 0.0) {
                adv_v = (V[i] - V[im]) * inv_h;
                adv_e = (E[i] - E[im]) * inv_h;
            } else {
                adv_v = (V[ip] - V[i]) * inv_h;
                adv_e = (E[ip] - E[i]) * inv_h;
            }
        } else {
            adv_v = (V[ip] - V[im]) * inv_2h;
            adv_e = (E[ip] - E[im]) * inv_2h;
        }
        double dv = -V[i] * adv_v - E[i];
        double de = -V[i] * adv_e + V[i];

        if (advection == Advection::Central && filter > 0.0) {
            dv -= damp * (V[imm] - 4.0 * V[im] + 6.0 * V[i] - 4.0 * V[ip] + V[ipp]);
            de -= damp * (E[imm] - 4.0 * E[im] + 6.0 * E[i] - 4.0 * E[ip] + E[ipp]);
        }

        double node = 1.0, face_p = 1.0, face_m = 1.0;
        if (density_friction || face_needed) {
            node = 1.0 - (E[ip] - E[im]) * inv_2h;
            face_p = 1.0 - (E[ip] - E[i]) * inv_h;
            face_m = 1.0 - (E[i] - E[im]) * inv_h;
            if (!(node > 0.0) || (face_needed && !(face_p > 0.0 && face_m > 0.0)))
                fail(ErrorCode::DensityBreakdown, "rhs: non-positive density in cell " + std::to_string(i));
        }
        double nu = reg.nu_const;
        if (density_friction) nu += reg.nu_density->nu0 * std::pow(node, reg.nu_density->gamma);
        if (nu != 0.0) dv -= nu * V[i];

        const double exx = (E[ip] - 2.0 * E[i] + E[im]) * inv_h2;
        if (pressure) {
            // (1/n) d/dx (n^g / g) = n^(g-2) n_x, with n_x from face densities.
            const double nx = (face_p - face_m) * inv_h;
            const double w = reg.gamma_p == 2.0 ? 1.0 : std::pow(node, reg.gamma_p - 2.0);
            dv -= reg.alpha * w * nx;
        }
        if (reg.b12 != 0.0) dv += reg.b12 * exx;
        if (linear_viscosity) dv += reg.mu * (V[ip] - 2.0 * V[i] + V[im]) * inv_h2;
        if (exotic) {
            const double qp = (V[ip] - V[i]) * inv_h / face_p;
            const double qm = (V[i] - V[im]) * inv_h / face_m;
            dv += reg.mu * (qp - qm) * inv_h;
        }
        if (reg.kappa > 0.0) de += reg.kappa * exx;

        out_v[i] = dv;
        out_e[i] = de;
    };
    // Periodic wrap only at the two ends.
    for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1})
        cell(i, wrap_inc(i, n), wrap_dec(i, n), wrap_inc(wrap_inc(i, n), n), wrap_dec(wrap_dec(i, n), n));
    for (std::size_t i = 2; i + 2 < n; ++i) cell(i, i + 1, i - 1, i + 2, i - 2);
}


// Constant-coefficient terms only: no density enters, so the loop is branch free.
template <bool Upwind>
void eval_rhs_linear(const double* V, const double* E, std::size_t n, const RegularizerSpec& reg, double h,
                     double filter, double* out_v, double* out_e) {
    const double inv_h = 1.0 / h, inv_2h = 0.5 / h, inv_h2 = 1.0 / (h * h);
    const double nu = reg.nu_const, mu = reg.mu, kappa = reg.kappa, b12 = reg.b12;
    double speed = 1.0;
    for (std::size_t i = 0; i < n; ++i) speed = std::max(speed, std::abs(V[i]) + 1.0);
    const double damp = Upwind ? 0.0 : filter * speed * inv_h;
    auto cell = [&](std::size_t i, std::size_t ip, std::size_t im, std::size_t ipp, std::size_t imm) {
        double adv_v, adv_e;
        if constexpr (Upwind) {
            const bool pos = V[i] > 0.0;
            adv_v = (pos ? V[i] - V[im] : V[ip] - V[i]) * inv_h;
            adv_e = (pos ? E[i] - E[im] : E[ip] - E[i]) * inv_h;
        } else {
            adv_v = (V[ip] - V[im]) * inv_2h;
            adv_e = (E[ip] - E[im]) * inv_2h;
        }
        const double vxx = (V[ip] - 2.0 * V[i] + V[im]) * inv_h2;
        const double exx = (E[ip] - 2.0 * E[i] + E[im]) * inv_h2;
        double dv = -V[i] * adv_v - E[i] - nu * V[i] + mu * vxx + b12 * exx;
        double de = -V[i] * adv_e + V[i] + kappa * exx;
        if constexpr (!Upwind) {
            dv -= damp * (V[imm] - 4.0 * V[im] + 6.0 * V[i] - 4.0 * V[ip] + V[ipp]);
            de -= damp * (E[imm] - 4.0 * E[im] + 6.0 * E[i] - 4.0 * E[ip] + E[ipp]);
        }
        out_v[i] = dv;
        out_e[i] = de;
    };
    for (std::size_t i : {std::size_t{0}, std::size_t{1}, n - 2, n - 1})
        cell(i, wrap_inc(i, n), wrap_dec(i, n), wrap_inc(wrap_inc(i, n), n), wrap_dec(wrap_dec(i, n), n));
    for (std::size_t i = 2; i + 2 < n; ++i) cell(i, i + 1, i - 1, i + 2, i - 2);
}

void eval_rhs(const double* V, const double* E, std::size_t n, const RegularizerSpec& reg, double h,
              Advection advection, double filter, double* out_v, double* out_e) {
    const bool linear = reg.alpha == 0.0 && !reg.exotic_viscosity && !reg.nu_density.has_value();
    if (!linear) return eval_rhs_general(V, E, n, reg, h, advection, filter, out_v, out_e);
    if (advection == Advection::Upwind) eval_rhs_linear<true>(V, E, n, reg, h, filter, out_v, out_e);
    else eval_rhs_linear<false>(V, E, n, reg, h, filter, out_v, out_e);
}

}  // namespace

Rates rhs(const FieldState& state, const RegularizerSpec& reg, const Grid1D& grid, Advection advection,
          double filter) {
    const std::size_t n = grid.size();
    require(state.V.size() == n && state.E.size() == n, "rhs: field length does not match grid");
    Rates r{Field(n), Field(n)};
    eval_rhs(state.V.data(), state.E.data(), n, reg, grid.spacing(), advection, filter, r.dV.data(), r.dE.data());
    return r;
}

double stable_step(const FieldState& s, const SolverConfig& cfg) {
    const double h = cfg.grid.spacing();
    const auto& reg = cfg.reg;
    const std::size_t n = s.V.size();
    double vmax = 0.0;
    for (double v : s.V) vmax = std::max(vmax, std::abs(v));
    double n_max = 1.0, n_min = 1.0, nu_max = std::abs(reg.nu_const);
    if (reg.alpha > 0.0 || reg.exotic_viscosity || reg.nu_density) {
        n_max = 0.0;
        n_min = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t ip = wrap_inc(i, n), im = wrap_dec(i, n);
            const double node = 1.0 - (s.E[ip] - s.E[im]) / (2.0 * h);
            const double face = 1.0 - (s.E[ip] - s.E[i]) / h;
            n_max = std::max(n_max, node);
            n_min = std::min({n_min, node, face});
            nu_max = std::max(nu_max, std::abs(reg.friction(std::max(node, 0.0))));
        }
    }
    // Pressure is a wave term: E_tt = alpha n^(g-1) E_xx, sound speed sqrt(alpha n^(g-1)).
    double speed = vmax + 1.0;
    if (reg.alpha > 0.0) speed += 2.0 * std::sqrt(reg.alpha * std::pow(std::max(n_max, 1e-300), reg.gamma_p - 1.0));
    double dt = cfg.cfl * h / speed;
    double diff = std::max({reg.kappa, reg.exotic_viscosity ? 0.0 : reg.mu, std::abs(reg.b12)});
    if (reg.exotic_viscosity && reg.mu > 0.0) diff = std::max(diff, reg.mu / std::max(n_min, 1e-12));
    if (diff > 0.0) dt = std::min(dt, cfg.cfl * h * h / (2.0 * diff));
    if (nu_max > 0.0) dt = std::min(dt, 2.5 * cfg.cfl / nu_max);
    return dt;
}

RunResult solve(const InitialData& init, const SolverConfig& cfg) {
    const double edge = init.edge_magnitude(cfg.grid);
    require(edge <= 1e-10, "solve: initial data does not decay at the window edge (" + std::to_string(edge) + ")");
    return solve(init.sample(cfg.grid), cfg);
}

RunResult solve(const FieldState& init, const SolverConfig& cfg) {
    require(cfg.cfl > 0.0 && cfg.cfl < 1.0, "solve: cfl must lie in (0, 1)");
    require(cfg.t_end > init.t, "solve: t_end must exceed the initial time");
    require(cfg.output_dt >= 0.0, "solve: output_dt must be non-negative");
    cfg.reg.validate();
    const Grid1D& grid = cfg.grid;
    const std::size_t n = grid.size();
    require(init.V.size() == n && init.E.size() == n, "solve: initial state does not match grid");
    if (!finite(init)) throw BreakdownError("solve: initial state is not finite", init);

    const double h = grid.spacing();
    const auto& th = cfg.thresholds;
    RunResult out;
    out.grid = grid;
    out.reg = cfg.reg;

    FieldState s = init;
    out.snapshots.push_back(s);
    out.series.push_back(monitor(s, h));
    const double vx_limit = th.vx_factor * (out.series.front().max_vx + 1.0);

    Steepness steep_v, steep_e;
    // Coarse grids resolve smooth data with large one-cell jumps already.
    const double steep_limit = std::max(th.steepness, 3.0 * std::max(steep_v(s.V), steep_e(s.E)));
    auto check = [&](const SeriesPoint& p, const FieldState& st) -> std::string {
        if (p.max_vx > vx_limit) return "V_x";
        if (p.min_n < th.min_density) return "n_min";
        if (p.max_n > th.max_density) return "n_max";
        if (cfg.reg.exotic_viscosity && p.min_vx_over_n < -th.exotic) return "V_x/n";
        const double sv = steep_v(st.V), se = steep_e(st.E);
        if (std::max(sv, se) > steep_limit) return "steepness";
        return {};
    };

    const double t_end = cfg.t_end;
    double next_out = cfg.output_dt > 0.0 ? std::min(init.t + cfg.output_dt, t_end) : t_end;
    long out_index = 1;
    Field kv[4], ke[4], tv(n), te(n);
    for (int j = 0; j < 4; ++j) {
        kv[j].resize(n);
        ke[j].resize(n);
    }
    auto eval = [&](const double* V, const double* E, int j) {
        eval_rhs(V, E, n, cfg.reg, h, cfg.advection, cfg.filter, kv[j].data(), ke[j].data());
    };
    auto stage = [&](int from, double c, int j) {
        for (std::size_t i = 0; i < n; ++i) {
            tv[i] = s.V[i] + c * kv[from][i];
            te[i] = s.E[i] + c * ke[from][i];
        }
        eval(tv.data(), te.data(), j);
    };

    FieldState next;
    next.V.resize(n);
    next.E.resize(n);
    while (s.t < t_end) {
        if (out.steps >= cfg.max_steps) throw BreakdownError("solve: step budget exhausted", s);
        double dt = stable_step(s, cfg);
        bool hit = false;
        if (s.t + dt >= next_out - 1e-12 * std::max(1.0, next_out)) {
            dt = next_out - s.t;
            hit = true;
        }
        try {
            eval(s.V.data(), s.E.data(), 0);
            stage(0, 0.5 * dt, 1);
            stage(1, 0.5 * dt, 2);
            stage(2, dt, 3);
            next.t = hit ? next_out : s.t + dt;
            const double w = dt / 6.0;
            for (std::size_t i = 0; i < n; ++i) {
                next.V[i] = s.V[i] + w * (kv[0][i] + 2.0 * kv[1][i] + 2.0 * kv[2][i] + kv[3][i]);
                next.E[i] = s.E[i] + w * (ke[0][i] + 2.0 * ke[1][i] + 2.0 * ke[2][i] + ke[3][i]);
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DensityBreakdown) throw;
            out.trigger = "n<=0";
            break;
        }
        if (!finite(next)) throw BreakdownError("solve: non-finite state at t=" + std::to_string(next.t), s);
        std::swap(s, next);
        ++out.steps;
        const SeriesPoint p = monitor(s, h);
        out.series.push_back(p);
        out.trigger = check(p, s);
        if (!out.trigger.empty()) break;
        if (hit) {
            out.snapshots.push_back(s);
            ++out_index;
            next_out = cfg.output_dt > 0.0 ? std::min(init.t + static_cast<double>(out_index) * cfg.output_dt, t_end)
                                            : t_end;
        }
    }

    if (out.snapshots.back().t != s.t) out.snapshots.push_back(s);
    if (!out.trigger.empty()) {
        out.report.blew_up = true;
        out.report.witness = out.trigger == "V_x" || out.trigger == "steepness" || out.trigger == "V_x/n"
                                 ? Witness::V
                                 : Witness::E;
        std::vector<double> ts, ws;
        for (const auto& p : out.series) {
            ts.push_back(p.t);
            ws.push_back(cfg.reg.exotic_viscosity && out.trigger == "V_x/n" ? p.min_vx_over_n : p.max_vx);
        }
        const double t_det = s.t;
        auto fit = fit_blowup_time(ts, ws);
        // The grid caps gradients, so a fit far past detection means the growth had already saturated.
        if (fit && std::abs(*fit - t_det) <= 0.1 * t_det) out.report.t_star = *fit;
        else out.report.t_star = t_det;
    }
    return out;
}

std::vector<ThresholdRow> check_density_friction_threshold(const InitialData& init, double nu0,
                                                           const std::vector<double>& gammas,
                                                           const SolverConfig& base) {
    require(nu0 > 0.0, "check_density_friction_threshold: nu0 must be positive");
    std::vector<ThresholdRow> rows(gammas.size());
    parallel_for(gammas.size(), base.threads, [&](std::size_t k) {
        ThresholdRow& row = rows[k];
        row.gamma = gammas[k];
        row.limit = gammas[k];
        row.integral_diverges = gammas[k] >= 1.0;
        row.admissible = std::isfinite(row.limit) && row.integral_diverges;
        SolverConfig cfg = base;
        cfg.reg = RegularizerSpec{};
        cfg.reg.nu_density = DensityFriction{nu0, gammas[k]};
        cfg.output_dt = 0.0;
        cfg.threads = 1;
        const RunResult run = solve(init, cfg);
        row.blew_up = run.report.blew_up;
        row.t_star = run.report.t_star;
        row.trigger = run.trigger;
    });
    return rows;
}

std::string_view singularity_kind_name(SingularityKind k) {
    switch (k) {
        case SingularityKind::Bounded: return "bounded";
        case SingularityKind::Catastrophe: return "catastrophe";
        case SingularityKind::Strong: return "strong";
        case SingularityKind::Jump: return "jump";
        case SingularityKind::Weak: return "weak";
        case SingularityKind::Smooth: return "smooth";
    }
    return "?";
}

SingularityType classify_singularity(const InitialData& init, const SolverConfig& base, const RunResult& run,
                                     const std::vector<Grid1D>& refinements) {
    if (!run.report.blew_up) fail(ErrorCode::Precondition, "classify_singularity: run did not blow up");
    require(refinements.size() >= 2, "classify_singularity: need at least two refinements");

    SingularityType out;
    out.samples.resize(refinements.size());
    std::vector<int> blown(refinements.size(), 0);
    parallel_for(refinements.size(), base.threads, [&](std::size_t k) {
        SolverConfig cfg = base;
        cfg.grid = refinements[k];
        cfg.output_dt = 0.0;
        cfg.threads = 1;
        const RunResult r = solve(init, cfg);
        blown[k] = r.report.blew_up;
        const SeriesPoint& p = r.series.back();
        auto& smp = out.samples[k];
        smp.n_cells = refinements[k].n_cells();
        smp.t_detect = p.t;
        smp.t_star = r.report.t_star;
        smp.max_vx = p.max_vx;
        smp.max_nx = p.max_nx;
        smp.max_ex = p.max_ex;
        smp.max_n = p.max_n;
        smp.max_de = p.max_de;
    });
    std::sort(out.samples.begin(), out.samples.end(),
              [](const RefinementSample& a, const RefinementSample& b) { return a.n_cells < b.n_cells; });
    for (int b : blown)
        if (!b) fail(ErrorCode::Inconclusive, "classify_singularity: a refinement did not blow up");
    double t_lo = INFINITY, t_hi = 0.0;
    for (const auto& smp : out.samples) {
        t_lo = std::min(t_lo, *smp.t_star);
        t_hi = std::max(t_hi, *smp.t_star);
    }
    if (t_hi - t_lo > 0.2 * t_lo) fail(ErrorCode::Inconclusive, "classify_singularity: blow-up times disagree");

    const auto& c = out.samples.front();
    const auto& f = out.samples.back();
    const double ratio = static_cast<double>(f.n_cells) / c.n_cells;
    // Growing like h^-p with p >= 0.4 counts as unbounded.
    auto grows = [&](double coarse, double fine) { return fine > coarse * std::pow(ratio, 0.4); };
    auto vanishes = [&](double coarse, double fine) { return fine < coarse * std::pow(ratio, -0.4); };

    out.V = grows(c.max_vx, f.max_vx) ? SingularityKind::Catastrophe : SingularityKind::Bounded;
    if (grows(c.max_n, f.max_n)) out.n = SingularityKind::Strong;
    else if (grows(c.max_nx, f.max_nx)) out.n = SingularityKind::Catastrophe;
    else out.n = SingularityKind::Bounded;
    if (!vanishes(c.max_de, f.max_de)) out.E = SingularityKind::Jump;
    else if (grows(c.max_ex, f.max_ex)) out.E = SingularityKind::Catastrophe;
    else if (out.V != SingularityKind::Bounded || out.n != SingularityKind::Bounded) out.E = SingularityKind::Weak;
    else out.E = SingularityKind::Smooth;
    return out;
}

ExoticSeries exotic_viscosity_indicator(const RunResult& run, double threshold) {
    if (!run.reg.exotic_viscosity) fail(ErrorCode::Precondition, "exotic_viscosity_indicator: exotic viscosity is off");
    ExoticSeries out;
    const double h = run.grid.spacing();
    for (const auto& s : run.snapshots) {
        out.t.push_back(s.t);
        out.min_vx_over_n.push_back(monitor(s, h).min_vx_over_n);
    }
    double lowest = 0.0;
    for (const auto& p : run.series) lowest = std::min(lowest, p.min_vx_over_n);
    out.blew_up = run.trigger == "V_x/n" || lowest < -threshold;
    if (out.blew_up) {
        std::vector<double> ts, ws;
        for (const auto& p : run.series) {
            ts.push_back(p.t);
            ws.push_back(p.min_vx_over_n);
        }
        out.t_star = fit_blowup_time(ts, ws);
        if (!out.t_star) out.t_star = run.series.back().t;
    }
    return out;
}

}  // namespace eplab
