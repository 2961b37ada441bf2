#include "eplab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace eplab {

namespace {

// Trapezoid antiderivative from the first node.
Field antiderivative(const Field& f, double h) {
    Field out(f.size(), 0.0);
    for (std::size_t i = 1; i < f.size(); ++i) out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    return out;
}

double sup_diff(const FieldState& a, const FieldState& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.V.size(); ++i) m = std::max({m, std::abs(a.V[i] - b.V[i]), std::abs(a.E[i] - b.E[i])});
    return m;
}

}  // namespace

double ColeHopfSeries::max() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
}

ColeHopfSeries cole_hopf_residual(const RunResult& run, double mu, double psi_shift) {
    require(mu > 0.0, "cole_hopf_residual: mu must be positive");
    if (run.reg.mu != mu || run.reg.exotic_viscosity)
        fail(ErrorCode::Precondition, "cole_hopf_residual: run must use plain viscosity mu");
    RegularizerSpec rest = run.reg;
    rest.mu = 0.0;
    if (!rest.all_off()) fail(ErrorCode::Precondition, "cole_hopf_residual: run must have no regularizer besides mu");
    require(run.snapshots.size() >= 2, "cole_hopf_residual: need at least two snapshots");

    const double h = run.grid.spacing();
    const std::size_t n = run.grid.size();
    const double inv2mu = 1.0 / (2.0 * mu);
    ColeHopfSeries out;
    for (std::size_t k = 0; k + 1 < run.snapshots.size(); ++k) {
        const FieldState& s0 = run.snapshots[k];
        const FieldState& s1 = run.snapshots[k + 1];
        const double dt = s1.t - s0.t;
        if (!(dt > 0.0)) continue;
        const Field U0 = antiderivative(s0.V, h), U1 = antiderivative(s1.V, h);
        const Field P0 = antiderivative(s0.E, h), P1 = antiderivative(s1.E, h);
        // z is only defined up to a common factor; shift the exponent so the largest z is 1.
        double top = -INFINITY, bottom = INFINITY;
        for (std::size_t i = 0; i < n; ++i) {
            for (double u : {U0[i], U1[i]}) {
                top = std::max(top, -u * inv2mu);
                bottom = std::min(bottom, -u * inv2mu);
            }
        }
        if (!std::isfinite(top) || top - bottom > 700.0)
            fail(ErrorCode::Overflow, "cole_hopf_residual: exp(-U/(2 mu)) spans more than the double range");
        Field z0(n), z1(n);
        for (std::size_t i = 0; i < n; ++i) {
            z0[i] = std::exp(-U0[i] * inv2mu - top);
            z1[i] = std::exp(-U1[i] * inv2mu - top);
        }
        double worst = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) scale = std::max({scale, z0[i], z1[i]});
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double zt = (z1[i] - z0[i]) / dt;
            const double zxx0 = (z0[i + 1] - 2.0 * z0[i] + z0[i - 1]) / (h * h);
            const double zxx1 = (z1[i + 1] - 2.0 * z1[i] + z1[i - 1]) / (h * h);
            const double psi0 = P0[i] * inv2mu + psi_shift;
            const double psi1 = P1[i] * inv2mu + psi_shift;
            const double rhs = 0.5 * (mu * zxx0 + psi0 * z0[i] + mu * zxx1 + psi1 * z1[i]);
            worst = std::max(worst, std::abs(zt - rhs));
        }
        out.t.push_back(0.5 * (s0.t + s1.t));
        out.residual.push_back(worst / scale);
    }
    return out;
}

double periodicity_check(const RunResult& run) {
    if (!run.reg.all_off()) fail(ErrorCode::Precondition, "periodicity_check: needs a run with all regularizers off");
    require(!run.snapshots.empty(), "periodicity_check: run has no snapshots");
    const double period = 2.0 * std::numbers::pi;
    const double tol = 1e-9 * period;
    for (const FieldState& s : run.snapshots)
        if (std::abs(s.t - period) <= tol) return sup_diff(run.snapshots.front(), s);
    if (run.snapshots.back().t < period - tol)
        fail(ErrorCode::RunTooShort, "periodicity_check: run ended before t = 2 pi");
    fail(ErrorCode::Precondition, "periodicity_check: no snapshot at t = 2 pi");
}

double periodicity_budget(const RunResult& run) {
    require(!run.snapshots.empty() && run.steps > 0, "periodicity_budget: empty run");
    const double h = run.grid.spacing();
    const double dt = (run.snapshots.back().t - run.snapshots.front().t) / static_cast<double>(run.steps);
    double scale = 0.0;
    const FieldState& s = run.snapshots.front();
    for (std::size_t i = 0; i < s.V.size(); ++i) scale = std::max({scale, std::abs(s.V[i]), std::abs(s.E[i])});
    return 10.0 * (h * h + std::pow(dt, 4)) * scale;
}

namespace {

ReconcilePoint criterion_at(const InitialData& init, double x, double alpha, double gamma, double band) {
    ReconcilePoint p;
    p.x = x;
    const double v0 = init.v0(x), e0 = init.e0(x);
    if (alpha > 0.0) {
        const DeltaP d = delta_p(v0, e0, init.e0p(x), alpha, gamma);
        p.lhs = d.lhs;
        p.rhs = d.rhs;
    } else {
        p.lhs = delta(v0, e0);
    }
    p.criterion_blowup = p.lhs >= p.rhs;
    p.boundary = std::abs(p.lhs - p.rhs) < band;
    return p;
}

}  // namespace

double max_criterion_margin(const InitialData& init, const Grid1D& grid, double alpha, double gamma) {
    double best = -INFINITY;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const ReconcilePoint p = criterion_at(init, grid.x(i), alpha, gamma, 0.0);
        best = std::max(best, p.lhs - p.rhs);
    }
    return best;
}

ReconciliationReport reconcile_criterion(const InitialData& init, const SolverConfig& cfg, double band) {
    const RegularizerSpec& reg = cfg.reg;
    if (!reg.all_off() && !reg.pressure_only())
        fail(ErrorCode::Precondition, "reconcile_criterion: regularizers must be all off or pressure only");
    require(band > 0.0, "reconcile_criterion: band must be positive");
    ReconciliationReport rep;
    rep.pressure = reg.pressure_only();
    const double alpha = rep.pressure ? reg.alpha : 0.0;
    rep.max_margin = -INFINITY;
    for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
        ReconcilePoint p = criterion_at(init, cfg.grid.x(i), alpha, reg.gamma_p, band);
        if (p.lhs - p.rhs > rep.max_margin) {
            rep.max_margin = p.lhs - p.rhs;
            rep.argmax_x = p.x;
        }
        rep.points.push_back(p);
    }
    rep.criterion_blowup = rep.max_margin >= 0.0;
    rep.in_band = std::abs(rep.max_margin) < band;

    const RunResult run = solve(init, cfg);
    rep.solver_blowup = run.report.blew_up;
    rep.t_star = run.report.t_star;
    rep.trigger = run.trigger;
    rep.t_end = run.snapshots.back().t;
    rep.agree = rep.criterion_blowup == rep.solver_blowup;
    return rep;
}

double critical_amplitude(Preset preset, PresetParams params, const Grid1D& grid, double alpha, double gamma,
                          double lo, double hi, double tol) {
    require(lo < hi && tol > 0.0, "critical_amplitude: need lo < hi and tol > 0");
    auto margin = [&](double a) {
        params.a = a;
        return max_criterion_margin(make_initial_data(preset, params), grid, alpha, gamma);
    };
    double mlo = margin(lo), mhi = margin(hi);
    if (!(mlo < 0.0 && mhi >= 0.0))
        fail(ErrorCode::BracketFailure, "critical_amplitude: criterion does not change sign on [lo, hi]");
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (margin(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace eplab
