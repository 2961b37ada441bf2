#include "doctest.h"

#include <cmath>
#include <numbers>

#include "eplab/characteristics.hpp"
#include "eplab/diagnostics.hpp"
#include "eplab/fields.hpp"

using namespace eplab;

namespace {

InitialData laser(double a) {
    PresetParams p;
    p.a = a;
    return make_initial_data(Preset::LaserPulse, p);
}

double sup(const Field& f) {
    double m = 0.0;
    for (double v : f) m = std::max(m, std::abs(v));
    return m;
}

FieldState zero_state(const Grid1D& g) { return {0.0, Field(g.size(), 0.0), Field(g.size(), 0.0)}; }

// Linear interpolation on the periodic grid.
double at(const Field& f, const Grid1D& g, double x) {
    const double s = (x - g.x_min()) / g.spacing();
    const auto i = static_cast<std::size_t>(std::floor(s));
    const double w = s - std::floor(s);
    return (1.0 - w) * f[i % g.size()] + w * f[(i + 1) % g.size()];
}

}  // namespace

TEST_CASE("rest state is a fixed point of every right-hand side") {
    const Grid1D g(-10.0, 10.0, 128);
    std::vector<RegularizerSpec> regs(5);
    regs[1].nu_const = 0.5;
    regs[2].alpha = 1.0;
    regs[3].mu = 0.1;
    regs[3].kappa = 0.1;
    regs[3].allow_combinations = true;
    regs[4].nu_density = DensityFriction{0.3, 1.5};
    for (const auto& reg : regs)
        for (auto adv : {Advection::Upwind, Advection::Central}) {
            const Rates r = rhs(zero_state(g), reg, g, adv);
            CHECK(sup(r.dV) == 0.0);
            CHECK(sup(r.dE) == 0.0);
        }
}

TEST_CASE("small velocity sine drives the field at first order") {
    const Grid1D g(0.0, 2.0 * std::numbers::pi, 256);
    const double eps = 1e-4;
    FieldState s = zero_state(g);
    for (std::size_t i = 0; i < g.size(); ++i) s.V[i] = eps * std::sin(g.x(i));
    const Rates r = rhs(s, {}, g);
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(r.dE[i] == doctest::Approx(s.V[i]).epsilon(1e-12));
    CHECK(sup(r.dV) <= eps * eps * 1.01);
}

TEST_CASE("gamma = 2 pressure equals alpha E_xx") {
    const Grid1D g(-10.0, 10.0, 512);
    FieldState s = zero_state(g);
    for (std::size_t i = 0; i < g.size(); ++i) s.E[i] = 0.1 * std::exp(-g.x(i) * g.x(i));
    RegularizerSpec reg;
    reg.alpha = 0.7;
    const Rates with = rhs(s, reg, g);
    const Rates without = rhs(s, {}, g);
    const double h = g.spacing();
    double err = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double x = g.x(i);
        const double exx = 0.1 * (4.0 * x * x - 2.0) * std::exp(-x * x);
        err = std::max(err, std::abs(with.dV[i] - without.dV[i] - reg.alpha * exx));
    }
    CHECK(err < 10.0 * h * h);
}

TEST_CASE("solver input validation") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 128);
    cfg.t_end = 1.0;
    cfg.cfl = 1.5;
    CHECK_THROWS_AS(solve(laser(0.05), cfg), Error);
    cfg.cfl = 0.4;
    PresetParams wide;
    wide.a = 0.1;
    wide.s = 5.0;
    CHECK_THROWS_AS(solve(make_initial_data(Preset::GaussianE, wide), cfg), Error);
    cfg.reg.mu = 0.1;
    cfg.reg.alpha = 0.1;
    CHECK_THROWS_AS(solve(laser(0.05), cfg), Error);
}

TEST_CASE("zero data stays at rest under every regularizer") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 128);
    cfg.t_end = 5.0;
    for (double mu : {0.0, 0.1}) {
        cfg.reg = {};
        cfg.reg.mu = mu;
        const RunResult r = solve(make_initial_data(Preset::Zero, {}), cfg);
        CHECK_FALSE(r.report.blew_up);
        CHECK(sup(r.snapshots.back().V) == 0.0);
        CHECK(sup(r.snapshots.back().E) == 0.0);
        CHECK(r.snapshots.back().t == doctest::Approx(5.0));
    }
}

TEST_CASE("smooth laser pulse returns after one period") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-20.0, 20.0, 2048);
    cfg.t_end = 2.0 * std::numbers::pi;
    cfg.advection = Advection::Central;
    const RunResult r = solve(laser(0.05), cfg);
    REQUIRE_FALSE(r.report.blew_up);
    CHECK(periodicity_check(r) <= periodicity_budget(r));
}

TEST_CASE("total charge is conserved") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 256);
    cfg.t_end = 3.0;
    cfg.output_dt = 0.5;
    const RunResult r = solve(laser(0.3), cfg);
    for (const auto& s : r.snapshots) {
        double q = 0.0;
        for (double n : s.density(r.grid)) q += (n - 1.0) * r.grid.spacing();
        CHECK(std::abs(q) < 1e-12);
    }
}

TEST_CASE("snapshots are increasing in time and end at t_end") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 128);
    cfg.t_end = 1.0;
    cfg.output_dt = 0.3;
    const RunResult r = solve(laser(0.1), cfg);
    REQUIRE(r.snapshots.size() == 5);
    for (std::size_t k = 1; k < r.snapshots.size(); ++k) CHECK(r.snapshots[k].t > r.snapshots[k - 1].t);
    CHECK(r.snapshots[3].t == doctest::Approx(0.9));
    CHECK(r.snapshots.back().t == 1.0);
    for (std::size_t k = 1; k < r.series.size(); ++k) CHECK(r.series[k].t > r.series[k - 1].t);
}

TEST_CASE("Eulerian solution follows the characteristics") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-20.0, 20.0, 2048);
    cfg.t_end = 2.0 * std::numbers::pi;
    cfg.output_dt = std::numbers::pi / 4.0;
    cfg.advection = Advection::Central;
    const InitialData init = laser(0.05);
    const RunResult run = solve(init, cfg);
    const double h = cfg.grid.spacing();
    const double scale = 0.05;
    for (double x0 : {-1.3, 0.4, 1.2}) {
        CharState c{0.0, x0, init.V0(x0), init.E0(x0), init.v0(x0), init.e0(x0)};
        for (const FieldState& s : run.snapshots) {
            if (s.t == 0.0) continue;
            const CharState here = integrate_characteristic(CharSystem::original(), c, s.t).final_state;
            CHECK(std::abs(at(s.V, cfg.grid, here.x) - here.V) < 10.0 * h * h * scale);
            CHECK(std::abs(at(s.E, cfg.grid, here.x) - here.E) < 10.0 * h * h * scale);
        }
    }
}

TEST_CASE("central scheme converges at second order on smooth data") {
    std::vector<Field> finals;
    for (int cells : {256, 512, 1024}) {
        SolverConfig cfg;
        cfg.grid = Grid1D(-10.0, 10.0, cells);
        cfg.t_end = 2.0;
        cfg.advection = Advection::Central;
        finals.push_back(solve(laser(0.1), cfg).snapshots.back().V);
    }
    auto diff = [](const Field& coarse, const Field& fine) {
        double m = 0.0;
        for (std::size_t i = 0; i < coarse.size(); ++i) m = std::max(m, std::abs(coarse[i] - fine[2 * i]));
        return m;
    };
    const double ratio = diff(finals[0], finals[1]) / diff(finals[1], finals[2]);
    CHECK(ratio > 3.0);
}

TEST_CASE("supercritical laser pulse blows up and viscosity prevents it") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 1024);
    cfg.t_end = 10.0;
    const RunResult bare = solve(laser(0.85), cfg);
    CHECK(bare.report.blew_up);
    REQUIRE(bare.report.t_star);
    CHECK(*bare.report.t_star > 1.5);
    CHECK(*bare.report.t_star < 3.0);
    CHECK(bare.report.witness != Witness::None);

    cfg.t_end = 20.0;
    cfg.reg.mu = 0.1;
    const RunResult viscous = solve(laser(0.85), cfg);
    CHECK_FALSE(viscous.report.blew_up);
    CHECK(viscous.series.back().max_vx < 10.0);
}

TEST_CASE("subcritical laser pulse stays smooth") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 1024);
    cfg.t_end = 20.0;
    CHECK_FALSE(solve(laser(0.5), cfg).report.blew_up);
}

TEST_CASE("density friction admissibility predicates") {
    SolverConfig base;
    base.grid = Grid1D(-10.0, 10.0, 128);
    base.t_end = 0.5;
    const auto rows = check_density_friction_threshold(laser(0.3), 0.3, {0.5, 1.0, 1.5}, base);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].limit == 0.5);
    CHECK_FALSE(rows[0].integral_diverges);
    CHECK_FALSE(rows[0].admissible);
    CHECK(rows[1].integral_diverges);
    CHECK(rows[1].admissible);
    CHECK(rows[2].admissible);
    for (const auto& r : rows) CHECK_FALSE(r.blew_up);
}

TEST_CASE("friction damps the oscillation") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 512);
    cfg.t_end = 2.0 * std::numbers::pi;
    cfg.reg.nu_const = 0.5;
    const RunResult r = solve(laser(0.1), cfg);
    CHECK_THROWS_AS(periodicity_check(r), Error);
    const FieldState& a = r.snapshots.front();
    const FieldState& b = r.snapshots.back();
    CHECK(std::max(sup(b.V), sup(b.E)) < 0.5 * std::max(sup(a.V), sup(a.E)));
}

TEST_CASE("singularity classifier refuses smooth runs") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 128);
    cfg.t_end = 1.0;
    const RunResult r = solve(laser(0.1), cfg);
    try {
        classify_singularity(laser(0.1), cfg, r, {cfg.grid, cfg.grid.refined(2)});
        FAIL("expected a precondition error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Precondition);
    }
}

TEST_CASE("pressure turns the field singularity weak") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 512);
    cfg.t_end = 10.0;
    cfg.reg.alpha = 1.0;
    const RunResult r = solve(laser(0.7283), cfg);
    REQUIRE(r.report.blew_up);
    const auto type = classify_singularity(laser(0.7283), cfg, r, {cfg.grid, cfg.grid.refined(2), cfg.grid.refined(4)});
    CHECK(type.V == SingularityKind::Catastrophe);
    CHECK(type.E == SingularityKind::Weak);
    REQUIRE(type.samples.size() == 3);
    CHECK(type.samples[2].max_de < type.samples[0].max_de);
}

TEST_CASE("exotic viscosity indicator") {
    SolverConfig cfg;
    cfg.grid = Grid1D(-10.0, 10.0, 256);
    cfg.t_end = 5.0;
    cfg.output_dt = 0.1;
    cfg.reg.mu = 0.1;
    cfg.reg.exotic_viscosity = true;
    const auto zero = exotic_viscosity_indicator(solve(make_initial_data(Preset::Zero, {}), cfg));
    for (double v : zero.min_vx_over_n) CHECK(v == 0.0);
    CHECK_FALSE(zero.blew_up);

    const auto small = exotic_viscosity_indicator(solve(laser(0.01), cfg));
    CHECK_FALSE(small.blew_up);
    double lo = 0.0;
    for (double v : small.min_vx_over_n) lo = std::min(lo, v);
    CHECK(lo < 0.0);
    CHECK(lo > -0.05);
    CHECK(small.t.size() == small.min_vx_over_n.size());
}

TEST_CASE("advection names round-trip") {
    CHECK(parse_advection("upwind") == Advection::Upwind);
    CHECK(parse_advection(advection_name(Advection::Central)) == Advection::Central);
    CHECK_THROWS_AS(parse_advection("spectral"), Error);
}
