#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "eplab/characteristics.hpp"
#include "eplab/stochastic.hpp"

using namespace eplab;

namespace {

InitialData laser(double a) {
    PresetParams p;
    p.a = a;
    return make_initial_data(Preset::LaserPulse, p);
}

InitialData zero() { return make_initial_data(Preset::Zero, {}); }

template <class F>
ErrorCode code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

double variance(const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

}  // namespace

TEST_CASE("initial positions follow f0") {
    const std::size_t n = 20000;
    const auto ens = init_ensemble(zero(), SpatialDensity::uniform(-6.0, 6.0), n, 0.1, 7);
    std::vector<double> x = ens.X;
    std::sort(x.begin(), x.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double F = (x[i] + 6.0) / 12.0;
        ks = std::max({ks, std::abs(F - static_cast<double>(i) / n), std::abs(F - static_cast<double>(i + 1) / n)});
    }
    CHECK(ks < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(x.front() >= -6.0);
    CHECK(x.back() <= 6.0);
}

TEST_CASE("particles carry the initial fields") {
    const InitialData init = laser(0.3);
    const auto ens = init_ensemble(init, SpatialDensity::gaussian(0.0, 2.0), 2000, 0.2, 3);
    for (std::size_t i = 0; i < ens.size(); ++i) {
        CHECK(ens.V[i] == 0.0);
        CHECK(ens.E[i] == init.E0(ens.X[i]));
    }
    CHECK(ens.t == 0.0);
    CHECK(ens.step == 0);
}

TEST_CASE("ensemble input validation") {
    CHECK(code_of([] { init_ensemble(zero(), SpatialDensity::uniform(-1, 1), 10, 0.1, 1); }) ==
          ErrorCode::InvalidArgument);
    CHECK(code_of([] { init_ensemble(zero(), SpatialDensity::uniform(-1, 1), 1000, -0.1, 1); }) ==
          ErrorCode::InvalidArgument);
    SpatialDensity bad{[](double x) { return x; }, -1.0, 1.0};
    CHECK(code_of([&] { init_ensemble(zero(), bad, 1000, 0.1, 1); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { convergence_study(laser(0.1), {0.1, 0.0}, 1000, {0.5}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("noise-free particles follow the characteristics") {
    const InitialData init = laser(0.3);
    auto ens = init_ensemble(init, SpatialDensity::uniform(-4.0, 4.0), 1000, 0.0, 11);
    const auto start = ens;
    advance_ensemble(ens, 2.0, 0.01);
    CHECK(ens.t == doctest::Approx(2.0));
    for (std::size_t i = 0; i < ens.size(); i += 97) {
        const double x0 = start.X[i];
        const CharState c{0.0, x0, init.V0(x0), init.E0(x0), init.v0(x0), init.e0(x0)};
        const CharState end = integrate_characteristic(CharSystem::original(), c, 2.0).final_state;
        CHECK(ens.X[i] == doctest::Approx(end.x).epsilon(1e-8));
        CHECK(ens.V[i] == doctest::Approx(end.V).epsilon(1e-8));
        CHECK(ens.E[i] == doctest::Approx(end.E).epsilon(1e-8));
    }
}

TEST_CASE("rotation keeps V^2 + E^2 per particle") {
    auto ens = init_ensemble(laser(0.5), SpatialDensity::uniform(-4.0, 4.0), 1000, 0.3, 5);
    std::vector<double> r0(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i) r0[i] = ens.V[i] * ens.V[i] + ens.E[i] * ens.E[i];
    advance_ensemble(ens, 10.0, 0.05);
    for (std::size_t i = 0; i < ens.size(); ++i)
        CHECK(std::abs(ens.V[i] * ens.V[i] + ens.E[i] * ens.E[i] - r0[i]) < 1e-13);
}

TEST_CASE("position variance grows like sigma^2 t") {
    const double sigma = 0.5, t = 2.0;
    auto ens = init_ensemble(zero(), SpatialDensity::gaussian(0.0, 0.01), 40000, sigma, 21);
    advance_ensemble(ens, t, 0.02);
    CHECK(variance(ens.X) == doctest::Approx(sigma * sigma * t + 1e-4).epsilon(0.05));
    for (double v : ens.V) CHECK(v == 0.0);
}

TEST_CASE("moments of a constant-velocity cluster") {
    InitialData init = zero();
    init.V0 = [](double) { return 1.0; };
    const auto ens = init_ensemble(init, SpatialDensity::gaussian(0.0, 1.0), 10000, 0.1, 2);
    const auto m = estimate_moments(ens, Grid1D(-8.0, 8.0, 256));
    std::size_t defined = 0;
    for (std::size_t i = 0; i < m.grid.size(); ++i) {
        if (!m.defined(i)) continue;
        ++defined;
        CHECK(m.Vhat[i] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.Ehat[i] == 0.0);
    }
    CHECK(defined > 100);
}

TEST_CASE("estimated density has unit mass") {
    const auto ens = init_ensemble(laser(0.3), SpatialDensity::uniform(-6.0, 6.0), 10000, 0.1, 4);
    const auto m = estimate_moments(ens, Grid1D(-10.0, 10.0, 512));
    CHECK(m.mass() == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(m.bandwidth == doctest::Approx(silverman_bandwidth(ens.X)));
    const auto wide = estimate_moments(ens, Grid1D(-10.0, 10.0, 512), 0.5);
    CHECK(wide.bandwidth == 0.5);
    CHECK(wide.max_rho() < m.max_rho() * 1.01);
}

TEST_CASE("silverman bandwidth of a standard normal sample") {
    const auto ens = init_ensemble(zero(), SpatialDensity::gaussian(0.0, 1.0), 100000, 0.1, 9);
    CHECK(silverman_bandwidth(ens.X) == doctest::Approx(0.9 * std::pow(1e5, -0.2)).epsilon(0.02));
}

TEST_CASE("empty window is an error") {
    const auto ens = init_ensemble(zero(), SpatialDensity::uniform(-1.0, 1.0), 1000, 0.1, 1);
    CHECK(code_of([&] { estimate_moments(ens, Grid1D(100.0, 110.0, 64)); }) == ErrorCode::EmptyEstimate);
}

TEST_CASE("moment residual") {
    const Grid1D g(-8.0, 8.0, 128);
    auto ens = init_ensemble(zero(), SpatialDensity::gaussian(0.0, 1.0), 5000, 0.0, 1);
    const auto a = estimate_moments(ens, g);
    advance_ensemble(ens, 1.0, 0.1);
    const auto b = estimate_moments(ens, g);
    for (double r : moment_residual(a, b, 1.0, 0.0)) CHECK(r == 0.0);

    const auto other = estimate_moments(ens, Grid1D(-8.0, 8.0, 64));
    CHECK(code_of([&] { moment_residual(a, other, 1.0, 0.0); }) == ErrorCode::GridMismatch);
}

TEST_CASE("heat-equation residual of a diffusing cloud is small") {
    const double sigma = 0.5;
    const Grid1D g(-8.0, 8.0, 128);
    auto ens = init_ensemble(zero(), SpatialDensity::gaussian(0.0, 1.0), 200000, sigma, 8);
    advance_ensemble(ens, 1.0, 0.05);
    const auto a = estimate_moments(ens, g, 0.3);
    advance_ensemble(ens, 1.5, 0.05);
    const auto b = estimate_moments(ens, g, 0.3);
    const Field r = moment_residual(a, b, 0.5, sigma);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        worst = std::max(worst, std::abs(r[i]));
        scale = std::max(scale, std::abs(b.rho[i] - a.rho[i]) / 0.5);
    }
    CHECK(worst < 0.25 * scale);
}

TEST_CASE("results do not depend on the thread count") {
    auto one = init_ensemble(laser(0.5), SpatialDensity::uniform(-6.0, 6.0), 20000, 0.2, 13, 1);
    auto four = init_ensemble(laser(0.5), SpatialDensity::uniform(-6.0, 6.0), 20000, 0.2, 13, 4);
    CHECK(one.X == four.X);
    advance_ensemble(one, 1.0, 0.01, 1);
    advance_ensemble(four, 1.0, 0.01, 4);
    CHECK(one.X == four.X);
    CHECK(one.V == four.V);
    CHECK(one.E == four.E);
    const Grid1D g(-10.0, 10.0, 256);
    const auto m1 = estimate_moments(one, g, std::nullopt, 1);
    const auto m4 = estimate_moments(four, g, std::nullopt, 4);
    CHECK(m1.rho == m4.rho);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(m1.defined(i) == m4.defined(i));
        if (m1.defined(i)) CHECK(m1.Vhat[i] == m4.Vhat[i]);
    }
}

TEST_CASE("split advance matches a single advance") {
    auto a = init_ensemble(laser(0.5), SpatialDensity::uniform(-6.0, 6.0), 1000, 0.2, 17);
    auto b = a;
    advance_ensemble(a, 1.0, 0.01);
    advance_ensemble(b, 0.5, 0.01);
    advance_ensemble(b, 1.0, 0.01);
    CHECK(a.step == b.step);
    // Step sizes differ in the last bits, so positions agree to rounding only.
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a.X[i] - b.X[i]) < 1e-12);
}

TEST_CASE("checkpoint round trip") {
    auto ens = init_ensemble(laser(0.5), SpatialDensity::uniform(-6.0, 6.0), 1500, 0.2, 99);
    advance_ensemble(ens, 0.7, 0.01);
    const auto path = (std::filesystem::temp_directory_path() / "eplab_checkpoint_test.bin").string();
    write_checkpoint(ens, path);
    auto back = read_checkpoint(path);
    CHECK(back.X == ens.X);
    CHECK(back.V == ens.V);
    CHECK(back.E == ens.E);
    CHECK(back.sigma == ens.sigma);
    CHECK(back.seed == ens.seed);
    CHECK(back.t == ens.t);
    CHECK(back.step == ens.step);
    advance_ensemble(ens, 1.0, 0.01);
    advance_ensemble(back, 1.0, 0.01);
    CHECK(back.X == ens.X);
    std::filesystem::remove(path);
    CHECK(code_of([&] { read_checkpoint(path); }) == ErrorCode::Io);
}

TEST_CASE("reference matches the solved characteristics before folding") {
    const InitialData init = laser(0.3);
    const Grid1D g(-10.0, 10.0, 256);
    const Reference ref = characteristic_reference(init, g, 0.0);
    for (std::size_t i = 0; i < g.size(); i += 17) CHECK(ref.E[i] == doctest::Approx(init.E0(g.x(i))).epsilon(1e-6));
    CHECK(code_of([&] { characteristic_reference(laser(0.9), g, 4.0); }) == ErrorCode::Precondition);
}
