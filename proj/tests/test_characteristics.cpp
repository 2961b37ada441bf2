#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "eplab/characteristics.hpp"

using namespace eplab;

namespace {

constexpr double pi = std::numbers::pi;

// Closed form for the original (v, e) system: q = 1/(1 - e) solves q'' + q = 1
// and v = q'/q, so q(t) = 1 + (q0 - 1) cos t + q0' sin t.
struct HarmonicOracle {
    double q0, dq0;

    HarmonicOracle(double v0, double e0) : q0(1.0 / (1.0 - e0)), dq0(v0 / (1.0 - e0)) {}

    double q(double t) const { return 1.0 + (q0 - 1.0) * std::cos(t) + dq0 * std::sin(t); }
    double dq(double t) const { return -(q0 - 1.0) * std::sin(t) + dq0 * std::cos(t); }
    double v(double t) const { return dq(t) / q(t); }
    double e(double t) const { return 1.0 - 1.0 / q(t); }

    // First t > 0 with q(t) = 0, or infinity.
    double blowup_time() const {
        const double r = std::hypot(q0 - 1.0, dq0);
        if (r < 1.0) return INFINITY;
        const double phi = std::atan2(dq0, q0 - 1.0);
        const double c = std::acos(-1.0 / r);
        double best = INFINITY;
        for (int k = -2; k <= 3; ++k) {
            for (double s : {c, -c}) {
                const double t = phi + s + 2.0 * pi * k;
                if (t > 1e-12) best = std::min(best, t);
            }
        }
        return best;
    }
};

CharState start(double V, double E, double v, double e) {
    CharState s;
    s.V = V;
    s.E = E;
    s.v = v;
    s.e = e;
    return s;
}

double point_segment_distance(PhasePoint p, PhasePoint a, PhasePoint b) {
    const double de = b.e - a.e, dv = b.v - a.v;
    const double len2 = de * de + dv * dv;
    double u = len2 > 0 ? ((p.e - a.e) * de + (p.v - a.v) * dv) / len2 : 0.0;
    u = std::clamp(u, 0.0, 1.0);
    return std::hypot(p.e - (a.e + u * de), p.v - (a.v + u * dv));
}

}  // namespace

TEST_CASE("delta arithmetic") {
    CHECK(delta(0.0, 0.0) == -1.0);
    CHECK(delta(1.0, 0.0) == 0.0);
    CHECK(delta(0.5, 0.3) == doctest::Approx(-0.15));
}

TEST_CASE("delta_p reduces to delta and evaluates the pressure term") {
    const auto z = delta_p(0.3, 0.2, 5.0, 0.0, 2.0);
    CHECK(z.rhs == 0.0);
    CHECK(z.lhs == doctest::Approx(delta(0.3, 0.2)));
    const auto d = delta_p(0.0, 0.4, 1.0, 1.0, 2.0);
    CHECK(d.lhs == doctest::Approx(-0.2));
    CHECK(d.rhs == doctest::Approx(1.0 / 0.6));
    CHECK(d.smooth());
    CHECK_THROWS_AS(delta_p(0.0, 1.0, 0.0, 1.0, 2.0), Error);
    try {
        delta_p(0.0, 1.2, 0.0, 1.0, 2.0);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidDensity);
    }
    CHECK_THROWS_AS(delta_p(0.0, 0.0, 0.0, 1.0, 1.0), Error);
}

TEST_CASE("harmonic rotation with vanishing derivatives") {
    IntegratorOptions opts;
    opts.sample_dt = 0.5;
    const auto tr = integrate_characteristic(CharSystem::original(), start(1, 0, 0, 0), 10.0, opts);
    CHECK_FALSE(tr.report.blew_up);
    CHECK(tr.samples.size() == 21);
    for (const auto& s : tr.samples) {
        CHECK(s.V == doctest::Approx(std::cos(s.t)).epsilon(1e-8));
        CHECK(s.E == doctest::Approx(std::sin(s.t)).epsilon(1e-8));
        CHECK(s.v == 0.0);
        CHECK(s.e == 0.0);
    }
    CHECK(tr.final_state.t == 10.0);
}

TEST_CASE("e = 1 gives v = -tan t and blow-up at pi/2") {
    IntegratorOptions opts;
    opts.record_steps = true;
    const auto tr = integrate_characteristic(CharSystem::original(), start(0, 0, 0, 1), 5.0, opts);
    REQUIRE(tr.report.blew_up);
    REQUIRE(tr.report.t_star.has_value());
    CHECK(std::abs(*tr.report.t_star - pi / 2) < 1e-3);
    CHECK(tr.report.witness == Witness::V);
    for (const auto& s : tr.samples) {
        CHECK(s.e == 1.0);
        if (s.t < 1.5) CHECK(s.v == doctest::Approx(-std::tan(s.t)).epsilon(1e-8));
    }
}

TEST_CASE("integration agrees with the closed-form oracle") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int smooth = 0, blown = 0;
    for (int k = 0; k < 200; ++k) {
        const double v0 = u(rng), e0 = u(rng) * 0.49;  // e0 < 1
        const HarmonicOracle oracle(v0, e0);
        const double tb = oracle.blowup_time();
        IntegratorOptions opts;
        opts.sample_dt = 0.25;
        const auto tr = integrate_characteristic(CharSystem::original(), start(0, 0, v0, e0), 8.0, opts);
        if (std::isfinite(tb) && tb < 8.0 && std::abs(delta(v0, e0)) > 1e-2) {
            ++blown;
            REQUIRE(tr.report.blew_up);
            CHECK(std::abs(*tr.report.t_star - tb) < 1e-5 * std::max(1.0, tb));
        } else if (!std::isfinite(tb)) {
            ++smooth;
            CHECK_FALSE(tr.report.blew_up);
            for (const auto& s : tr.samples) {
                CHECK(std::abs(s.v - oracle.v(s.t)) <= 1e-6 * (1.0 + std::abs(oracle.v(s.t))));
                CHECK(std::abs(s.e - oracle.e(s.t)) <= 1e-6 * (1.0 + std::abs(oracle.e(s.t))));
            }
        }
    }
    CHECK(smooth > 20);
    CHECK(blown > 20);
}

TEST_CASE("smooth original characteristics are 2pi-periodic and conserve V^2 + E^2") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    int tested = 0;
    while (tested < 40) {
        const double v0 = u(rng), e0 = u(rng), V0 = u(rng), E0 = u(rng);
        if (delta(v0, e0) > -0.05) continue;
        ++tested;
        IntegratorOptions opts;
        opts.sample_dt = 2.0 * pi;
        const auto tr = integrate_characteristic(CharSystem::original(), start(V0, E0, v0, e0), 50.0, opts);
        CHECK_FALSE(tr.report.blew_up);
        const auto& p = tr.samples.at(1);
        CHECK(p.t == doctest::Approx(2.0 * pi));
        CHECK(std::abs(p.v - v0) < 1e-6 * (1.0 + std::abs(v0)));
        CHECK(std::abs(p.e - e0) < 1e-6 * (1.0 + std::abs(e0)));
        CHECK(std::abs(p.x - 0.0) < 1e-7);
        for (const auto& s : tr.samples) {
            CHECK(s.V * s.V + s.E * s.E == doctest::Approx(V0 * V0 + E0 * E0).epsilon(1e-8));
        }
    }
}

TEST_CASE("sign of delta never changes along original characteristics") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 300; ++k) {
        const double v0 = u(rng), e0 = u(rng);
        const double d0 = delta(v0, e0);
        if (std::abs(d0) <= 1e-2) continue;
        bool flipped = false;
        IntegratorOptions opts;
        opts.on_step = [&](const CharState& s) {
            if (delta(s.v, s.e) * d0 <= 0.0) flipped = true;
            return true;
        };
        const auto tr = integrate_characteristic(CharSystem::original(), start(0, 0, v0, e0), 50.0, opts);
        CHECK_FALSE(flipped);
        CHECK(tr.report.blew_up == (d0 > 0.0));
    }
}

TEST_CASE("step underflow without blow-up is a stiffness error") {
    IntegratorOptions opts;
    // With the threshold out of reach the step collapses near the pole first.
    opts.min_step = 1e-8;
    opts.blowup_threshold = 1e300;
    try {
        integrate_characteristic(CharSystem::original(), start(0, 0, 0, 1), 10.0, opts);
        FAIL("expected stiffness error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Stiffness);
    }
}

TEST_CASE("blow-up time fit recovers the pole of synthetic data") {
    std::vector<double> t, w;
    const double T = 2.345;
    for (int k = 0; k < 200; ++k) {
        const double s = 1e-3 * std::pow(10.0, -5.0 * k / 199.0);
        t.push_back(T - s);
        w.push_back(-3.0 / s);
    }
    const auto fit = fit_blowup_time(t, w);
    REQUIRE(fit.has_value());
    CHECK(std::abs(*fit - T) < 1e-9);
}

TEST_CASE("equilibria per friction regime") {
    const auto c = classify_equilibria(0.0);
    REQUIRE(c.size() == 1);
    CHECK(c[0].kind == EquilibriumKind::Center);
    CHECK(c[0].eigenvalues[0].real() == 0.0);

    const auto f = classify_equilibria(1.0);
    REQUIRE(f.size() == 1);
    CHECK(f[0].kind == EquilibriumKind::StableFocus);

    const auto sn = classify_equilibria(2.0);
    REQUIRE(sn.size() == 2);
    CHECK(sn[0].kind == EquilibriumKind::StableNode);
    CHECK(sn[1].kind == EquilibriumKind::SaddleNode);
    CHECK(sn[1].v == -1.0);

    const auto three = classify_equilibria(3.0);
    REQUIRE(three.size() == 3);
    CHECK(three[0].kind == EquilibriumKind::StableNode);
    CHECK(three[1].kind == EquilibriumKind::Saddle);
    CHECK(three[1].e == 1.0);
    CHECK(three[1].v == doctest::Approx(-(3.0 - std::sqrt(5.0)) / 2.0));
    CHECK(three[1].v == doctest::Approx(-0.381966).epsilon(1e-6));
    CHECK(three[2].kind == EquilibriumKind::UnstableNode);
    CHECK(three[2].v == doctest::Approx(-2.618034).epsilon(1e-6));
    CHECK_THROWS_AS(classify_equilibria(-1.0), Error);
}

TEST_CASE("equilibrium kinds match finite-difference Jacobian eigenvalues") {
    auto field = [](double nu, double e, double v) {
        return std::array<double, 2>{v * (1.0 - e), -e - v * v - nu * v};
    };
    std::mt19937_64 rng(11);
    const std::array<std::pair<double, double>, 3> regimes{{{0.01, 1.99}, {2.01, 10.0}, {0.0, 0.0}}};
    for (const auto& [lo, hi] : regimes) {
        std::uniform_real_distribution<double> u(lo, hi);
        for (int k = 0; k < 50; ++k) {
            const double nu = hi == 0.0 ? 0.0 : u(rng);
            for (const auto& q : classify_equilibria(nu)) {
                const double h = 1e-6;
                std::array<std::array<double, 2>, 2> J{};
                for (int c = 0; c < 2; ++c) {
                    const double de = c == 0 ? h : 0.0, dv = c == 1 ? h : 0.0;
                    const auto fp = field(nu, q.e + de, q.v + dv);
                    const auto fm = field(nu, q.e - de, q.v - dv);
                    J[0][c] = (fp[0] - fm[0]) / (2 * h);
                    J[1][c] = (fp[1] - fm[1]) / (2 * h);
                }
                CHECK(classify_eigenvalues(eigenvalues2(J), 1e-6) == q.kind);
            }
        }
    }
}

TEST_CASE("membership examples") {
    MembershipOptions m;
    CHECK(smoothness_membership(0.0, 0.0, 0.0, m));
    CHECK_FALSE(smoothness_membership(0.0, 0.0, 1.0, m));
    CHECK(smoothness_membership(5.0, 0.0, 0.9, m));
    CHECK_FALSE(smoothness_membership(0.0, 0.0, 0.9, m));
}

TEST_CASE("strong friction decays without oscillation near the node") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (double nu : {3.0, 5.0}) {
        // After a few slow time constants only the slow eigen-direction is left.
        const double slow = (nu - std::sqrt(nu * nu - 4.0)) / 2.0;
        const double transient = 3.0 / slow;
        for (int k = 0; k < 20; ++k) {
            IntegratorOptions opts;
            int sign_changes = 0;
            double last_v = 0.0;
            opts.on_step = [&](const CharState& s) {
                if (s.t > transient && last_v != 0.0 && s.v * last_v < 0.0) ++sign_changes;
                last_v = s.v;
                return true;
            };
            const double v0 = u(rng), e0 = u(rng);
            const auto tr = integrate_characteristic(CharSystem::friction(nu), start(0, 0, v0, e0), 60.0, opts);
            CHECK_FALSE(tr.report.blew_up);
            CHECK(sign_changes == 0);
            CHECK(std::hypot(tr.final_state.v, tr.final_state.e) < 1e-3 * std::hypot(v0, e0));
        }
    }
}

TEST_CASE("nu = 0 boundary traced by rays matches the delta = 0 parabola") {
    SeparatrixOptions opts;
    opts.rays = 180;
    opts.membership.horizon = 2.0 * pi + 1.0;
    const auto poly = trace_separatrix(0.0, opts);
    REQUIRE(poly.size() > 50);
    // Traced points lie on the curve.
    double to_curve = 0.0;
    for (const auto& p : poly) {
        double best = INFINITY;
        for (int i = 0; i <= 40000; ++i) {
            const double v = -2.0 + 4.0 * i / 40000.0;
            best = std::min(best, std::hypot(p.e - (1.0 - v * v) / 2.0, p.v - v));
        }
        to_curve = std::max(to_curve, best);
    }
    CHECK(to_curve < 1e-3);
    // The curve inside the window is covered by the polyline.
    double to_poly = 0.0;
    for (int i = 0; i <= 2000; ++i) {
        const double v = -2.0 + 4.0 * i / 2000.0;
        const PhasePoint c{(1.0 - v * v) / 2.0, v};
        double best = INFINITY;
        for (std::size_t k = 0; k + 1 < poly.size(); ++k)
            best = std::min(best, point_segment_distance(c, poly[k], poly[k + 1]));
        to_poly = std::max(to_poly, best);
    }
    CHECK(to_poly < 1e-3);
}

TEST_CASE("nu = 0.5 boundary encloses the nu = 0 domain") {
    SeparatrixOptions opts;
    opts.rays = 72;
    opts.membership.horizon = 30.0;
    const auto poly = trace_separatrix(0.5, opts);
    REQUIRE(poly.size() > 10);
    int strictly_outside = 0;
    for (const auto& p : poly) {
        CHECK(delta(p.v, p.e) > -2e-4);
        if (delta(p.v, p.e) > 1e-2) ++strictly_outside;
    }
    CHECK(strictly_outside > 0);
}

TEST_CASE("nu = 3 separatrix runs through the saddle and splits the plane") {
    SeparatrixOptions opts;
    const auto poly = trace_separatrix(3.0, opts);
    const double v_saddle = -(3.0 - std::sqrt(5.0)) / 2.0;
    bool through_saddle = false;
    for (const auto& p : poly) {
        if (std::hypot(p.e - 1.0, p.v - v_saddle) < 1e-9) through_saddle = true;
        // Inside [-2, 2]^2 the unstable node is out of view and the boundary is the line e = 1.
        CHECK(p.e == 1.0);
    }
    CHECK(through_saddle);

    // A taller window also shows the curve below the unstable node. Nudging
    // across any traced point flips the verdict.
    opts.v_min = -4.0;
    opts.e_min = -4.0;
    opts.rays = 40;
    const auto tall = trace_separatrix(3.0, opts);
    MembershipOptions m;
    int checked = 0, below_node = 0;
    const std::size_t stride = std::max<std::size_t>(1, tall.size() / 40);
    for (std::size_t k = 1; k + 1 < tall.size(); ++k) {
        const auto& p = tall[k];
        const bool off_line = p.e < 0.99;
        if (!off_line && k % stride != 0) continue;
        const double te = tall[k + 1].e - tall[k - 1].e, tv = tall[k + 1].v - tall[k - 1].v;
        const double len = std::hypot(te, tv);
        if (len == 0.0) continue;
        const double ne = -tv / len * 2e-3, nv = te / len * 2e-3;
        const bool a = smoothness_membership(3.0, p.v + nv, p.e + ne, m);
        const bool b = smoothness_membership(3.0, p.v - nv, p.e - ne, m);
        CHECK(a != b);
        ++checked;
        if (off_line) ++below_node;
    }
    CHECK(checked >= 40);
    CHECK(below_node >= 10);
}

TEST_CASE("criterion sweep rows") {
    const auto rows = criterion_sweep(CharSystem::original(), -2.0, 2.0, 5, 20.0);
    REQUIRE(rows.size() == 25);
    for (const auto& r : rows) {
        CHECK(r.delta == doctest::Approx(delta(r.v0, r.e0)));
        if (std::abs(r.delta) > 1e-2) CHECK(r.blew_up == (r.delta > 0.0));
        CHECK(r.t_star.has_value() == r.blew_up);
    }
}
