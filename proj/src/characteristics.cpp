#include "eplab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>

#include "dopri5.hpp"
#include "eplab/parallel.hpp"

namespace eplab {

CharSystem CharSystem::friction(double nu) {
    require(std::isfinite(nu) && nu >= 0.0, "friction coefficient must be finite and non-negative");
    return {nu};
}

std::string_view witness_name(Witness w) {
    switch (w) {
        case Witness::None: return "none";
        case Witness::V: return "v";
        case Witness::E: return "e";
        case Witness::Both: return "both";
    }
    return "none";
}

DeltaP delta_p(double v0, double e0, double e0p, double alpha, double gamma) {
    require(std::isfinite(v0) && std::isfinite(e0) && std::isfinite(e0p), "delta_p: inputs must be finite");
    require(alpha >= 0.0, "delta_p: alpha must be non-negative");
    require(gamma > 1.0, "delta_p: gamma must exceed 1");
    if (e0 >= 1.0) fail(ErrorCode::InvalidDensity, "delta_p: e0 >= 1 means non-positive initial density");
    DeltaP d;
    d.lhs = delta(v0, e0);
    d.rhs = alpha == 0.0 ? 0.0 : alpha * e0p * e0p / std::pow(1.0 - e0, 3.0 - gamma);
    return d;
}

std::optional<double> fit_blowup_time(const std::vector<double>& t, const std::vector<double>& w) {
    const std::size_t n = std::min(t.size(), w.size());
    if (n < 5) return std::nullopt;
    const double w_last = std::abs(w[n - 1]);
    std::size_t first = n - 1;
    while (first > 0 && std::abs(w[first - 1]) >= 0.1 * w_last && std::abs(w[first - 1]) <= std::abs(w[first]))
        --first;
    if (n - first < 5) return std::nullopt;

    // Linear fit of 1/|w| against t gives the starting guess.
    double st = 0, sy = 0, stt = 0, sty = 0;
    const double m = static_cast<double>(n - first);
    const double t_ref = t[n - 1];
    for (std::size_t k = first; k < n; ++k) {
        const double tk = t[k] - t_ref;
        const double yk = 1.0 / std::abs(w[k]);
        st += tk;
        sy += yk;
        stt += tk * tk;
        sty += tk * yk;
    }
    const double denom = m * stt - st * st;
    if (denom <= 0.0) return std::nullopt;
    const double slope = (m * sty - st * sy) / denom;
    const double icept = (sy - slope * st) / m;
    if (!(slope < 0.0)) return std::nullopt;
    const double span = t[n - 1] - t[first];
    double s0 = -icept / slope;  // T - t_last
    if (!(s0 > 0.0) || !std::isfinite(s0)) s0 = 1e-3 * std::max(span, 1e-300);

    // Least squares of log|w| on log(T - t) with T free.
    auto residual = [&](double log_s) {
        const double s = std::exp(log_s);
        double sx = 0, syy = 0, sxx = 0, sxy = 0, yy = 0;
        for (std::size_t k = first; k < n; ++k) {
            const double x = std::log((t_ref - t[k]) + s);
            const double y = std::log(std::abs(w[k]));
            sx += x;
            syy += y;
            sxx += x * x;
            sxy += x * y;
            yy += y * y;
        }
        const double d = m * sxx - sx * sx;
        if (d <= 0.0) return 1e300;
        const double p = (m * sxy - sx * syy) / d;
        const double c = (syy - p * sx) / m;
        return yy - 2 * c * syy - 2 * p * sxy + m * c * c + 2 * c * p * sx + p * p * sxx;
    };
    double a = std::log(s0) - std::log(100.0);
    double b = std::log(s0) + std::log(100.0);
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = residual(x1), f2 = residual(x2);
    for (int it = 0; it < 120; ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = residual(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = residual(x2);
        }
    }
    return t_ref + std::exp(0.5 * (a + b));
}

Trajectory integrate_characteristic(const CharSystem& system, const CharState& init, double t_end,
                                    const IntegratorOptions& opts) {
    require(t_end > init.t, "integrate_characteristic: t_end must exceed the start time");
    require(opts.blowup_threshold > 0.0, "integrate_characteristic: blow-up threshold must be positive");
    const double nu = system.nu;
    auto rhs = [nu](double, const std::array<double, 5>& y, std::array<double, 5>& dy) {
        dy[0] = y[1];
        dy[1] = -y[2] - nu * y[1];
        dy[2] = y[1];
        dy[3] = -y[4] - y[3] * y[3] - nu * y[3];
        dy[4] = y[3] * (1.0 - y[4]);
    };
    auto to_state = [](double t, const std::array<double, 5>& y) {
        CharState s;
        s.t = t;
        s.x = y[0];
        s.V = y[1];
        s.E = y[2];
        s.v = y[3];
        s.e = y[4];
        return s;
    };

    Trajectory traj;
    std::array<double, 5> y{init.x, init.V, init.E, init.v, init.e};
    traj.samples.push_back(to_state(init.t, y));

    constexpr std::size_t history_cap = 4096;
    std::deque<std::array<double, 3>> history;  // t, |v|, |e|
    bool blew = false;
    bool user_stop = false;
    Witness witness = Witness::None;

    auto observer = [&](double t, const std::array<double, 5>& yy) {
        history.push_back({t, std::abs(yy[3]), std::abs(yy[4])});
        if (history.size() > history_cap) history.pop_front();
        const bool bv = std::abs(yy[3]) > opts.blowup_threshold;
        const bool be = std::abs(yy[4]) > opts.blowup_threshold;
        const CharState s = to_state(t, yy);
        if (opts.record_steps && opts.sample_dt <= 0.0) traj.samples.push_back(s);
        if (bv || be) {
            blew = true;
            witness = bv && be ? Witness::Both : (bv ? Witness::V : Witness::E);
            return false;
        }
        if (opts.on_step && !opts.on_step(s)) {
            user_stop = true;
            return false;
        }
        return true;
    };

    detail::OdeOptions ode;
    ode.rtol = opts.rtol;
    ode.atol = opts.atol;
    ode.min_step = opts.min_step;
    ode.max_step = opts.max_step;
    ode.initial_step = std::min(1e-3, opts.max_step);

    double t = init.t;
    detail::OdeResult res;
    while (t < t_end && !blew && !user_stop) {
        double target = t_end;
        if (opts.sample_dt > 0.0) {
            const double k = std::floor((t - init.t) / opts.sample_dt + 1e-9) + 1.0;
            target = std::min(t_end, init.t + k * opts.sample_dt);
        }
        res = detail::dopri5<5>(rhs, y, t, target, ode, observer);
        t = res.t;
        if (res.next_step > 0.0) ode.initial_step = res.next_step;
        if (res.status == detail::OdeStatus::StepUnderflow) {
            fail(ErrorCode::Stiffness, "integrate_characteristic: step underflow at t=" + std::to_string(t) +
                                           " without crossing the blow-up threshold");
        }
        if (res.status == detail::OdeStatus::TooManySteps) {
            fail(ErrorCode::Stiffness, "integrate_characteristic: step budget exhausted at t=" + std::to_string(t));
        }
        if (opts.sample_dt > 0.0 && res.status == detail::OdeStatus::Reached) traj.samples.push_back(to_state(t, y));
    }

    traj.final_state = to_state(t, y);
    traj.final_state.blown_up = blew;
    traj.report.blew_up = blew;
    traj.report.witness = witness;
    if (blew) {
        std::vector<double> ts, ws;
        ts.reserve(history.size());
        ws.reserve(history.size());
        const int col = witness == Witness::E ? 2 : 1;
        for (const auto& h : history) {
            ts.push_back(h[0]);
            ws.push_back(h[col]);
        }
        traj.report.t_star = fit_blowup_time(ts, ws);
        if (!traj.report.t_star) traj.report.t_star = t;
        if (!traj.samples.empty() && traj.samples.back().t != t) traj.samples.push_back(traj.final_state);
        traj.samples.back().blown_up = true;
    }
    return traj;
}

std::string_view equilibrium_kind_name(EquilibriumKind kind) {
    switch (kind) {
        case EquilibriumKind::Center: return "center";
        case EquilibriumKind::StableFocus: return "stable_focus";
        case EquilibriumKind::UnstableFocus: return "unstable_focus";
        case EquilibriumKind::StableNode: return "stable_node";
        case EquilibriumKind::Saddle: return "saddle";
        case EquilibriumKind::UnstableNode: return "unstable_node";
        case EquilibriumKind::SaddleNode: return "saddle_node";
    }
    return "center";
}

std::array<std::array<double, 2>, 2> phase_jacobian(double nu, double e, double v) {
    return {{{-v, 1.0 - e}, {-1.0, -2.0 * v - nu}}};
}

std::array<std::complex<double>, 2> eigenvalues2(const std::array<std::array<double, 2>, 2>& J) {
    const double tr = J[0][0] + J[1][1];
    const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
    const double disc = tr * tr / 4.0 - det;
    if (disc >= 0.0) {
        const double r = std::sqrt(disc);
        return {std::complex<double>(tr / 2.0 - r, 0.0), std::complex<double>(tr / 2.0 + r, 0.0)};
    }
    const double im = std::sqrt(-disc);
    return {std::complex<double>(tr / 2.0, -im), std::complex<double>(tr / 2.0, im)};
}

EquilibriumKind classify_eigenvalues(const std::array<std::complex<double>, 2>& lambda, double tol) {
    const auto& a = lambda[0];
    const auto& b = lambda[1];
    if (std::abs(a.imag()) > tol || std::abs(b.imag()) > tol) {
        const double re = 0.5 * (a.real() + b.real());
        if (std::abs(re) <= tol) return EquilibriumKind::Center;
        return re < 0.0 ? EquilibriumKind::StableFocus : EquilibriumKind::UnstableFocus;
    }
    const double x = a.real(), y = b.real();
    if (std::abs(x) <= tol || std::abs(y) <= tol) return EquilibriumKind::SaddleNode;
    if ((x < 0.0) != (y < 0.0)) return EquilibriumKind::Saddle;
    return x < 0.0 ? EquilibriumKind::StableNode : EquilibriumKind::UnstableNode;
}

std::vector<Equilibrium> classify_equilibria(double nu) {
    require(std::isfinite(nu) && nu >= 0.0, "classify_equilibria: nu must be non-negative");
    auto make = [nu](double e, double v, EquilibriumKind kind) {
        Equilibrium q;
        q.e = e;
        q.v = v;
        q.kind = kind;
        q.eigenvalues = eigenvalues2(phase_jacobian(nu, e, v));
        return q;
    };
    std::vector<Equilibrium> out;
    if (nu == 0.0) {
        out.push_back(make(0.0, 0.0, EquilibriumKind::Center));
    } else if (nu < 2.0) {
        out.push_back(make(0.0, 0.0, EquilibriumKind::StableFocus));
    } else if (nu == 2.0) {
        out.push_back(make(0.0, 0.0, EquilibriumKind::StableNode));
        out.push_back(make(1.0, -1.0, EquilibriumKind::SaddleNode));
    } else {
        const double r = std::sqrt(nu * nu - 4.0);
        out.push_back(make(0.0, 0.0, EquilibriumKind::StableNode));
        out.push_back(make(1.0, -0.5 * (nu - r), EquilibriumKind::Saddle));
        out.push_back(make(1.0, -0.5 * (nu + r), EquilibriumKind::UnstableNode));
    }
    return out;
}

bool smoothness_membership(double nu, double v0, double e0, const MembershipOptions& opts) {
    require(std::isfinite(nu) && nu >= 0.0, "smoothness_membership: nu must be non-negative");
    CharState init;
    init.v = v0;
    init.e = e0;
    try {
        return !integrate_characteristic(CharSystem{nu}, init, opts.horizon, opts.integrator).report.blew_up;
    } catch (const Error& err) {
        if (err.code() == ErrorCode::Stiffness) return false;
        throw;
    }
}

namespace {

struct Box {
    double e_min, e_max, v_min, v_max;
    bool contains(double e, double v) const { return e >= e_min && e <= e_max && v >= v_min && v <= v_max; }
};

// Distance from the origin to the box edge along direction (de, dv).
double ray_extent(const Box& box, double de, double dv) {
    double r = std::numeric_limits<double>::infinity();
    if (de > 0) r = std::min(r, box.e_max / de);
    if (de < 0) r = std::min(r, box.e_min / de);
    if (dv > 0) r = std::min(r, box.v_max / dv);
    if (dv < 0) r = std::min(r, box.v_min / dv);
    return r;
}

struct RayHit {
    double theta;
    PhasePoint point;
};

std::optional<PhasePoint> bisect_ray(double nu, double theta, const Box& box, const SeparatrixOptions& opts) {
    const double de = std::cos(theta), dv = std::sin(theta);
    const double r_max = std::min(ray_extent(box, de, dv), opts.max_radius);
    auto member = [&](double r) { return smoothness_membership(nu, r * dv, r * de, opts.membership); };
    if (member(r_max)) return std::nullopt;
    double lo = 0.0, hi = r_max;
    while (hi - lo > opts.tolerance) {
        const double mid = 0.5 * (lo + hi);
        (member(mid) ? lo : hi) = mid;
    }
    const double r = 0.5 * (lo + hi);
    return PhasePoint{r * de, r * dv};
}

std::vector<PhasePoint> trace_by_rays(double nu, const Box& box, const SeparatrixOptions& opts) {
    const int k = opts.rays;
    const double two_pi = 2.0 * std::numbers::pi;
    std::vector<std::optional<PhasePoint>> coarse(static_cast<std::size_t>(k));
    parallel_for(coarse.size(), opts.threads, [&](std::size_t i) {
        coarse[i] = bisect_ray(nu, two_pi * static_cast<double>(i) / k, box, opts);
    });

    std::vector<RayHit> hits;
    for (int i = 0; i < k; ++i) {
        if (coarse[i]) hits.push_back({two_pi * i / k, *coarse[i]});
    }

    // Where the boundary leaves the window, bisect in angle between a ray that
    // brackets and one that does not.
    std::vector<std::pair<double, double>> edges;  // (bracketed theta, open theta)
    for (int i = 0; i < k; ++i) {
        const int j = (i + 1) % k;
        const double ti = two_pi * i / k;
        const double tj = ti + two_pi / k;
        if (coarse[i].has_value() != coarse[j].has_value()) {
            edges.emplace_back(coarse[i] ? ti : tj, coarse[i] ? tj : ti);
        }
    }
    std::vector<std::optional<RayHit>> refined(edges.size());
    parallel_for(edges.size(), opts.threads, [&](std::size_t m) {
        double in = edges[m].first, out = edges[m].second;
        std::optional<PhasePoint> best;
        for (int it = 0; it < 14; ++it) {
            const double mid = 0.5 * (in + out);
            auto p = bisect_ray(nu, mid, box, opts);
            if (p) {
                in = mid;
                best = p;
            } else {
                out = mid;
            }
        }
        if (best) refined[m] = RayHit{in, *best};
    });
    for (auto& r : refined)
        if (r) hits.push_back(*r);

    if (hits.size() < 2) {
        fail(ErrorCode::BracketFailure, "trace_separatrix: no smoothness boundary bracketed inside the window");
    }
    for (auto& h : hits) h.theta = std::fmod(h.theta + two_pi, two_pi);
    std::sort(hits.begin(), hits.end(), [](const RayHit& a, const RayHit& b) { return a.theta < b.theta; });

    // Start the polyline after the widest angular gap.
    std::size_t start = 0;
    double widest = -1.0;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const std::size_t j = (i + 1) % hits.size();
        double gap = hits[j].theta - hits[i].theta;
        if (gap <= 0.0) gap += two_pi;
        if (gap > widest) {
            widest = gap;
            start = j;
        }
    }
    std::vector<PhasePoint> out;
    out.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) out.push_back(hits[(start + i) % hits.size()].point);
    return out;
}

// Integrates the closed (e, v) subsystem forward (dir = +1) or backward (dir = -1),
// appending every accepted step until `keep_going` returns false.
template <class Keep>
void phase_flow(double nu, double dir, PhasePoint start, double t_max, std::vector<PhasePoint>& out, Keep keep_going) {
    auto rhs = [nu, dir](double, const std::array<double, 2>& y, std::array<double, 2>& dy) {
        dy[0] = dir * y[1] * (1.0 - y[0]);
        dy[1] = dir * (-y[0] - y[1] * y[1] - nu * y[1]);
    };
    std::array<double, 2> y{start.e, start.v};
    detail::OdeOptions ode;
    ode.max_step = 0.01;
    ode.initial_step = 1e-4;
    out.push_back(start);
    detail::dopri5<2>(rhs, y, 0.0, t_max, ode, [&](double, const std::array<double, 2>& yy) {
        const PhasePoint p{yy[0], yy[1]};
        out.push_back(p);
        return keep_going(p);
    });
}

std::vector<PhasePoint> trace_by_manifolds(double nu, const Box& box, const SeparatrixOptions& opts) {
    const double r = std::sqrt(nu * nu - 4.0);
    const double v_saddle = -0.5 * (nu - r);
    const double v_node = -0.5 * (nu + r);
    const double eps = opts.epsilon;

    // The saddle's stable direction is (0, 1), i.e. the invariant line e = 1.
    // Backward in time it runs up to v = +inf and down into the unstable node.
    std::vector<PhasePoint> upper;
    phase_flow(nu, -1.0, {1.0, v_saddle + eps}, 1e3, upper,
               [&](const PhasePoint& p) { return p.v <= box.v_max; });
    std::vector<PhasePoint> lower;
    phase_flow(nu, -1.0, {1.0, v_saddle - eps}, 1e3, lower,
               [&](const PhasePoint& p) { return p.v - v_node > eps && p.v >= box.v_min; });

    std::vector<PhasePoint> all;
    all.reserve(upper.size() + lower.size() + 2 * static_cast<std::size_t>(opts.rays));
    for (auto it = upper.rbegin(); it != upper.rend(); ++it) all.push_back(*it);
    all.push_back({1.0, v_saddle});
    all.insert(all.end(), lower.begin(), lower.end());

    // Below the node the boundary leaves e = 1 and bends towards e < 1; it is
    // not a local manifold, so locate it by bisection along lines v = const.
    if (v_node >= box.v_min) {
        all.push_back({1.0, v_node});
        const int rows = std::max(8, opts.rays / 2);
        const double dv = (v_node - box.v_min) / rows;
        std::vector<std::optional<PhasePoint>> found(static_cast<std::size_t>(rows));
        parallel_for(found.size(), opts.threads, [&](std::size_t i) {
            const double v = v_node - dv * static_cast<double>(i + 1);
            auto member = [&](double e) { return smoothness_membership(nu, v, e, opts.membership); };
            double lo = box.e_min, hi = 1.0 - opts.tolerance;
            if (!member(lo) || member(hi)) return;
            while (hi - lo > opts.tolerance) {
                const double mid = 0.5 * (lo + hi);
                (member(mid) ? lo : hi) = mid;
            }
            found[i] = PhasePoint{0.5 * (lo + hi), v};
        });
        for (const auto& f : found)
            if (f) all.push_back(*f);
    }

    std::vector<PhasePoint> out;
    for (const auto& p : all)
        if (box.contains(p.e, p.v)) out.push_back(p);
    if (out.size() < 2) fail(ErrorCode::BracketFailure, "trace_separatrix: separatrix does not enter the window");
    return out;
}

}  // namespace

std::vector<PhasePoint> trace_separatrix(double nu, const SeparatrixOptions& opts) {
    require(std::isfinite(nu) && nu >= 0.0, "trace_separatrix: nu must be non-negative");
    const Box box{opts.e_min, opts.e_max, opts.v_min, opts.v_max};
    require(box.contains(0.0, 0.0) && box.e_min < 0 && box.e_max > 0 && box.v_min < 0 && box.v_max > 0,
            "trace_separatrix: window must contain the origin in its interior");
    require(opts.rays >= 8, "trace_separatrix: need at least 8 rays");
    require(opts.tolerance > 0.0, "trace_separatrix: tolerance must be positive");
    if (nu > 2.0) return trace_by_manifolds(nu, box, opts);
    return trace_by_rays(nu, box, opts);
}

std::vector<SweepRow> criterion_sweep(const CharSystem& system, double lo, double hi, int points_per_axis,
                                      double t_end, const IntegratorOptions& opts, unsigned threads) {
    require(points_per_axis >= 2 && lo < hi, "criterion_sweep: need at least 2 points per axis on lo < hi");
    const std::size_t p = static_cast<std::size_t>(points_per_axis);
    std::vector<SweepRow> rows(p * p);
    const double step = (hi - lo) / static_cast<double>(points_per_axis - 1);
    IntegratorOptions local = opts;
    local.on_step = nullptr;
    local.record_steps = false;
    local.sample_dt = 0.0;
    parallel_for(rows.size(), threads, [&](std::size_t k) {
        SweepRow& row = rows[k];
        row.v0 = lo + step * static_cast<double>(k / p);
        row.e0 = lo + step * static_cast<double>(k % p);
        row.delta = delta(row.v0, row.e0);
        CharState init;
        init.v = row.v0;
        init.e = row.e0;
        try {
            const auto tr = integrate_characteristic(system, init, t_end, local);
            row.blew_up = tr.report.blew_up;
            row.t_star = tr.report.t_star;
        } catch (const Error& err) {
            if (err.code() != ErrorCode::Stiffness) throw;
            row.blew_up = true;
        }
    });
    return rows;
}

}  // namespace eplab
