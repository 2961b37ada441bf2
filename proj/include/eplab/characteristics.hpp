#pragma once

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "eplab/state.hpp"

namespace eplab {

/// Characteristic ODE system: the pressureless original system, or the same
/// system with constant friction nu.
struct CharSystem {
    double nu = 0.0;

    static CharSystem original() { return {0.0}; }
    static CharSystem friction(double nu);
    bool is_original() const noexcept { return nu == 0.0; }
};

enum class Witness { None, V, E, Both };
std::string_view witness_name(Witness w);

struct BlowupReport {
    bool blew_up = false;
    std::optional<double> t_star;
    Witness witness = Witness::None;
};

struct IntegratorOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double min_step = 1e-14;
    double max_step = 0.1;
    /// |v| or |e| above this counts as blow-up.
    double blowup_threshold = 1e8;
    /// > 0: record states at multiples of sample_dt (and at t_end).
    double sample_dt = 0.0;
    /// Record every accepted step (ignored when sample_dt > 0).
    bool record_steps = false;
    /// Called after every accepted step; returning false stops integration
    /// without a blow-up verdict.
    std::function<bool(const CharState&)> on_step;
};

struct Trajectory {
    std::vector<CharState> samples;
    CharState final_state;
    BlowupReport report;
};

/// Criterion value v0^2 + 2 e0 - 1; negative means smooth along this characteristic.
inline double delta(double v0, double e0) { return v0 * v0 + 2.0 * e0 - 1.0; }

struct DeltaP {
    double lhs = 0.0;
    double rhs = 0.0;
    bool smooth() const noexcept { return lhs < rhs; }
};

/// Pressure criterion: lhs = v0^2 + 2 e0 - 1, rhs = alpha e0'^2 / (1 - e0)^(3 - gamma).
DeltaP delta_p(double v0, double e0, double e0p, double alpha, double gamma);

/// Adaptive Dormand-Prince integration of (x, V, E, v, e) along one
/// characteristic. Stops at the blow-up threshold and fits t_star there.
/// Throws ErrorCode::Stiffness when the step underflows without blow-up.
Trajectory integrate_characteristic(const CharSystem& system, const CharState& init, double t_end,
                                    const IntegratorOptions& opts = {});

/// Fits |w(t)| ~ C / (T - t)^p to the samples of the last decade of growth
/// and returns T. Samples must be ordered in t with |w| growing.
std::optional<double> fit_blowup_time(const std::vector<double>& t, const std::vector<double>& w);

enum class EquilibriumKind { Center, StableFocus, UnstableFocus, StableNode, Saddle, UnstableNode, SaddleNode };
std::string_view equilibrium_kind_name(EquilibriumKind kind);

/// Equilibrium of the closed (e, v) subsystem of the friction system.
struct Equilibrium {
    double e = 0.0;
    double v = 0.0;
    EquilibriumKind kind = EquilibriumKind::Center;
    std::array<std::complex<double>, 2> eigenvalues;
};

/// Jacobian of (e', v') = (v(1-e), -e - v^2 - nu v) with rows/cols ordered (e, v).
std::array<std::array<double, 2>, 2> phase_jacobian(double nu, double e, double v);
std::array<std::complex<double>, 2> eigenvalues2(const std::array<std::array<double, 2>, 2>& J);
/// Kind implied by a pair of eigenvalues; |Re| or |Im| below tol counts as zero.
EquilibriumKind classify_eigenvalues(const std::array<std::complex<double>, 2>& lambda, double tol = 1e-9);

std::vector<Equilibrium> classify_equilibria(double nu);

struct PhasePoint {
    double e = 0.0;
    double v = 0.0;
};

struct MembershipOptions {
    double horizon = 50.0;
    IntegratorOptions integrator;
};

/// True when the characteristic started at (v0, e0) survives to the horizon
/// under friction nu. The (v, e) subsystem is closed, so V and E start at 0.
bool smoothness_membership(double nu, double v0, double e0, const MembershipOptions& opts = {});

struct SeparatrixOptions {
    /// Phase window (e and v ranges) the boundary is traced in.
    double e_min = -2.0, e_max = 2.0, v_min = -2.0, v_max = 2.0;
    /// Rays from the origin (nu <= 2).
    int rays = 360;
    /// Bisection tolerance in the phase plane.
    double tolerance = 1e-4;
    /// Rays longer than this are not searched.
    double max_radius = 1e3;
    /// Eigenvector displacement for the manifold construction (nu > 2).
    double epsilon = 1e-6;
    MembershipOptions membership;
    unsigned threads = 0;
};

/// Boundary of the smoothness domain in the (e, v) plane, ordered along the curve.
std::vector<PhasePoint> trace_separatrix(double nu, const SeparatrixOptions& opts = {});

struct SweepRow {
    double v0 = 0.0;
    double e0 = 0.0;
    double delta = 0.0;
    bool blew_up = false;
    std::optional<double> t_star;
};

/// Criterion against direct integration on a uniform (v0, e0) grid.
std::vector<SweepRow> criterion_sweep(const CharSystem& system, double lo, double hi, int points_per_axis,
                                      double t_end, const IntegratorOptions& opts = {}, unsigned threads = 0);

}  // namespace eplab
