#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eplab/fields.hpp"

namespace eplab {

struct ColeHopfSeries {
    /// Midpoints of consecutive snapshot pairs.
    std::vector<double> t;
    /// sup |z_t - mu z_xx - Psi z| / sup |z| over interior nodes.
    std::vector<double> residual;

    double max() const;
};

/// Residual of the linear equation z_t = mu z_xx + Psi z for z = exp(-U/(2 mu)),
/// U_x = V, Psi = (1/(2 mu)) int E. Both antiderivatives are anchored at the
/// left window edge, where the data vanish. `psi_shift` adds a constant to Psi
/// (a gauge error, useful as a negative control).
ColeHopfSeries cole_hopf_residual(const RunResult& run, double mu, double psi_shift = 0.0);

/// sup |(V, E)(2 pi) - (V, E)(0)| for an unregularized run with a snapshot at 2 pi.
double periodicity_check(const RunResult& run);

/// 10 (h^2 + dt^4) max(|V|, |E|) at t = 0, with dt the mean solver step.
double periodicity_budget(const RunResult& run);

struct ReconcilePoint {
    double x = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool criterion_blowup = false;
    /// |lhs - rhs| below the band width.
    bool boundary = false;
};

struct ReconciliationReport {
    std::vector<ReconcilePoint> points;
    bool pressure = false;
    /// Location and value of the largest lhs - rhs.
    double argmax_x = 0.0;
    double max_margin = 0.0;
    bool criterion_blowup = false;
    bool solver_blowup = false;
    std::optional<double> t_star;
    std::string trigger;
    double t_end = 0.0;
    bool agree = false;
    /// The deciding point lies inside the boundary band.
    bool in_band = false;

    bool failed() const noexcept { return !agree && !in_band; }
};

/// Evaluates the pointwise criterion (v0^2 + 2 e0 - 1 when no regularizer is
/// on, the pressure form when only pressure is on) and runs the solver with `cfg`.
ReconciliationReport reconcile_criterion(const InitialData& init, const SolverConfig& cfg, double band = 1e-2);

/// max over the grid of lhs - rhs for the given data.
double max_criterion_margin(const InitialData& init, const Grid1D& grid, double alpha, double gamma);

/// Amplitude `a` at which the max criterion margin crosses zero, by bisection on [lo, hi].
double critical_amplitude(Preset preset, PresetParams params, const Grid1D& grid, double alpha, double gamma,
                          double lo, double hi, double tol = 1e-8);

}  // namespace eplab
