#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "eplab/state.hpp"

namespace eplab {

/// Stochastic characteristics dX = V dt + sigma dW, d(V, E) = Q (V, E) dt.
struct ParticleEnsemble {
    std::vector<double> X, V, E;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    double t = 0.0;
    /// Number of steps taken; part of the noise counter.
    std::uint64_t step = 0;

    std::size_t size() const noexcept { return X.size(); }
};

/// Initial spatial law f0 on [lo, hi] (not necessarily normalized).
struct SpatialDensity {
    std::function<double(double)> f;
    double lo = -1.0, hi = 1.0;

    static SpatialDensity uniform(double lo, double hi);
    static SpatialDensity gaussian(double mean, double sd);
};

/// X ~ f0 by inverse CDF on a fine table, V = V0(X), E = E0(X).
ParticleEnsemble init_ensemble(const InitialData& init, const SpatialDensity& f0, std::size_t n, double sigma,
                               std::uint64_t seed, unsigned threads = 1);

/// One step: exact rotation of (V, E) and X += int V dt + sigma sqrt(dt) xi.
void step_ensemble(ParticleEnsemble& ens, double dt, unsigned threads = 1);
/// Steps of size at most dt until ens.t reaches t_target.
void advance_ensemble(ParticleEnsemble& ens, double t_target, double dt, unsigned threads = 1);

struct MomentFields {
    Grid1D grid = Grid1D::standard(8);
    double t = 0.0;
    Field rho;
    /// NaN where rho is below the floor.
    Field Vhat, Ehat;
    double bandwidth = 0.0;
    /// Fraction of max rho below which Vhat and Ehat are undefined.
    double floor = 1e-6;

    bool defined(std::size_t i) const { return !std::isnan(Vhat[i]); }
    double max_rho() const;
    /// Trapezoid integral of rho over the grid window.
    double mass() const;
};

/// Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) N^(-1/5).
double silverman_bandwidth(const std::vector<double>& x);

/// Gaussian KDE of rho and Nadaraya-Watson means of V and E on `grid`.
/// Sums at each grid point run over particles in a fixed (sorted) order, so
/// the result does not depend on `threads`.
MomentFields estimate_moments(const ParticleEnsemble& ens, const Grid1D& grid,
                              std::optional<double> bandwidth = std::nullopt, unsigned threads = 1);

/// Deterministic Eulerian (V, E) at time t, pushed forward from the initial
/// data along characteristics. Valid while the flow map stays monotone.
struct Reference {
    Field V, E;
};
Reference characteristic_reference(const InitialData& init, const Grid1D& grid, double t, std::size_t labels = 20001);

struct ConvergenceRow {
    double sigma = 0.0;
    double t = 0.0;
    double err_V = 0.0;
    double err_E = 0.0;
    /// Same seed and bandwidth with sigma = 0: sampling plus smoothing error.
    double floor_V = 0.0;
    double floor_E = 0.0;
    double corrected_V() const { return std::max(0.0, err_V - floor_V); }
    double corrected_E() const { return std::max(0.0, err_E - floor_E); }
    /// False once the deterministic flow map folds (past blow-up); errors are NaN then.
    bool reference_valid = true;
    bool finite = true;
    double max_rho = 0.0;
    double max_abs_Vhat = 0.0;
    double max_abs_Ehat = 0.0;
};

struct ConvergenceOptions {
    Grid1D grid = Grid1D(-10.0, 10.0, 512);
    SpatialDensity f0 = SpatialDensity::uniform(-6.0, 6.0);
    double dt = 0.01;
    std::uint64_t seed = 1;
    std::optional<double> bandwidth;
    /// Error is measured where rho exceeds this fraction of max rho.
    double region = 1e-6;
    unsigned threads = 1;
};

/// Sup-norm distance of (Vhat, Ehat) to the deterministic reference at each
/// checkpoint, for each sigma (all sigma > 0), with paired seeds.
std::vector<ConvergenceRow> convergence_study(const InitialData& init, const std::vector<double>& sigmas,
                                              std::size_t n, const std::vector<double>& t_checkpoints,
                                              const ConvergenceOptions& opts = {});

/// Discrete residual of rho_t + (rho Vhat)_x - (sigma^2/2) rho_xx between two
/// moment fields on the same grid (midpoint in time). Edge points are zero.
Field moment_residual(const MomentFields& m0, const MomentFields& m1, double dt, double sigma);

/// Flat binary checkpoint, little-endian: u64 N, f64 sigma, u64 seed, f64 t,
/// u64 step, then X, V, E as N f64 each.
void write_checkpoint(const ParticleEnsemble& ens, const std::string& path);
ParticleEnsemble read_checkpoint(const std::string& path);

}  // namespace eplab
