#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eplab/characteristics.hpp"
#include "eplab/state.hpp"

namespace eplab {

enum class Advection { Upwind, Central };
Advection parse_advection(std::string_view name);
std::string_view advection_name(Advection a);

struct Thresholds {
    /// max|V_x| > vx_factor * (max|V_x(0)| + 1).
    double vx_factor = 1e4;
    double min_density = 1e-6;
    double max_density = 1e6;
    /// A grid cannot carry gradients steeper than ~range/h, so the absolute
    /// bounds are out of reach on desk-size grids. A one-cell jump of V or E
    /// above this fraction of the largest range seen so far counts as blow-up.
    /// The bar is raised to three times the initial ratio on coarse grids.
    double steepness = 0.1;
    /// Exotic viscosity: min(V_x / n) below -exotic.
    double exotic = 1e4;
};

struct SolverConfig {
    Grid1D grid = Grid1D::standard(1024);
    double cfl = 0.4;
    double t_end = 10.0;
    /// Snapshot spacing; 0 keeps only the initial and final states.
    double output_dt = 0.0;
    RegularizerSpec reg;
    Advection advection = Advection::Upwind;
    /// Fourth-difference damping used with central advection.
    double filter = 1.0 / 32.0;
    Thresholds thresholds;
    /// Step budget; exceeding it is a numerical breakdown.
    long max_steps = 20'000'000;
    unsigned threads = 1;
};

/// Per-step monitor values.
struct SeriesPoint {
    double t = 0.0;
    double max_vx = 0.0;
    double max_nx = 0.0;
    double max_ex = 0.0;
    double min_n = 1.0;
    double max_n = 1.0;
    double min_vx_over_n = 0.0;
    /// Largest one-cell increment of E.
    double max_de = 0.0;
};

struct RunResult {
    Grid1D grid = Grid1D::standard(8);
    RegularizerSpec reg;
    std::vector<FieldState> snapshots;
    std::vector<SeriesPoint> series;
    BlowupReport report;
    /// Threshold that stopped the run: "V_x", "steepness", "n_min", "n_max", "n<=0", "V_x/n", or empty.
    std::string trigger;
    long steps = 0;
};

/// Thrown when the state stops being finite; carries the last finite state.
class BreakdownError : public Error {
public:
    BreakdownError(const std::string& what, FieldState last)
        : Error(ErrorCode::NumericalBreakdown, what), last_(std::move(last)) {}
    const FieldState& last_valid() const noexcept { return last_; }

private:
    FieldState last_;
};

struct Rates {
    Field dV;
    Field dE;
};

/// Semi-discrete right-hand side. Throws DensityBreakdown when n <= 0 where a
/// density-dependent term needs it.
Rates rhs(const FieldState& state, const RegularizerSpec& reg, const Grid1D& grid,
          Advection advection = Advection::Upwind, double filter = 1.0 / 32.0);

/// Stable step for the current state.
double stable_step(const FieldState& state, const SolverConfig& cfg);

RunResult solve(const InitialData& init, const SolverConfig& cfg);
RunResult solve(const FieldState& init, const SolverConfig& cfg);

struct ThresholdRow {
    double gamma = 0.0;
    /// lim eta f'(eta)/f(eta) for f = eta^gamma.
    double limit = 0.0;
    /// Whether the integral of f(eta)/eta^2 diverges at infinity.
    bool integral_diverges = false;
    bool admissible = false;
    bool blew_up = false;
    std::optional<double> t_star;
    std::string trigger;
};

/// Runs nu(n) = nu0 n^gamma for each gamma on the data and grid in `base`.
std::vector<ThresholdRow> check_density_friction_threshold(const InitialData& init, double nu0,
                                                           const std::vector<double>& gammas,
                                                           const SolverConfig& base);

enum class SingularityKind { Bounded, Catastrophe, Strong, Jump, Weak, Smooth };
std::string_view singularity_kind_name(SingularityKind k);

struct RefinementSample {
    int n_cells = 0;
    double t_detect = 0.0;
    std::optional<double> t_star;
    double max_vx = 0.0;
    double max_nx = 0.0;
    double max_ex = 0.0;
    double max_n = 0.0;
    double max_de = 0.0;
};

struct SingularityType {
    SingularityKind V = SingularityKind::Bounded;
    SingularityKind n = SingularityKind::Bounded;
    SingularityKind E = SingularityKind::Smooth;
    std::vector<RefinementSample> samples;
};

/// Re-runs `base` on each refinement and types the singularity from how the
/// monitors at detection scale with the grid. `run` must have blown up.
/// Throws Inconclusive when blow-up times spread by more than 20%.
SingularityType classify_singularity(const InitialData& init, const SolverConfig& base, const RunResult& run,
                                     const std::vector<Grid1D>& refinements);

struct ExoticSeries {
    std::vector<double> t;
    std::vector<double> min_vx_over_n;
    bool blew_up = false;
    std::optional<double> t_star;
};

ExoticSeries exotic_viscosity_indicator(const RunResult& run, double threshold = 1e4);

}  // namespace eplab
