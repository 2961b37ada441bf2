#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eplab/error.hpp"

namespace eplab {

using Field = std::vector<double>;

/// Uniform periodic grid. Node i sits at x_min + i*spacing for i in [0, n_cells);
/// x_max is identified with x_min.
class Grid1D {
public:
    Grid1D(double x_min, double x_max, int n_cells);

    /// Default computational window [-20, 20].
    static Grid1D standard(int n_cells) { return Grid1D(-20.0, 20.0, n_cells); }

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    int n_cells() const noexcept { return n_cells_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(n_cells_); }
    double spacing() const noexcept { return spacing_; }
    double length() const noexcept { return x_max_ - x_min_; }
    double x(std::size_t i) const noexcept { return x_min_ + static_cast<double>(i) * spacing_; }
    std::vector<double> nodes() const;

    /// Same window, n_cells multiplied by `factor`.
    Grid1D refined(int factor) const { return Grid1D(x_min_, x_max_, n_cells_ * factor); }

    bool operator==(const Grid1D& other) const noexcept {
        return x_min_ == other.x_min_ && x_max_ == other.x_max_ && n_cells_ == other.n_cells_;
    }

private:
    double x_min_;
    double x_max_;
    int n_cells_;
    double spacing_;
};

// Periodic finite differences on a Grid1D.
void central_dx(std::span<const double> f, double h, std::span<double> out);
void central_dxx(std::span<const double> f, double h, std::span<double> out);
Field central_dx(std::span<const double> f, double h);
Field central_dxx(std::span<const double> f, double h);

/// n = 1 - D_x E with the periodic centered difference.
Field reconstruct_density(std::span<const double> E, const Grid1D& grid);

struct FieldState {
    double t = 0.0;
    Field V;
    Field E;

    Field density(const Grid1D& grid) const { return reconstruct_density(E, grid); }
};

/// Solution values and their x-derivatives carried along one characteristic.
struct CharState {
    double t = 0.0;
    double x = 0.0;
    double V = 0.0;
    double E = 0.0;
    double v = 0.0;
    double e = 0.0;
    bool blown_up = false;
};

enum class Preset { LaserPulse, GaussianE, Zero, CustomTable };

Preset parse_preset(std::string_view name);
std::string_view preset_name(Preset preset);

struct SampleTable {
    std::vector<double> x;
    std::vector<double> V;
    std::vector<double> E;
};

struct PresetParams {
    /// Amplitude: laser pulse a in E0 = sign * a * (exp(-x^2))', or Gaussian height.
    double a = 0.0;
    /// Gaussian width s in exp(-x^2 / s^2).
    double s = 1.0;
    /// Gaussian velocity amplitude: V0 = b * exp(-x^2 / s^2).
    double b = 0.0;
    /// Laser pulse sign convention. +1 follows E0 = a (exp(-x^2))' literally;
    /// -1 gives E0 = -dPhi0/dx for Phi0 = a exp(-x^2).
    double sign = 1.0;
    std::optional<SampleTable> table;
};

/// Initial data together with its analytic x-derivatives.
struct InitialData {
    Preset preset = Preset::Zero;
    PresetParams params;
    std::function<double(double)> V0;
    std::function<double(double)> E0;
    std::function<double(double)> v0;   ///< V0'
    std::function<double(double)> e0;   ///< E0'
    std::function<double(double)> e0p;  ///< E0''

    FieldState sample(const Grid1D& grid) const;
    /// max(|V0|, |E0|) at the two window edges.
    double edge_magnitude(const Grid1D& grid) const;
};

InitialData make_initial_data(Preset preset, const PresetParams& params);

struct DensityFriction {
    double nu0 = 0.0;
    double gamma = 1.0;
};

/// Extra terms added to the pressureless cold-plasma system.
struct RegularizerSpec {
    double nu_const = 0.0;                      ///< -nu V
    std::optional<DensityFriction> nu_density;  ///< -nu0 n^gamma V
    double alpha = 0.0;                         ///< -alpha (1/n) d/dx (n^gamma_p / gamma_p)
    double gamma_p = 2.0;
    double mu = 0.0;                            ///< mu V_xx, or mu (V_x/n)_x when exotic
    bool exotic_viscosity = false;
    double kappa = 0.0;                         ///< kappa E_xx
    double b12 = 0.0;                           ///< literal B = (0 b12; 0 0) coupling, b12 E_xx in the V equation
    bool allow_combinations = false;

    bool all_off() const noexcept;
    bool pressure_only() const noexcept;
    /// nu_const + nu0 n^gamma.
    double friction(double n) const noexcept;
    /// Throws InvalidArgument when a coefficient is out of range or the set of
    /// active factors is not an accepted combination.
    void validate() const;
};

}  // namespace eplab
