#include "eplab/state.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace eplab {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::InvalidDensity: return "invalid_density";
        case ErrorCode::Stiffness: return "stiffness";
        case ErrorCode::BracketFailure: return "bracket_failure";
        case ErrorCode::DensityBreakdown: return "density_breakdown";
        case ErrorCode::NumericalBreakdown: return "numerical_breakdown";
        case ErrorCode::Inconclusive: return "inconclusive";
        case ErrorCode::EmptyEstimate: return "empty_estimate";
        case ErrorCode::GridMismatch: return "grid_mismatch";
        case ErrorCode::Overflow: return "overflow";
        case ErrorCode::RunTooShort: return "run_too_short";
        case ErrorCode::Precondition: return "precondition";
        case ErrorCode::Io: return "io";
    }
    return "unknown";
}

Grid1D::Grid1D(double x_min, double x_max, int n_cells)
    : x_min_(x_min), x_max_(x_max), n_cells_(n_cells), spacing_(0.0) {
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_min < x_max,
            "grid: x_min must be below x_max");
    require(n_cells >= 8, "grid: n_cells must be at least 8");
    spacing_ = (x_max - x_min) / n_cells;
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> xs(size());
    for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = x(i);
    return xs;
}

void central_dx(std::span<const double> f, double h, std::span<double> out) {
    const std::size_t n = f.size();
    const double inv = 0.5 / h;
    out[0] = (f[1] - f[n - 1]) * inv;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv;
    out[n - 1] = (f[0] - f[n - 2]) * inv;
}

void central_dxx(std::span<const double> f, double h, std::span<double> out) {
    const std::size_t n = f.size();
    const double inv = 1.0 / (h * h);
    out[0] = (f[1] - 2.0 * f[0] + f[n - 1]) * inv;
    for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    out[n - 1] = (f[0] - 2.0 * f[n - 1] + f[n - 2]) * inv;
}

Field central_dx(std::span<const double> f, double h) {
    Field out(f.size());
    central_dx(f, h, out);
    return out;
}

Field central_dxx(std::span<const double> f, double h) {
    Field out(f.size());
    central_dxx(f, h, out);
    return out;
}

Field reconstruct_density(std::span<const double> E, const Grid1D& grid) {
    require(E.size() == grid.size(), "reconstruct_density: field size does not match grid");
    Field n = central_dx(E, grid.spacing());
    for (double& v : n) v = 1.0 - v;
    return n;
}

Preset parse_preset(std::string_view name) {
    if (name == "laser_pulse" || name == "laser") return Preset::LaserPulse;
    if (name == "gaussian_e" || name == "gaussian") return Preset::GaussianE;
    if (name == "zero") return Preset::Zero;
    if (name == "custom_table" || name == "table") return Preset::CustomTable;
    fail(ErrorCode::InvalidArgument, "unknown preset '" + std::string(name) + "'");
}

std::string_view preset_name(Preset preset) {
    switch (preset) {
        case Preset::LaserPulse: return "laser_pulse";
        case Preset::GaussianE: return "gaussian_e";
        case Preset::Zero: return "zero";
        case Preset::CustomTable: return "custom_table";
    }
    return "zero";
}

FieldState InitialData::sample(const Grid1D& grid) const {
    FieldState s;
    s.V.resize(grid.size());
    s.E.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.x(i);
        s.V[i] = V0(x);
        s.E[i] = E0(x);
    }
    return s;
}

double InitialData::edge_magnitude(const Grid1D& grid) const {
    double m = 0.0;
    for (double x : {grid.x_min(), grid.x_max()}) {
        m = std::max({m, std::abs(V0(x)), std::abs(E0(x))});
    }
    return m;
}

namespace {

// Natural cubic spline through (x_i, y_i); zero outside the sampled range.
class CubicSpline {
public:
    CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
        const std::size_t n = x_.size();
        m_.assign(n, 0.0);
        if (n < 3) return;
        std::vector<double> diag(n, 0.0), rhs(n, 0.0), upper(n, 0.0);
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x_[i] - x_[i - 1];
            const double hr = x_[i + 1] - x_[i];
            const double lower = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            upper[i] = hr / 6.0;
            rhs[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
            // Thomas elimination of the sub-diagonal against row i-1.
            const double w = lower / diag[i - 1];
            diag[i] -= w * upper[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        for (std::size_t i = n - 1; i-- > 1;) {
            m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
        }
    }

    // derivative order 0, 1 or 2
    double eval(double x, int order) const {
        if (x_.size() < 2 || x < x_.front() || x > x_.back()) return 0.0;
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - x_.begin() - 1, 0));
        if (i >= x_.size() - 1) i = x_.size() - 2;
        const double h = x_[i + 1] - x_[i];
        const double A = (x_[i + 1] - x) / h;
        const double B = (x - x_[i]) / h;
        switch (order) {
            case 0:
                return A * y_[i] + B * y_[i + 1] +
                       ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) * h * h / 6.0;
            case 1:
                return (y_[i + 1] - y_[i]) / h - (3.0 * A * A - 1.0) / 6.0 * h * m_[i] +
                       (3.0 * B * B - 1.0) / 6.0 * h * m_[i + 1];
            default:
                return A * m_[i] + B * m_[i + 1];
        }
    }

private:
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
};

void check_finite(const PresetParams& p) {
    require(std::isfinite(p.a) && std::isfinite(p.s) && std::isfinite(p.b) && std::isfinite(p.sign),
            "initial data: parameters must be finite");
}

}  // namespace

InitialData make_initial_data(Preset preset, const PresetParams& params) {
    check_finite(params);
    InitialData d;
    d.preset = preset;
    d.params = params;
    auto zero = [](double) { return 0.0; };
    switch (preset) {
        case Preset::LaserPulse: {
            require(params.a > 0.0, "laser_pulse: amplitude a must be positive");
            require(params.sign == 1.0 || params.sign == -1.0, "laser_pulse: sign must be +1 or -1");
            const double c = params.sign * params.a;
            d.V0 = zero;
            d.v0 = zero;
            d.E0 = [c](double x) { return -2.0 * c * x * std::exp(-x * x); };
            d.e0 = [c](double x) { return c * (4.0 * x * x - 2.0) * std::exp(-x * x); };
            d.e0p = [c](double x) { return c * (12.0 * x - 8.0 * x * x * x) * std::exp(-x * x); };
            break;
        }
        case Preset::GaussianE: {
            require(params.s > 0.0, "gaussian_e: width s must be positive");
            const double a = params.a, b = params.b, s2 = params.s * params.s;
            auto g = [s2](double x) { return std::exp(-x * x / s2); };
            d.E0 = [a, g](double x) { return a * g(x); };
            d.e0 = [a, g, s2](double x) { return -2.0 * a * x / s2 * g(x); };
            d.e0p = [a, g, s2](double x) { return a * (4.0 * x * x / (s2 * s2) - 2.0 / s2) * g(x); };
            d.V0 = [b, g](double x) { return b * g(x); };
            d.v0 = [b, g, s2](double x) { return -2.0 * b * x / s2 * g(x); };
            break;
        }
        case Preset::Zero:
            d.V0 = d.E0 = d.v0 = d.e0 = d.e0p = zero;
            break;
        case Preset::CustomTable: {
            require(params.table.has_value(), "custom_table: sample table missing");
            const SampleTable& t = *params.table;
            require(t.x.size() >= 4 && t.V.size() == t.x.size() && t.E.size() == t.x.size(),
                    "custom_table: need at least 4 samples with matching V and E columns");
            for (std::size_t i = 0; i < t.x.size(); ++i) {
                require(std::isfinite(t.x[i]) && std::isfinite(t.V[i]) && std::isfinite(t.E[i]),
                        "custom_table: samples must be finite");
                if (i > 0) require(t.x[i] > t.x[i - 1], "custom_table: x must be strictly increasing");
            }
            auto sv = std::make_shared<CubicSpline>(t.x, t.V);
            auto se = std::make_shared<CubicSpline>(t.x, t.E);
            d.V0 = [sv](double x) { return sv->eval(x, 0); };
            d.v0 = [sv](double x) { return sv->eval(x, 1); };
            d.E0 = [se](double x) { return se->eval(x, 0); };
            d.e0 = [se](double x) { return se->eval(x, 1); };
            d.e0p = [se](double x) { return se->eval(x, 2); };
            break;
        }
    }
    return d;
}

bool RegularizerSpec::all_off() const noexcept {
    return nu_const == 0.0 && !nu_density && alpha == 0.0 && mu == 0.0 && kappa == 0.0 && b12 == 0.0;
}

bool RegularizerSpec::pressure_only() const noexcept {
    return alpha > 0.0 && nu_const == 0.0 && !nu_density && mu == 0.0 && kappa == 0.0 && b12 == 0.0;
}

double RegularizerSpec::friction(double n) const noexcept {
    double nu = nu_const;
    if (nu_density) nu += nu_density->nu0 * std::pow(n, nu_density->gamma);
    return nu;
}

void RegularizerSpec::validate() const {
    auto nonneg = [](double v) { return std::isfinite(v) && v >= 0.0; };
    require(nonneg(nu_const), "regularizer: nu must be finite and non-negative");
    require(nonneg(alpha), "regularizer: alpha must be finite and non-negative");
    require(nonneg(mu), "regularizer: mu must be finite and non-negative");
    require(nonneg(kappa), "regularizer: kappa must be finite and non-negative");
    require(nonneg(b12), "regularizer: b12 must be finite and non-negative");
    if (nu_density) {
        require(nonneg(nu_density->nu0), "regularizer: nu0 must be finite and non-negative");
        require(std::isfinite(nu_density->gamma), "regularizer: friction exponent must be finite");
    }
    if (alpha > 0.0) require(std::isfinite(gamma_p) && gamma_p > 1.0, "regularizer: pressure needs gamma_p > 1");
    if (exotic_viscosity) require(mu > 0.0, "regularizer: exotic viscosity needs mu > 0");
    if (allow_combinations) return;

    // Single-factor runs, plus the non-degenerate diffusion matrix diag(mu, kappa).
    int factors = 0;
    factors += nu_const > 0.0;
    factors += nu_density.has_value() && nu_density->nu0 > 0.0;
    factors += alpha > 0.0;
    factors += (mu > 0.0 || kappa > 0.0);
    factors += b12 > 0.0;
    require(factors <= 1, "regularizer: combinations of factors need allow_combinations");
    require(!(exotic_viscosity && kappa > 0.0), "regularizer: exotic viscosity does not combine with kappa");
}

}  // namespace eplab
