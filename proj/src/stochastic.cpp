#include "eplab/stochastic.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "eplab/parallel.hpp"
#include "philox.hpp"

namespace eplab {

namespace {

// Second counter word for the sampling stream; noise uses the step index.
constexpr std::uint64_t kInitStream = 1ull << 63;

constexpr double kInvSqrt2Pi = 0.3989422804014327;

}  // namespace

SpatialDensity SpatialDensity::uniform(double lo, double hi) {
    require(lo < hi, "uniform density: lo must be below hi");
    return {[](double) { return 1.0; }, lo, hi};
}

SpatialDensity SpatialDensity::gaussian(double mean, double sd) {
    require(sd > 0.0 && std::isfinite(sd), "gaussian density: sd must be positive");
    return {[mean, sd](double x) { return std::exp(-0.5 * (x - mean) * (x - mean) / (sd * sd)); }, mean - 10.0 * sd,
            mean + 10.0 * sd};
}

ParticleEnsemble init_ensemble(const InitialData& init, const SpatialDensity& f0, std::size_t n, double sigma,
                               std::uint64_t seed, unsigned threads) {
    require(n >= 1000, "init_ensemble: need at least 1000 particles");
    require(sigma >= 0.0 && std::isfinite(sigma), "init_ensemble: sigma must be finite and non-negative");
    require(f0.f && f0.lo < f0.hi, "init_ensemble: f0 needs a function and lo < hi");

    constexpr std::size_t cells = 1u << 16;
    const double dx = (f0.hi - f0.lo) / cells;
    std::vector<double> cdf(cells + 1, 0.0);
    double prev = f0.f(f0.lo);
    for (std::size_t k = 1; k <= cells; ++k) {
        const double cur = f0.f(f0.lo + dx * static_cast<double>(k));
        if (!(prev >= 0.0) || !std::isfinite(prev) || !(cur >= 0.0) || !std::isfinite(cur))
            fail(ErrorCode::InvalidArgument, "init_ensemble: f0 must be finite and non-negative");
        cdf[k] = cdf[k - 1] + 0.5 * (prev + cur) * dx;
        prev = cur;
    }
    const double total = cdf.back();
    if (!(total > 0.0) || !std::isfinite(total)) fail(ErrorCode::InvalidArgument, "init_ensemble: f0 cannot be normalized");
    for (double& c : cdf) c /= total;

    ParticleEnsemble ens;
    ens.sigma = sigma;
    ens.seed = seed;
    ens.X.resize(n);
    ens.V.resize(n);
    ens.E.resize(n);
    const detail::CounterRng rng(seed);
    parallel_for(n, threads, [&](std::size_t i) {
        const double u = rng.uniform(i, kInitStream);
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const std::size_t k = std::clamp<std::size_t>(static_cast<std::size_t>(it - cdf.begin()), 1, cells);
        const double c0 = cdf[k - 1], c1 = cdf[k];
        const double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.5;
        const double x = f0.lo + dx * (static_cast<double>(k - 1) + frac);
        ens.X[i] = x;
        ens.V[i] = init.V0(x);
        ens.E[i] = init.E0(x);
    });
    return ens;
}

void step_ensemble(ParticleEnsemble& ens, double dt, unsigned threads) {
    require(dt > 0.0 && std::isfinite(dt), "step_ensemble: dt must be positive");
    const double c = std::cos(dt), s = std::sin(dt);
    const double noise = ens.sigma * std::sqrt(dt);
    const detail::CounterRng rng(ens.seed);
    const std::uint64_t step = ens.step;
    parallel_for(ens.size(), threads, [&](std::size_t i) {
        const double v = ens.V[i], e = ens.E[i];
        // The drift is known in closed form along the rotation, so only the noise is sampled.
        double x = ens.X[i] + v * s - e * (1.0 - c);
        if (noise > 0.0) x += noise * rng.normal(i, step);
        ens.X[i] = x;
        ens.V[i] = v * c - e * s;
        ens.E[i] = v * s + e * c;
    });
    ens.t += dt;
    ++ens.step;
}

void advance_ensemble(ParticleEnsemble& ens, double t_target, double dt, unsigned threads) {
    require(dt > 0.0, "advance_ensemble: dt must be positive");
    while (ens.t < t_target - 1e-12 * std::max(1.0, std::abs(t_target))) {
        const double h = std::min(dt, t_target - ens.t);
        step_ensemble(ens, h, threads);
    }
}

double MomentFields::max_rho() const {
    double m = 0.0;
    for (double r : rho) m = std::max(m, r);
    return m;
}

double MomentFields::mass() const {
    double m = 0.0;
    for (double r : rho) m += r;
    return m * grid.spacing();
}

double silverman_bandwidth(const std::vector<double>& x) {
    require(x.size() >= 2, "silverman_bandwidth: need at least two samples");
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    auto quantile = [&](double q) {
        const double pos = q * (n - 1.0);
        const std::size_t k = static_cast<std::size_t>(pos);
        const double f = pos - static_cast<double>(k);
        return k + 1 < sorted.size() ? sorted[k] * (1.0 - f) + sorted[k + 1] * f : sorted.back();
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    double spread = sd;
    if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
    return 0.9 * spread * std::pow(n, -0.2);
}

MomentFields estimate_moments(const ParticleEnsemble& ens, const Grid1D& grid, std::optional<double> bandwidth,
                              unsigned threads) {
    const std::size_t n = ens.size();
    if (n == 0) fail(ErrorCode::EmptyEstimate, "estimate_moments: empty ensemble");
    std::size_t inside = 0;
    for (double x : ens.X)
        if (x >= grid.x_min() && x <= grid.x_max()) ++inside;
    if (inside == 0) fail(ErrorCode::EmptyEstimate, "estimate_moments: all particles lie outside the grid");

    const double bw = bandwidth ? *bandwidth : silverman_bandwidth(ens.X);
    require(bw > 0.0 && std::isfinite(bw), "estimate_moments: bandwidth must be positive");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ens.X[a] < ens.X[b]; });
    std::vector<double> xs(n);
    for (std::size_t k = 0; k < n; ++k) xs[k] = ens.X[order[k]];

    MomentFields m;
    m.grid = grid;
    m.t = ens.t;
    m.bandwidth = bw;
    const std::size_t g = grid.size();
    m.rho.assign(g, 0.0);
    m.Vhat.assign(g, 0.0);
    m.Ehat.assign(g, 0.0);
    std::vector<double> wsum(g, 0.0);
    const double cutoff = 8.0 * bw;
    const double inv_bw = 1.0 / bw;
    parallel_for(g, threads, [&](std::size_t j) {
        const double x = grid.x(j);
        const auto lo = std::lower_bound(xs.begin(), xs.end(), x - cutoff) - xs.begin();
        const auto hi = std::upper_bound(xs.begin(), xs.end(), x + cutoff) - xs.begin();
        double w = 0.0, wv = 0.0, we = 0.0;
        for (auto k = lo; k < hi; ++k) {
            const double z = (xs[static_cast<std::size_t>(k)] - x) * inv_bw;
            const double kw = std::exp(-0.5 * z * z);
            const std::size_t p = order[static_cast<std::size_t>(k)];
            w += kw;
            wv += kw * ens.V[p];
            we += kw * ens.E[p];
        }
        wsum[j] = w;
        m.rho[j] = w * kInvSqrt2Pi * inv_bw / static_cast<double>(n);
        m.Vhat[j] = wv;
        m.Ehat[j] = we;
    });
    const double limit = m.floor * m.max_rho();
    for (std::size_t j = 0; j < g; ++j) {
        if (m.rho[j] >= limit && wsum[j] > 0.0) {
            m.Vhat[j] /= wsum[j];
            m.Ehat[j] /= wsum[j];
        } else {
            m.Vhat[j] = std::numeric_limits<double>::quiet_NaN();
            m.Ehat[j] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return m;
}

Reference characteristic_reference(const InitialData& init, const Grid1D& grid, double t, std::size_t labels) {
    require(labels >= 16, "characteristic_reference: too few labels");
    const double c = std::cos(t), s = std::sin(t);
    std::vector<double> X(labels), V(labels), E(labels);
    const double lo = grid.x_min(), hi = grid.x_max();
    for (std::size_t k = 0; k < labels; ++k) {
        const double x0 = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(labels - 1);
        const double v = init.V0(x0), e = init.E0(x0);
        X[k] = x0 + v * s - e * (1.0 - c);
        V[k] = v * c - e * s;
        E[k] = v * s + e * c;
        if (k > 0 && !(X[k] > X[k - 1]))
            fail(ErrorCode::Precondition, "characteristic_reference: characteristics cross before t");
    }
    Reference ref;
    ref.V.resize(grid.size());
    ref.E.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double x = grid.x(j);
        auto it = std::upper_bound(X.begin(), X.end(), x);
        std::size_t k = static_cast<std::size_t>(it - X.begin());
        if (k == 0) {
            ref.V[j] = V.front();
            ref.E[j] = E.front();
            continue;
        }
        if (k == labels) {
            ref.V[j] = V.back();
            ref.E[j] = E.back();
            continue;
        }
        const double f = (x - X[k - 1]) / (X[k] - X[k - 1]);
        ref.V[j] = V[k - 1] + f * (V[k] - V[k - 1]);
        ref.E[j] = E[k - 1] + f * (E[k] - E[k - 1]);
    }
    return ref;
}

std::vector<ConvergenceRow> convergence_study(const InitialData& init, const std::vector<double>& sigmas,
                                              std::size_t n, const std::vector<double>& t_checkpoints,
                                              const ConvergenceOptions& opts) {
    require(!sigmas.empty() && !t_checkpoints.empty(), "convergence_study: need sigmas and checkpoints");
    for (double s : sigmas) require(s > 0.0 && std::isfinite(s), "convergence_study: every sigma must be positive");
    for (std::size_t k = 0; k < t_checkpoints.size(); ++k)
        require(t_checkpoints[k] > 0.0 && (k == 0 || t_checkpoints[k] > t_checkpoints[k - 1]),
                "convergence_study: checkpoints must be positive and increasing");

    struct Measure {
        double err_V = NAN, err_E = NAN, max_rho = 0.0, max_V = 0.0, max_E = 0.0;
        bool finite = true;
    };
    const ParticleEnsemble start = init_ensemble(init, opts.f0, n, 0.0, opts.seed, opts.threads);
    const double bw = opts.bandwidth ? *opts.bandwidth : silverman_bandwidth(start.X);

    std::vector<std::optional<Reference>> refs;
    for (double t : t_checkpoints) {
        try {
            refs.emplace_back(characteristic_reference(init, opts.grid, t));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Precondition) throw;
            refs.emplace_back(std::nullopt);
        }
    }

    auto run = [&](double sigma) {
        ParticleEnsemble ens = start;
        ens.sigma = sigma;
        std::vector<Measure> out;
        for (std::size_t k = 0; k < t_checkpoints.size(); ++k) {
            advance_ensemble(ens, t_checkpoints[k], opts.dt, opts.threads);
            const MomentFields m = estimate_moments(ens, opts.grid, bw, opts.threads);
            Measure r;
            r.max_rho = m.max_rho();
            const double limit = opts.region * r.max_rho;
            double ev = 0.0, ee = 0.0;
            for (std::size_t j = 0; j < m.rho.size(); ++j) {
                if (!std::isfinite(m.rho[j])) r.finite = false;
                if (!m.defined(j)) continue;
                if (!std::isfinite(m.Vhat[j]) || !std::isfinite(m.Ehat[j])) r.finite = false;
                r.max_V = std::max(r.max_V, std::abs(m.Vhat[j]));
                r.max_E = std::max(r.max_E, std::abs(m.Ehat[j]));
                if (refs[k] && m.rho[j] > limit) {
                    ev = std::max(ev, std::abs(m.Vhat[j] - refs[k]->V[j]));
                    ee = std::max(ee, std::abs(m.Ehat[j] - refs[k]->E[j]));
                }
            }
            if (refs[k]) {
                r.err_V = ev;
                r.err_E = ee;
            }
            out.push_back(r);
        }
        return out;
    };

    const auto floor = run(0.0);
    std::vector<ConvergenceRow> rows;
    for (double sigma : sigmas) {
        const auto meas = run(sigma);
        for (std::size_t k = 0; k < t_checkpoints.size(); ++k) {
            ConvergenceRow row;
            row.sigma = sigma;
            row.t = t_checkpoints[k];
            row.reference_valid = refs[k].has_value();
            row.err_V = meas[k].err_V;
            row.err_E = meas[k].err_E;
            row.floor_V = floor[k].err_V;
            row.floor_E = floor[k].err_E;
            row.finite = meas[k].finite;
            row.max_rho = meas[k].max_rho;
            row.max_abs_Vhat = meas[k].max_V;
            row.max_abs_Ehat = meas[k].max_E;
            rows.push_back(row);
        }
    }
    return rows;
}

Field moment_residual(const MomentFields& m0, const MomentFields& m1, double dt, double sigma) {
    if (!(m0.grid == m1.grid) || m0.rho.size() != m1.rho.size())
        fail(ErrorCode::GridMismatch, "moment_residual: moment fields live on different grids");
    require(dt > 0.0, "moment_residual: dt must be positive");
    require(sigma >= 0.0, "moment_residual: sigma must be non-negative");
    const std::size_t n = m0.rho.size();
    const double h = m0.grid.spacing();
    auto flux = [](const MomentFields& m, std::size_t j) { return m.defined(j) ? m.rho[j] * m.Vhat[j] : 0.0; };
    Field res(n, 0.0);
    const double d = 0.5 * sigma * sigma;
    for (std::size_t j = 1; j + 1 < n; ++j) {
        const double rt = (m1.rho[j] - m0.rho[j]) / dt;
        const double fx = 0.5 * ((flux(m0, j + 1) - flux(m0, j - 1)) + (flux(m1, j + 1) - flux(m1, j - 1))) / (2.0 * h);
        const double rxx = 0.5 * ((m0.rho[j + 1] - 2.0 * m0.rho[j] + m0.rho[j - 1]) +
                                  (m1.rho[j + 1] - 2.0 * m1.rho[j] + m1.rho[j - 1])) /
                           (h * h);
        res[j] = rt + fx - d * rxx;
    }
    return res;
}

namespace {

template <class T>
void put(std::ofstream& out, T value) {
    auto bits = std::bit_cast<std::array<unsigned char, 8>>(value);
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    out.write(reinterpret_cast<const char*>(bits.data()), 8);
}

template <class T>
T get(std::ifstream& in) {
    std::array<unsigned char, 8> bits{};
    in.read(reinterpret_cast<char*>(bits.data()), 8);
    if (!in) fail(ErrorCode::Io, "read_checkpoint: truncated file");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bits.begin(), bits.end());
    return std::bit_cast<T>(bits);
}

}  // namespace

void write_checkpoint(const ParticleEnsemble& ens, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "write_checkpoint: cannot open " + path);
    put<std::uint64_t>(out, ens.size());
    put<double>(out, ens.sigma);
    put<std::uint64_t>(out, ens.seed);
    put<double>(out, ens.t);
    put<std::uint64_t>(out, ens.step);
    for (const auto* arr : {&ens.X, &ens.V, &ens.E})
        for (double v : *arr) put<double>(out, v);
    if (!out) fail(ErrorCode::Io, "write_checkpoint: write failed for " + path);
}

ParticleEnsemble read_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "read_checkpoint: cannot open " + path);
    ParticleEnsemble ens;
    const auto n = get<std::uint64_t>(in);
    ens.sigma = get<double>(in);
    ens.seed = get<std::uint64_t>(in);
    ens.t = get<double>(in);
    ens.step = get<std::uint64_t>(in);
    if (n > (1ull << 34)) fail(ErrorCode::Io, "read_checkpoint: implausible particle count");
    for (auto* arr : {&ens.X, &ens.V, &ens.E}) {
        arr->resize(n);
        for (auto& v : *arr) v = get<double>(in);
    }
    return ens;
}

}  // namespace eplab
