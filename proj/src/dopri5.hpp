#pragma once

// Dormand-Prince 5(4) explicit Runge-Kutta with PI step-size control.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace eplab::detail {

struct OdeOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double min_step = 1e-14;
    double max_step = 0.1;
    double initial_step = 1e-3;
    long max_steps = 50'000'000;
};

enum class OdeStatus { Reached, Stopped, StepUnderflow, TooManySteps };

struct OdeResult {
    OdeStatus status = OdeStatus::Reached;
    double t = 0.0;
    long accepted = 0;
    long rejected = 0;
    double next_step = 0.0;  ///< step proposal to resume from t
};

/// Integrates y' = rhs(t, y) from t0 towards t1 (t1 may be below t0).
/// `observer(t, y)` is called after every accepted step and stops the
/// integration by returning false.
template <std::size_t N, class Rhs, class Observer>
OdeResult dopri5(Rhs&& rhs, std::array<double, N>& y, double t0, double t1, const OdeOptions& opt,
                 Observer&& observer) {
    using State = std::array<double, N>;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    OdeResult res;
    res.t = t0;
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    double h = std::min(opt.initial_step, opt.max_step);
    double err_prev = 1e-4;
    State k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    rhs(t, y, k1);

    while (dir * (t1 - t) > 0.0) {
        if (res.accepted + res.rejected >= opt.max_steps) {
            res.status = OdeStatus::TooManySteps;
            res.t = t;
            return res;
        }
        bool last = false;
        res.next_step = h;
        if (h >= std::abs(t1 - t)) {
            h = std::abs(t1 - t);
            last = true;
        }
        const double s = dir * h;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * a21 * k1[i];
        rhs(t + c2 * s, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * s, tmp, k3);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * s, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + s * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * s, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + s * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        rhs(t + s, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + s * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(t + s, ynew, k7);

        double err = 0.0;
        bool finite = true;
        for (std::size_t i = 0; i < N; ++i) {
            const double ei =
                s * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            const double r = ei / sc;
            if (!std::isfinite(r) || !std::isfinite(ynew[i])) finite = false;
            err += r * r;
        }
        err = finite ? std::sqrt(err / static_cast<double>(N)) : 1e10;

        if (err <= 1.0) {
            t = last ? t1 : t + s;
            y = ynew;
            k1 = k7;
            ++res.accepted;
            const double fac = std::clamp(0.9 * std::pow(err, -0.14) * std::pow(err_prev, 0.08), 0.2, 5.0);
            err_prev = std::max(err, 1e-4);
            h = std::min(h * fac, opt.max_step);
            if (!last) res.next_step = h;
            if (!observer(t, y)) {
                res.status = OdeStatus::Stopped;
                res.t = t;
                return res;
            }
        } else {
            ++res.rejected;
            const double fac = finite ? std::max(0.9 * std::pow(err, -0.2), 0.1) : 0.1;
            h *= fac;
            if (h < opt.min_step) {
                res.status = OdeStatus::StepUnderflow;
                res.t = t;
                return res;
            }
        }
    }
    res.t = t;
    return res;
}

}  // namespace eplab::detail
