#pragma once

#include "lrc/link.hpp"
#include "lrc/reservoir.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace lrc::test {

/// R1 link with every random process switched off.
inline LinkConfig quiet_link()
{
    LinkConfig c;
    c.rin_enabled = false;
    c.shot_noise_enabled = false;
    c.thermal_noise_enabled = false;
    return c;
}

/// Fiber reduced to a single effect, selected by the caller afterwards.
inline LinkConfig bare_fiber(double length_km)
{
    LinkConfig c = quiet_link();
    c.fiber_length_km = length_km;
    c.attenuation_db_km = 0.0;
    c.dispersion_ps_nm_km = 0.0;
    c.n2 = 0.0;
    c.dgd_ps_km = 0.0;
    return c;
}

/// exp(-t^2 / (2 t0^2)) field envelope with the given peak power, in x.
inline OpticalField gaussian_pulse(std::size_t n, double dt, double t0, double peak_w)
{
    OpticalField f;
    f.dt = dt;
    f.x.resize(n);
    f.y.assign(n, {0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        const double t = (static_cast<double>(i) - static_cast<double>(n) / 2.0) * dt;
        f.x[i] = std::sqrt(peak_w) * std::exp(-t * t / (2.0 * t0 * t0));
    }
    return f;
}

inline OpticalField cw_field(std::size_t n, double dt, double power_w)
{
    OpticalField f;
    f.dt = dt;
    f.x.assign(n, {std::sqrt(power_w), 0.0});
    f.y.assign(n, {0.0, 0.0});
    return f;
}

/// RMS width of |x|^2 + |y|^2 about its centroid.
inline double rms_width(const OpticalField& f)
{
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double t = static_cast<double>(i) * f.dt;
        const double p = f.power(i);
        m0 += p;
        m1 += p * t;
        m2 += p * t * t;
    }
    const double mean = m1 / m0;
    return std::sqrt(m2 / m0 - mean * mean);
}

template <class T>
double sample_variance(const std::vector<T>& v)
{
    double mean = 0.0;
    for (const auto& x : v) mean += static_cast<double>(x);
    mean /= static_cast<double>(v.size());
    double acc = 0.0;
    for (const auto& x : v) acc += (static_cast<double>(x) - mean) * (static_cast<double>(x) - mean);
    return acc / static_cast<double>(v.size() - 1);
}

/// beta2 from the dispersion parameter: beta2 = -D lambda^2 / (2 pi c).
inline double beta2_from(double d_ps_nm_km, double lambda_nm)
{
    const double d = d_ps_nm_km * 1e-6;   // s/m^2
    const double lambda = lambda_nm * 1e-9;
    return -d * lambda * lambda / (2.0 * std::numbers::pi * 299792458.0);
}

inline double l2_distance(const OpticalField& a, const OpticalField& b)
{
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a.x[i] - b.x[i]) + std::norm(a.y[i] - b.y[i]);
    return std::sqrt(acc);
}

/// Photon number of the injection-locked steady state (k_f = 0, zero
/// detuning) with all time derivatives set to zero. Carrier balance gives
/// N(S), the field equation gives S h^2 (1 + a^2) = (k_inj A / t_in)^2 with
/// h = (G - 1/t_ph) / 2, solved for S by bisection.
inline double locked_photon_number(const ReservoirParams& p, double amplitude)
{
    const double pump = p.bias_current / 1.602176634e-19 * 1e-9;
    const double drive = p.k_inj / p.t_in * amplitude;
    auto residual = [&](double s) {
        const double u = p.g_n / (1.0 + p.sat_s * s);
        const double n = (pump + u * p.n0 * s) / (1.0 / p.t_s + u * s);
        const double h = 0.5 * (u * (n - p.n0) - 1.0 / p.t_ph);
        return s * h * h * (1.0 + p.alpha_h * p.alpha_h) - drive * drive;
    };
    double lo = 0.0, hi = 1.0;
    while (residual(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (residual(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace lrc::test
