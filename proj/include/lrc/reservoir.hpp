#pragma once

// Delay-based photonic reservoir: a semiconductor laser with delayed optical
// feedback and modulated optical injection, in the Lang-Kobayashi
// description. Time is in ns, frequency in GHz, the field amplitude is in the
// dimensionless convention where |E|^2 counts photons.

#include <boost/random/mersenne_twister.hpp>

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace lrc {

struct ReservoirParams {
    double alpha_h = 3.0;              // linewidth enhancement factor
    double g_n = 1.2e-5;               // 1/ns per carrier
    double sat_s = 5e-7;               // gain saturation
    double n0 = 1.5e8;                 // transparency carrier number
    double t_s = 2.0;                  // carrier lifetime, ns
    double t_in = 1e-2;                // internal round trip, ns
    double t_ph = 2e-3;                // photon lifetime, ns
    double bias_current = 15.3e-3;     // A
    double threshold_current = 15.37e-3; // A, reference only
    double k_f = 0.05;
    double k_inj = 0.15;
    double tau = 1.6;                  // feedback delay, ns
    double delta_f = 0.0;              // injection detuning f_inj - f_r, GHz
    double feedback_phase = 0.0;       // omega_0 tau mod 2 pi
    double noise_d = 3.0;              // 1/ns
    double e_inj0 = 100.0;
    double dt = 5e-4;                  // ns
    std::uint64_t rng_seed = 7;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    std::size_t delay_steps() const;
    double pump_rate() const;          // I/q in carriers per ns
    /// Modal gain G_r for carrier number n and photon number p.
    double gain(double n, double p) const { return g_n * (n - n0) / (1.0 + sat_s * p); }
};

struct ReservoirState {
    std::complex<double> e_r;
    double n_r = 0.0;
    /// Ring buffer of E_r over the last tau; head is the oldest entry.
    std::vector<std::complex<double>> delay_buffer;
    std::size_t head = 0;
    std::uint64_t step = 0;            // absolute step count, t = step * dt
    boost::random::mt19937_64 noise_rng;   // same sequence as std::mt19937_64, block generated
};

/// Injected field on the dt grid. Values are the real amplitude before the
/// detuning rotation, which integrate() applies from the absolute time.
struct InjectionTrace {
    std::vector<std::complex<double>> samples;
};

/// E_r small and random (from rng_seed), N_r = N_0, empty delay line.
/// The noise stream is seeded from (rng_seed, noise_stream) so repeated
/// trials can share an initial condition but not their noise.
ReservoirState initial_state(const ReservoirParams& p, std::uint64_t noise_stream = 0);

/// Zero-order hold of E_inj0 (1/2 + value) over theta-wide slots. theta must
/// be an integer number of integration steps.
InjectionTrace build_injection(std::span<const double> masked, double theta, const ReservoirParams& p);

/// Euler-Maruyama integration with noise sqrt(D dt) zeta, zeta a complex
/// standard normal (unit total variance). Returns |E_r|^2 after each step; state is
/// advanced in place so consecutive calls continue the same trajectory.
/// Throws NumericalError on a non-finite state.
std::vector<double> integrate(const InjectionTrace& inj, const ReservoirParams& p, ReservoirState& state);

/// Integrates 20 tau with one symbol's injection repeated, discarding output.
void warm_up(ReservoirState& state, const InjectionTrace& first_symbol, const ReservoirParams& p);

/// Consistency SNR in dB over repeated runs of the same injection with
/// independent noise: 10 log10(var_t(mean over trials) / mean_t(var over
/// trials)). Each trial is warmed up on the first tau of the injection.
/// Returns +inf when the trials agree exactly.
double consistency_probe(const InjectionTrace& inj, const ReservoirParams& p, int trials);

} // namespace lrc
