#include "lrc/reservoir.hpp"

#include "lrc/errors.hpp"
#include "lrc/link.hpp"
#include "lrc/rng.hpp"

#include <boost/random/normal_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lrc {

namespace {

void require(bool ok, const char* field, const std::string& what)
{
    if (!ok) throw ConfigError(std::string("reservoir.") + field + ": " + what);
}

} // namespace

void ReservoirParams::validate() const
{
    require(std::isfinite(alpha_h), "alpha_h", "must be finite");
    require(g_n > 0, "g_n", "must be > 0");
    require(sat_s >= 0, "sat_s", "must be >= 0");
    require(n0 > 0, "n0", "must be > 0");
    require(t_s > 0, "t_s", "must be > 0");
    require(t_in > 0, "t_in", "must be > 0");
    require(t_ph > 0, "t_ph", "must be > 0");
    require(bias_current >= 0, "bias_current", "must be >= 0");
    require(k_f >= 0 && k_f <= 0.2, "k_f", "must lie in [0, 0.2]");
    require(k_inj >= 0, "k_inj", "must be >= 0");
    require(tau > 0, "tau", "must be > 0");
    require(delta_f >= -50 && delta_f <= 50, "delta_f", "must lie in [-50, 50] GHz");
    require(std::isfinite(feedback_phase), "feedback_phase", "must be finite");
    require(noise_d >= 0, "noise_d", "must be >= 0");
    require(e_inj0 >= 0, "e_inj0", "must be >= 0");
    require(dt > 0, "dt", "must be > 0");
    require(dt <= 1e-3 * tau * (1 + 1e-12), "dt", "must be <= 1e-3 tau");
    require(dt <= t_ph / 2 * (1 + 1e-12), "dt", "must be <= t_ph / 2");
}

std::size_t ReservoirParams::delay_steps() const
{
    return static_cast<std::size_t>(std::llround(tau / dt));
}

double ReservoirParams::pump_rate() const { return bias_current / phys::q * 1e-9; }

ReservoirState initial_state(const ReservoirParams& p, std::uint64_t noise_stream)
{
    p.validate();
    ReservoirState s;
    auto init = make_rng(p.rng_seed, Stream::ReservoirInit);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double re = gauss(init), im = gauss(init);
    s.e_r = {1e-3 * re, 1e-3 * im};
    s.n_r = p.n0;
    s.delay_buffer.assign(p.delay_steps(), {0.0, 0.0});
    s.head = 0;
    s.step = 0;
    s.noise_rng.seed(make_rng(p.rng_seed, Stream::ReservoirNoise, noise_stream)());
    return s;
}

InjectionTrace build_injection(std::span<const double> masked, double theta, const ReservoirParams& p)
{
    p.validate();
    const double ratio = theta / p.dt;
    const auto per_slot = std::llround(ratio);
    if (per_slot < 1 || std::abs(ratio - static_cast<double>(per_slot)) > 1e-9 * ratio) {
        throw std::invalid_argument("build_injection: theta = " + std::to_string(theta) +
                                    " ns is not an integer multiple of dt = " + std::to_string(p.dt) + " ns");
    }
    InjectionTrace inj;
    inj.samples.reserve(masked.size() * static_cast<std::size_t>(per_slot));
    for (double v : masked) {
        if (!std::isfinite(v)) throw std::invalid_argument("build_injection: non-finite masked value");
        // The injection modulator saturates outside its [0, 1] drive range.
        const double amp = p.e_inj0 * (0.5 + std::clamp(v, 0.0, 1.0));
        inj.samples.insert(inj.samples.end(), static_cast<std::size_t>(per_slot), {amp, 0.0});
    }
    return inj;
}

std::vector<double> integrate(const InjectionTrace& inj, const ReservoirParams& p, ReservoirState& state)
{
    const std::size_t m = state.delay_buffer.size();
    if (m == 0 || m != p.delay_steps()) {
        throw std::invalid_argument("integrate: state delay line does not match tau / dt");
    }
    const double dt = p.dt;
    const double a = p.alpha_h;
    const double inv_tph = 1.0 / p.t_ph;
    const double pump = p.pump_rate();
    const double inv_ts = 1.0 / p.t_s;
    const double fb = p.k_f / p.t_in;
    const double fb_re = fb * std::cos(p.feedback_phase);
    const double fb_im = fb * std::sin(p.feedback_phase);
    const double kin = p.k_inj / p.t_in;
    // zeta = (z1 + j z2) / sqrt(2): complex standard normal, E|zeta|^2 = 1.
    const double noise_amp = std::sqrt(p.noise_d * dt / 2.0);
    const bool noisy = p.noise_d > 0.0;
    // The (1 + j a) term fixes E_r as the envelope of e^{+j w t}, so a master
    // at f_r + delta_f enters as e^{+j dw t}; with e^{-j dw t} the locking
    // asymmetry would come out mirrored in delta_f.
    // One step of the rotation, re-anchored to the absolute time periodically.
    const double rot_step = 2.0 * std::numbers::pi * p.delta_f * dt;
    const double step_re = std::cos(rot_step), step_im = std::sin(rot_step);
    constexpr std::size_t kResync = 4096;

    boost::random::normal_distribution<double> gauss(0.0, 1.0);
    auto& rng = state.noise_rng;

    double er = state.e_r.real(), ei = state.e_r.imag();
    double n = state.n_r;
    std::size_t head = state.head;
    std::uint64_t step = state.step;
    auto* buf = state.delay_buffer.data();

    double rot_re = 1.0, rot_im = 0.0;
    std::vector<double> out(inj.samples.size());
    for (std::size_t j = 0; j < inj.samples.size(); ++j, ++step) {
        if (j % kResync == 0) {
            const double cycles = std::fmod(p.delta_f * dt * static_cast<double>(step), 1.0);
            const double ph = 2.0 * std::numbers::pi * cycles;
            rot_re = std::cos(ph);
            rot_im = std::sin(ph);
            if (!std::isfinite(er) || !std::isfinite(ei) || !std::isfinite(n)) {
                throw NumericalError("reservoir integrate: non-finite state at t = " +
                                     std::to_string(static_cast<double>(step) * dt) +
                                     " ns; reduce reservoir.dt (currently " + std::to_string(dt) + " ns)");
            }
        }
        const double pwr = er * er + ei * ei;
        const double g = p.g_n * (n - p.n0) / (1.0 + p.sat_s * pwr);
        const double half_net = 0.5 * (g - inv_tph);
        // (1 + j a) * half_net * E
        double der = half_net * (er - a * ei);
        double dei = half_net * (ei + a * er);
        // feedback: (k_f / t_in) e^{j phi} E(t - tau)
        const double dr = buf[head].real(), di = buf[head].imag();
        der += fb_re * dr - fb_im * di;
        dei += fb_re * di + fb_im * dr;
        // injection: (k_inj / t_in) E_inj e^{j dw t}
        const double ir = inj.samples[j].real(), ii = inj.samples[j].imag();
        der += kin * (ir * rot_re - ii * rot_im);
        dei += kin * (ir * rot_im + ii * rot_re);
        const double dn = pump - n * inv_ts - g * pwr;

        buf[head] = {er, ei};
        if (++head == m) head = 0;

        er += der * dt;
        ei += dei * dt;
        if (noisy) {
            const double z1 = gauss(rng);
            const double z2 = gauss(rng);
            er += noise_amp * z1;
            ei += noise_amp * z2;
        }
        n += dn * dt;
        out[j] = er * er + ei * ei;

        const double nr = rot_re * step_re - rot_im * step_im;
        rot_im = rot_re * step_im + rot_im * step_re;
        rot_re = nr;
    }
    if (!std::isfinite(er) || !std::isfinite(ei) || !std::isfinite(n)) {
        throw NumericalError("reservoir integrate: non-finite state at t = " +
                             std::to_string(static_cast<double>(step) * dt) + " ns; reduce reservoir.dt (currently " +
                             std::to_string(dt) + " ns)");
    }
    state.e_r = {er, ei};
    state.n_r = n;
    state.head = head;
    state.step = step;
    return out;
}

void warm_up(ReservoirState& state, const InjectionTrace& first_symbol, const ReservoirParams& p)
{
    for (int r = 0; r < 20; ++r) {
        (void)integrate(first_symbol, p, state);
    }
}

double consistency_probe(const InjectionTrace& inj, const ReservoirParams& p, int trials)
{
    if (trials < 2) throw std::invalid_argument("consistency_probe: need at least 2 trials");
    const std::size_t len = inj.samples.size();
    const std::size_t period = p.delay_steps();
    if (len < period) throw std::invalid_argument("consistency_probe: injection shorter than one delay");
    InjectionTrace first;
    first.samples.assign(inj.samples.begin(), inj.samples.begin() + static_cast<std::ptrdiff_t>(period));

    // Welford across trials, per time sample.
    std::vector<double> mean(len, 0.0), m2(len, 0.0);
    for (int t = 0; t < trials; ++t) {
        auto state = initial_state(p, static_cast<std::uint64_t>(t) + 1);
        warm_up(state, first, p);
        const auto trace = integrate(inj, p, state);
        const double k = t + 1.0;
        for (std::size_t i = 0; i < len; ++i) {
            const double d = trace[i] - mean[i];
            mean[i] += d / k;
            m2[i] += d * (trace[i] - mean[i]);
        }
    }
    double grand = 0.0;
    for (double v : mean) grand += v;
    grand /= static_cast<double>(len);
    double signal = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        signal += (mean[i] - grand) * (mean[i] - grand);
        noise += m2[i] / (trials - 1.0);
    }
    signal /= static_cast<double>(len);
    noise /= static_cast<double>(len);
    if (noise == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(signal / noise);
}

} // namespace lrc
