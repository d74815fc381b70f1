#include "lrc/link.hpp"

#include "lrc/errors.hpp"
#include "lrc/fft.hpp"
#include "lrc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace lrc {

namespace {

constexpr double kPi = std::numbers::pi;

void require(bool ok, const char* field, const std::string& what)
{
    if (!ok) throw ConfigError(std::string("link.") + field + ": " + what);
}

double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }

} // namespace

// ---------------------------------------------------------------------------
// LinkConfig

void LinkConfig::validate() const
{
    require(std::isfinite(bit_rate) && bit_rate > 0, "bit_rate", "must be > 0");
    require(std::isfinite(fiber_length_km) && fiber_length_km >= 0, "fiber_length_km", "must be >= 0");
    require(std::isfinite(launch_peak_power_dbm), "launch_peak_power_dbm", "must be finite");
    require(std::isfinite(attenuation_db_km) && attenuation_db_km >= 0, "attenuation_db_km", "must be >= 0");
    require(std::isfinite(dispersion_ps_nm_km), "dispersion_ps_nm_km", "must be finite");
    require(std::isfinite(n2) && n2 >= 0, "n2", "must be >= 0");
    require(std::isfinite(a_eff_um2) && a_eff_um2 > 0, "a_eff_um2", "must be > 0");
    require(std::isfinite(dgd_ps_km) && dgd_ps_km >= 0, "dgd_ps_km", "must be >= 0");
    require(!std::isnan(rin_db_hz), "rin_db_hz", "must be a number");
    require(std::isfinite(wavelength_nm) && wavelength_nm > 0, "wavelength_nm", "must be > 0");
    require(samples_per_baud >= 4 && samples_per_baud % 2 == 0, "samples_per_baud", "must be even and >= 4");
    require(std::isfinite(responsivity) && responsivity > 0, "responsivity", "must be > 0");
    require(std::isfinite(tia_gain_db), "tia_gain_db", "must be finite");
    require(rx_cutoff_fraction > 0 && rx_cutoff_fraction <= 1, "rx_cutoff_fraction", "must lie in (0, 1]");
    require(std::isfinite(step_m) && step_m > 0, "step_m", "must be > 0");
    require(extinction_floor >= 0 && extinction_floor < 1, "extinction_floor", "must lie in [0, 1)");
    require(std::isfinite(thermal_noise_density) && thermal_noise_density >= 0, "thermal_noise_density",
            "must be >= 0");
    require(guard_symbols >= 0, "guard_symbols", "must be >= 0");
    require(std::isfinite(sbs_gain) && sbs_gain > 0, "sbs_gain", "must be > 0");
}

double LinkConfig::launch_peak_power_w() const { return 1e-3 * db_to_lin(launch_peak_power_dbm); }

double LinkConfig::gamma() const
{
    return 2.0 * kPi * n2 / (wavelength_nm * 1e-9 * a_eff_um2 * 1e-12);
}

double LinkConfig::beta2() const
{
    const double lambda = wavelength_nm * 1e-9;
    const double d_si = dispersion_ps_nm_km * 1e-6; // ps/(nm km) -> s/m^2
    return -d_si * lambda * lambda / (2.0 * kPi * phys::c);
}

double LinkConfig::alpha_per_m() const { return attenuation_db_km / (10.0 * std::log10(std::exp(1.0))) * 1e-3; }

double LinkConfig::smith_threshold_w() const
{
    const double alpha = alpha_per_m();
    const double length = fiber_length_km * 1e3;
    const double l_eff = alpha > 0 ? (1.0 - std::exp(-alpha * length)) / alpha : length;
    return 21.0 * a_eff_um2 * 1e-12 / (sbs_gain * std::max(l_eff, 1.0));
}

std::array<double, 4> LinkConfig::relative_levels() const
{
    std::array<double, 4> out{};
    for (int k = 0; k < 4; ++k) {
        out[k] = extinction_floor + (1.0 - extinction_floor) * k / 3.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Data types

double OpticalField::mean_power() const
{
    if (x.empty()) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += power(i);
    return acc / static_cast<double>(x.size());
}

double OpticalField::energy() const { return mean_power() * static_cast<double>(x.size()) * dt; }

bool OpticalField::all_finite() const
{
    auto finite = [](const cplx& v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); };
    return std::all_of(x.begin(), x.end(), finite) && std::all_of(y.begin(), y.end(), finite);
}

std::uint8_t SymbolStream::symbol_of(std::uint8_t bits)
{
    for (std::uint8_t s = 0; s < 4; ++s) {
        if (kGrayBits[s] == bits) return s;
    }
    throw std::invalid_argument("SymbolStream: bit pair out of range");
}

std::vector<std::uint8_t> SymbolStream::to_bits() const
{
    std::vector<std::uint8_t> bits;
    bits.reserve(2 * symbols.size());
    for (auto s : symbols) {
        const auto b = bits_of(s);
        bits.push_back((b >> 1) & 1u);
        bits.push_back(b & 1u);
    }
    return bits;
}

std::size_t DetectedWaveform::samples_per_baud() const
{
    return static_cast<std::size_t>(std::lround(baud_period / dt));
}

std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed)
{
    auto rng = make_rng(seed, Stream::Bits);
    std::vector<std::uint8_t> bits(count);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i % 64 == 0) word = rng();
        bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return bits;
}

SymbolStream encode_pam4(std::span<const std::uint8_t> bits)
{
    if (bits.size() % 2 != 0) {
        throw std::invalid_argument("encode_pam4: odd bit count " + std::to_string(bits.size()));
    }
    SymbolStream out;
    out.symbols.reserve(bits.size() / 2);
    for (std::size_t i = 0; i < bits.size(); i += 2) {
        if (bits[i] > 1 || bits[i + 1] > 1) throw std::invalid_argument("encode_pam4: bit values must be 0 or 1");
        out.symbols.push_back(SymbolStream::symbol_of(static_cast<std::uint8_t>((bits[i] << 1) | bits[i + 1])));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transmitter

OpticalField modulate(const SymbolStream& sym, const LinkConfig& cfg)
{
    cfg.validate();
    if (sym.size() == 0) throw std::invalid_argument("modulate: empty symbol stream");
    const int sps = cfg.samples_per_baud;
    const std::size_t n = sym.size() * static_cast<std::size_t>(sps);
    const double p_peak = cfg.launch_peak_power_w();
    const auto levels = cfg.relative_levels();

    std::vector<cplx> env(n, cplx{0.0, 0.0});
    for (std::size_t b = 0; b < sym.size(); ++b) {
        const auto s = sym.symbols[b];
        if (s > 3) throw std::invalid_argument("modulate: symbol out of range");
        env[center_index(b, sps)] = std::sqrt(p_peak * levels[s]);
    }

    // Full-rolloff raised cosine: zero crossings at every other baud center,
    // spectrum confined to |f| < baud rate.
    Fft fft(n);
    fft.forward(env);
    const double dt = cfg.sample_interval();
    const double rs = cfg.baud_rate();
    for (std::size_t m = 0; m < n; ++m) {
        const double f = std::abs(bin_omega(m, n, dt)) / (2.0 * kPi);
        const double h = f < rs ? 0.5 * sps * (1.0 + std::cos(kPi * f / rs)) : 0.0;
        env[m] *= h / static_cast<double>(n);
    }
    fft.inverse(env);

    if (cfg.rin_enabled && std::isfinite(cfg.rin_db_hz)) {
        auto rng = make_rng(cfg.rng_seed, Stream::Rin);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double sigma = std::sqrt(db_to_lin(cfg.rin_db_hz) * cfg.sample_rate() / 2.0);
        for (auto& v : env) {
            v *= std::sqrt(std::max(0.0, 1.0 + sigma * gauss(rng)));
        }
    }

    OpticalField out;
    out.x = std::move(env);
    out.y.assign(n, cplx{0.0, 0.0});
    out.dt = dt;
    out.wavelength_nm = cfg.wavelength_nm;
    return out;
}

// ---------------------------------------------------------------------------
// Fiber

OpticalField propagate_fixed_step(const OpticalField& field, const LinkConfig& cfg, double step_m)
{
    cfg.validate();
    if (field.size() == 0 || field.y.size() != field.x.size()) {
        throw std::invalid_argument("propagate: polarization arrays must be non-empty and equal length");
    }
    if (!(step_m > 0)) throw ConfigError("link.step_m: must be > 0");
    const double length = cfg.fiber_length_km * 1e3;
    if (length == 0.0) return field;

    const std::size_t n_rec = field.size();
    const auto sps = static_cast<std::size_t>(cfg.samples_per_baud);
    const std::size_t guard = static_cast<std::size_t>(cfg.guard_symbols) * sps;
    const std::size_t n = next_pow2(n_rec + 2 * guard);
    const std::size_t offset = (n - n_rec) / 2;

    std::vector<cplx> ax(n, cplx{}), ay(n, cplx{});
    std::copy(field.x.begin(), field.x.end(), ax.begin() + static_cast<std::ptrdiff_t>(offset));
    std::copy(field.y.begin(), field.y.end(), ay.begin() + static_cast<std::ptrdiff_t>(offset));

    const auto steps = static_cast<std::size_t>(std::ceil(length / step_m - 1e-9));
    const double h = length / static_cast<double>(steps);
    const double alpha = cfg.alpha_per_m();
    const double beta2 = cfg.beta2();
    const double gamma = cfg.gamma();
    const double dgd = cfg.dgd_ps_km * 1e-12 * 1e-3; // s/m
    const double p_clamp = cfg.sbs_clamp ? cfg.smith_threshold_w() : 0.0;

    // Linear propagators over h and h/2; x is delayed by dgd/2 per metre,
    // y advanced by the same amount.
    std::vector<cplx> lin_x(n), lin_y(n), half_x(n), half_y(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double w = bin_omega(m, n, field.dt);
        const cplx base{-alpha / 2.0, beta2 * w * w / 2.0};
        const cplx dx = base + cplx{0.0, -w * dgd / 2.0};
        const cplx dy = base + cplx{0.0, +w * dgd / 2.0};
        lin_x[m] = std::exp(dx * h);
        lin_y[m] = std::exp(dy * h);
        half_x[m] = std::exp(dx * (h / 2.0));
        half_y[m] = std::exp(dy * (h / 2.0));
    }

    // Without coupling terms an empty y polarization stays exactly zero.
    const bool y_active = std::any_of(field.y.begin(), field.y.end(), [](cplx v) { return v != cplx{}; });

    Fft fft(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    fft.forward(ax);
    if (y_active) fft.forward(ay);
    for (std::size_t m = 0; m < n; ++m) {
        ax[m] *= half_x[m];
        ay[m] *= half_y[m];
    }

    for (std::size_t step = 0; step < steps; ++step) {
        fft.inverse(ax);
        if (y_active) fft.inverse(ay);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            cplx ex = ax[i] * inv_n;
            cplx ey = ay[i] * inv_n;
            const double px = std::norm(ex);
            const double py = std::norm(ey);
            if (gamma != 0.0) {
                const double phx = gamma * h * (px + 2.0 / 3.0 * py);
                ex *= cplx{std::cos(phx), std::sin(phx)};
                if (y_active) {
                    const double phy = gamma * h * (py + 2.0 / 3.0 * px);
                    ey *= cplx{std::cos(phy), std::sin(phy)};
                }
            }
            if (p_clamp > 0.0 && px + py > p_clamp) {
                const double scale = std::sqrt(p_clamp / (px + py));
                ex *= scale;
                ey *= scale;
            }
            ax[i] = ex;
            ay[i] = ey;
            total += px + py;
        }
        if (!std::isfinite(total)) {
            throw NumericalError("propagate: non-finite field at z = " + std::to_string((step + 0.5) * h) +
                                 " m (step " + std::to_string(h) + " m); reduce link.step_m or launch power");
        }
        fft.forward(ax);
        if (y_active) fft.forward(ay);
        const bool last = step + 1 == steps;
        const auto& px = last ? half_x : lin_x;
        const auto& py = last ? half_y : lin_y;
        for (std::size_t m = 0; m < n; ++m) {
            ax[m] *= px[m];
            ay[m] *= py[m];
        }
    }
    fft.inverse(ax);
    if (y_active) fft.inverse(ay);

    OpticalField out;
    out.dt = field.dt;
    out.wavelength_nm = field.wavelength_nm;
    out.x.resize(n_rec);
    out.y.resize(n_rec);
    for (std::size_t i = 0; i < n_rec; ++i) {
        out.x[i] = ax[offset + i] * inv_n;
        out.y[i] = ay[offset + i] * inv_n;
    }
    if (!out.all_finite()) throw NumericalError("propagate: non-finite output field");
    return out;
}

OpticalField propagate(const OpticalField& field, const LinkConfig& cfg)
{
    cfg.validate();
    const double length = cfg.fiber_length_km * 1e3;
    if (length == 0.0) return field;

    // Step-halving probe over the first stretch of fiber; refine until the
    // h and h/2 solutions agree.
    constexpr double kProbeTolerance = 1e-4;
    constexpr int kMaxRefinements = 6;
    double step = cfg.step_m;
    LinkConfig probe = cfg;
    for (int r = 0; r < kMaxRefinements; ++r) {
        probe.fiber_length_km = std::min(length, 10.0 * step) * 1e-3;
        if (probe.fiber_length_km * 1e3 <= step) break;
        const auto coarse = propagate_fixed_step(field, probe, step);
        const auto fine = propagate_fixed_step(field, probe, step / 2.0);
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < fine.size(); ++i) {
            diff += std::norm(coarse.x[i] - fine.x[i]) + std::norm(coarse.y[i] - fine.y[i]);
            ref += fine.power(i);
        }
        if (ref == 0.0 || std::sqrt(diff / ref) <= kProbeTolerance) break;
        step /= 2.0;
    }
    return propagate_fixed_step(field, cfg, step);
}

// ---------------------------------------------------------------------------
// Receiver

cplx rx_filter_response(double freq_hz, double cutoff_hz)
{
    // 4th-order Bessel, 105 / (s^4 + 10 s^3 + 45 s^2 + 105 s + 105), unit DC
    // group delay; frequency scaled so that |H| = 1/sqrt(2) at the cutoff.
    constexpr double kW3db = 2.11391767490422;
    const double w = kW3db * freq_hz / cutoff_hz;
    const cplx s{0.0, w};
    const cplx den = (((s + 10.0) * s + 45.0) * s + 105.0) * s + 105.0;
    // Remove the DC group delay (w / cutoff scaling gives kW3db / (2 pi fc)).
    return 105.0 / den * std::exp(cplx{0.0, w});
}

DetectedWaveform detect(const OpticalField& field, const LinkConfig& cfg)
{
    cfg.validate();
    if (field.size() == 0) throw std::invalid_argument("detect: empty field");
    const std::size_t n = field.size();
    const double fs = 1.0 / field.dt;

    std::vector<cplx> current(n);
    for (std::size_t i = 0; i < n; ++i) current[i] = cfg.responsivity * field.power(i);

    if (cfg.shot_noise_enabled || cfg.thermal_noise_enabled) {
        auto rng = make_rng(cfg.rng_seed, Stream::Detector);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double thermal_var =
            cfg.thermal_noise_enabled ? cfg.thermal_noise_density * cfg.thermal_noise_density * fs / 2.0 : 0.0;
        for (auto& v : current) {
            const double shot_var = cfg.shot_noise_enabled ? 2.0 * phys::q * std::max(v.real(), 0.0) * fs / 2.0 : 0.0;
            v += std::sqrt(shot_var + thermal_var) * gauss(rng);
        }
    }

    if (cfg.rx_filter_enabled) {
        Fft fft(n);
        fft.forward(current);
        const double fc = cfg.rx_cutoff_hz();
        for (std::size_t m = 0; m < n; ++m) {
            const double f = bin_omega(m, n, field.dt) / (2.0 * kPi);
            current[m] *= rx_filter_response(f, fc) / static_cast<double>(n);
        }
        fft.inverse(current);
    }

    const double gain = std::pow(10.0, cfg.tia_gain_db / 20.0);
    DetectedWaveform out;
    out.dt = field.dt;
    out.baud_period = field.dt * cfg.samples_per_baud;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = gain * current[i].real();
    return out;
}

SymbolStream naive_slice(const DetectedWaveform& s, const LinkConfig& cfg)
{
    const int sps = cfg.samples_per_baud;
    const std::size_t bauds = s.samples.size() / static_cast<std::size_t>(sps);
    SymbolStream out;
    if (bauds == 0) return out;
    double mean = 0.0;
    for (std::size_t b = 0; b < bauds; ++b) mean += s.samples[center_index(b, sps)];
    mean /= static_cast<double>(bauds);

    const auto levels = cfg.relative_levels();
    const double level_mean = (levels[0] + levels[1] + levels[2] + levels[3]) / 4.0;
    const double scale = mean / level_mean;
    std::array<double, 3> thresholds{};
    for (int k = 0; k < 3; ++k) thresholds[k] = scale * (levels[k] + levels[k + 1]) / 2.0;

    out.symbols.resize(bauds);
    for (std::size_t b = 0; b < bauds; ++b) {
        const double v = s.samples[center_index(b, sps)];
        std::uint8_t sym = 0;
        while (sym < 3 && v > thresholds[sym]) ++sym;
        out.symbols[b] = sym;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Optical noise

double osnr_reference_bandwidth_hz(double wavelength_nm)
{
    const double lambda = wavelength_nm * 1e-9;
    return phys::c * 0.1e-9 / (lambda * lambda);
}

OsnrEstimate estimate_osnr(const OpticalField& field)
{
    if (field.size() == 0) throw std::invalid_argument("measure_osnr: empty field");
    const std::size_t n = field.size();
    const double fs = 1.0 / field.dt;
    const double df = fs / static_cast<double>(n);

    Fft fft(n);
    std::vector<cplx> sx(field.x), sy(field.y);
    fft.forward(sx);
    fft.forward(sy);
    const double norm = 1.0 / (static_cast<double>(n) * static_cast<double>(n));
    double total = 0.0, floor_sum = 0.0;
    std::size_t floor_bins = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double p = (std::norm(sx[m]) + std::norm(sy[m])) * norm;
        total += p;
        if (std::abs(bin_omega(m, n, field.dt)) / (2.0 * kPi) >= 0.4 * fs) {
            floor_sum += p;
            ++floor_bins;
        }
    }
    OsnrEstimate est;
    if (floor_bins == 0 || total <= 0.0) return est;
    est.noise_psd_w_hz = floor_sum / (static_cast<double>(floor_bins) * df);
    est.signal_power_w = total - est.noise_psd_w_hz * fs;
    if (est.noise_psd_w_hz * fs <= 1e-20 * total) {
        est.noise_psd_w_hz = 0.0;
        est.signal_power_w = total;
        est.osnr_db = std::numeric_limits<double>::infinity();
        return est;
    }
    const double ratio = est.signal_power_w / (est.noise_psd_w_hz * osnr_reference_bandwidth_hz(field.wavelength_nm));
    est.osnr_db = ratio > 0 ? 10.0 * std::log10(ratio) : -std::numeric_limits<double>::infinity();
    return est;
}

double measure_osnr(const OpticalField& field) { return estimate_osnr(field).osnr_db; }

OpticalField add_ase_noise(const OpticalField& field, double target_db, std::uint64_t seed)
{
    if (std::isinf(target_db) && target_db > 0) return field;
    if (!std::isfinite(target_db)) throw std::invalid_argument("add_ase_noise: target OSNR must be finite or +inf");
    const auto est = estimate_osnr(field);
    if (!(est.signal_power_w > 0.0)) throw std::invalid_argument("add_ase_noise: field carries no signal power");
    const double b_ref = osnr_reference_bandwidth_hz(field.wavelength_nm);
    const double required = est.signal_power_w / (db_to_lin(target_db) * b_ref);
    const double extra = required - est.noise_psd_w_hz;
    if (!(extra > 0.0)) {
        throw std::invalid_argument("add_ase_noise: target " + std::to_string(target_db) +
                                    " dB unreachable, field OSNR is already " + std::to_string(est.osnr_db) + " dB");
    }
    // Per polarization, complex white noise with PSD extra/2 over the full band.
    const double per_component = std::sqrt(extra / 2.0 / field.dt / 2.0);
    auto rng = make_rng(seed, Stream::Ase);
    std::normal_distribution<double> gauss(0.0, 1.0);
    OpticalField out = field;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double a = gauss(rng), b = gauss(rng), c = gauss(rng), d = gauss(rng);
        out.x[i] += per_component * cplx{a, b};
        out.y[i] += per_component * cplx{c, d};
    }
    return out;
}

} // namespace lrc
