#pragma once

// PAM-4 intensity-modulated fiber link: transmitter, dual-polarization
// nonlinear fiber, optical noise loading and square-law receiver.

#include <array>
#include <complex>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace lrc {

using cplx = std::complex<double>;

namespace phys {
inline constexpr double c = 299792458.0;           // m/s
inline constexpr double q = 1.602176634e-19;       // C
inline constexpr double hd_fec_ber = 3.8e-3;
} // namespace phys

struct LinkConfig {
    double bit_rate = 56e9;              // bit/s
    double fiber_length_km = 27.0;
    double launch_peak_power_dbm = 10.0;
    double attenuation_db_km = 0.2;
    double dispersion_ps_nm_km = 17.0;
    double n2 = 2.6e-20;                 // m^2/W
    double a_eff_um2 = 80.0;
    double dgd_ps_km = 0.2;
    double rin_db_hz = -150.0;
    double wavelength_nm = 1550.0;
    int samples_per_baud = 8;
    double responsivity = 0.9;           // A/W
    double tia_gain_db = 10.0;
    double rx_cutoff_fraction = 0.7;     // of the bit rate
    std::uint64_t rng_seed = 1;

    // Numerical and device details not fixed by the link budget above.
    double step_m = 50.0;
    double extinction_floor = 1.0 / 21.0;       // lowest level / peak power
    double thermal_noise_density = 10e-12;      // A/sqrt(Hz), input referred
    bool rin_enabled = true;
    bool shot_noise_enabled = true;
    bool thermal_noise_enabled = true;
    bool rx_filter_enabled = true;
    bool sbs_clamp = false;
    double sbs_gain = 5e-11;                    // m/W, for the Smith threshold
    int guard_symbols = 32;

    /// Throws ConfigError naming the offending field.
    void validate() const;

    double baud_rate() const { return bit_rate / 2.0; }
    double sample_rate() const { return baud_rate() * samples_per_baud; }
    double sample_interval() const { return 1.0 / sample_rate(); }
    double launch_peak_power_w() const;
    double gamma() const;                        // 1/(W m)
    double beta2() const;                        // s^2/m
    double alpha_per_m() const;                  // field-power attenuation, 1/m
    double rx_cutoff_hz() const { return rx_cutoff_fraction * bit_rate; }
    double smith_threshold_w() const;
    /// Optical power of each PAM-4 level relative to the peak, ascending.
    std::array<double, 4> relative_levels() const;
};

/// Dual-polarization complex envelope in sqrt(W) on a uniform time grid.
struct OpticalField {
    std::vector<cplx> x;
    std::vector<cplx> y;
    double dt = 0.0;               // s
    double wavelength_nm = 1550.0;

    std::size_t size() const { return x.size(); }
    double power(std::size_t i) const { return std::norm(x[i]) + std::norm(y[i]); }
    double mean_power() const;
    double energy() const;         // sum of power * dt, J
    bool all_finite() const;
};

/// PAM-4 symbols 0..3 in amplitude order.
///
/// Gray map (two bits, first bit most significant): 00->0, 01->1, 11->2, 10->3.
struct SymbolStream {
    std::vector<std::uint8_t> symbols;

    std::size_t size() const { return symbols.size(); }
    static constexpr std::array<std::uint8_t, 4> kGrayBits{0b00, 0b01, 0b11, 0b10};
    static std::uint8_t bits_of(std::uint8_t symbol) { return kGrayBits.at(symbol); }
    static std::uint8_t symbol_of(std::uint8_t bits);
    std::vector<std::uint8_t> to_bits() const;
};

struct DetectedWaveform {
    std::vector<double> samples;
    double dt = 0.0;            // s
    double baud_period = 0.0;   // s

    std::size_t samples_per_baud() const;
};

std::vector<std::uint8_t> random_bits(std::size_t count, std::uint64_t seed);

/// Bits (one 0/1 value per entry) to Gray-coded symbols. Odd count is rejected.
SymbolStream encode_pam4(std::span<const std::uint8_t> bits);

/// Linear-regime MZM: each baud-center sample carries the symbol's level
/// exactly; the field between centers follows a full-rolloff raised-cosine
/// interpolation of the level amplitudes. All power launched in x.
OpticalField modulate(const SymbolStream& sym, const LinkConfig& cfg);

/// Symmetric split-step Fourier solution of the coupled NLS equations with
/// loss, GVD, SPM plus 2/3 cross-polarization XPM, and a fixed-axis DGD.
OpticalField propagate(const OpticalField& field, const LinkConfig& cfg);

/// Propagation with a fixed step and no refinement probe.
OpticalField propagate_fixed_step(const OpticalField& field, const LinkConfig& cfg, double step_m);

/// PIN + TIA receiver: square law, shot and thermal noise, 4th-order Bessel
/// low-pass at rx_cutoff_fraction * bit_rate (group delay removed), gain.
DetectedWaveform detect(const OpticalField& field, const LinkConfig& cfg);

/// Complex transfer function of the receiver filter, delay-compensated.
cplx rx_filter_response(double freq_hz, double cutoff_hz);

/// Noise reference bandwidth for OSNR: 0.1 nm expressed in Hz at wavelength.
double osnr_reference_bandwidth_hz(double wavelength_nm);

struct OsnrEstimate {
    double osnr_db = std::numeric_limits<double>::infinity();
    double signal_power_w = 0.0;
    double noise_psd_w_hz = 0.0;  // both polarizations
};

/// OSNR from the spectrum: the white-noise floor is estimated in the
/// outermost part of the simulation band (|f| >= 0.4 fs), which the
/// transmitted signal does not occupy. Zero floor reports +inf.
OsnrEstimate estimate_osnr(const OpticalField& field);
double measure_osnr(const OpticalField& field);

/// Adds complex white Gaussian noise to both polarizations so that the
/// measured OSNR equals target_db. +inf returns the field unchanged.
/// Throws std::invalid_argument when the field is already noisier.
OpticalField add_ase_noise(const OpticalField& field, double target_db, std::uint64_t seed);

/// Baud-center sample index within baud b.
inline std::size_t center_index(std::size_t baud, int samples_per_baud)
{
    return baud * static_cast<std::size_t>(samples_per_baud) + static_cast<std::size_t>(samples_per_baud / 2);
}

/// Untrained slicer: samples each baud center and compares with the midpoints
/// of the four expected levels, scaled so that their mean matches the
/// waveform's mean baud-center value.
SymbolStream naive_slice(const DetectedWaveform& s, const LinkConfig& cfg);

} // namespace lrc
