#pragma once

// Sweeps over reservoir and link operating points, diagnostic quantities
// (lagged Pearson correlation, eye histograms) and CSV/SVG output.

#include "lrc/experiment.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace lrc {

struct SweepGrid {
    std::vector<double> delta_f;        // GHz
    std::vector<double> k_f;
    std::vector<std::uint64_t> seeds;
};

/// 11 x 9 grid: delta_f -50..50 GHz in 10 GHz steps, k_f 0..0.2 in 0.025 steps.
SweepGrid default_map_grid(std::vector<std::uint64_t> seeds = {1});

struct SweepRecord {
    double x = std::numeric_limits<double>::quiet_NaN();   // swept link/readout parameter, if any
    double delta_f = 0.0;
    double k_f = 0.0;
    std::uint64_t seed = 0;
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    double ber_rc = std::numeric_limits<double>::quiet_NaN();
    double ber_lr = std::numeric_limits<double>::quiet_NaN();
    double ber_naive = std::numeric_limits<double>::quiet_NaN();
    std::size_t n_bits = 0;             // counted bits summed over test sets
    std::string reason;                 // set when the point failed
};

struct SweepOptions {
    unsigned threads = 0;               // 0: hardware concurrency
    bool with_snr = true;
    const std::atomic<bool>* cancel = nullptr;
    /// Called after each finished point, serialized.
    std::function<void(const SweepRecord&)> on_record;
};

/// Runs fn(i) for i in [0, n) on a pool of worker threads pulling from a
/// shared counter. Stops handing out work once cancel is set.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads,
                  const std::atomic<bool>* cancel = nullptr);

/// Training plus test streams for one seed, normalized and masked.
PreparedData prepare_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Reservoir BER (and optionally consistency SNR) at cfg's operating point,
/// with the baseline and naive slicer numbers of the same data.
SweepRecord evaluate_point(const ExperimentConfig& cfg, const PreparedData& data, std::uint64_t seed,
                           bool with_snr);

/// Delta_f x k_f map. data[i] belongs to grid.seeds[i]. Failed points carry
/// NaN and a reason; records come back in grid order (seed, delta_f, k_f).
std::vector<SweepRecord> run_map(const SweepGrid& grid, const ExperimentConfig& cfg,
                                 const std::vector<PreparedData>& data, const SweepOptions& opt = {});

/// BER against taps per side; node responses are computed once per seed.
std::vector<SweepRecord> run_tap_sweep(const std::vector<int>& taps, const ExperimentConfig& cfg,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::vector<PreparedData>& data, const SweepOptions& opt = {});

/// BER against launch peak power (dBm); every point simulates its own streams.
std::vector<SweepRecord> run_power_sweep(const std::vector<double>& power_dbm, const ExperimentConfig& cfg,
                                         const std::vector<std::uint64_t>& seeds, const SweepOptions& opt = {});

/// BER against OSNR (dB) with the noise loaded before detection. The fiber
/// output is shared across OSNR points of the same seed.
std::vector<SweepRecord> run_osnr_sweep(const std::vector<double>& osnr_db, const ExperimentConfig& cfg,
                                        const std::vector<std::uint64_t>& seeds, const SweepOptions& opt = {});

struct LaggedCorrelation {
    double r = 0.0;
    int lag = 0;                        // b is compared at index i + lag
};

/// Pearson r at the lag within +-max_lag with the largest |r|.
/// Throws std::invalid_argument on short or constant input.
LaggedCorrelation pearson_lagged(std::span<const double> a, std::span<const double> b, int max_lag);

/// Correlation between the masked reservoir input and the node responses,
/// both flattened in slot order, over the first `symbols` symbols.
LaggedCorrelation injection_response_correlation(const ExperimentConfig& cfg, const PreparedData& data,
                                                 std::size_t symbols, int max_lag = 4);

struct EyeHistogram {
    std::size_t phase_bins = 0;
    std::size_t amp_bins = 0;
    double amp_min = 0.0;
    double amp_max = 0.0;
    std::vector<std::size_t> counts;    // row-major, amp_bins x phase_bins

    std::size_t at(std::size_t amp, std::size_t phase) const { return counts[amp * phase_bins + phase]; }
    /// Runs of consecutive occupied amplitude bins in one phase column.
    std::size_t bands(std::size_t phase) const;
};

/// Folds the waveform modulo two baud periods into a phase x amplitude grid.
EyeHistogram eye_data(const DetectedWaveform& s, std::size_t amp_bins = 64);

struct AggregateRow {
    double x = 0.0;
    double delta_f = 0.0;
    double k_f = 0.0;
    std::size_t count = 0;              // finite BER values
    std::size_t nan_count = 0;
    double snr_mean = std::numeric_limits<double>::quiet_NaN();
    double ber_mean = std::numeric_limits<double>::quiet_NaN();
    double ber_min = std::numeric_limits<double>::quiet_NaN();
    double ber_max = std::numeric_limits<double>::quiet_NaN();
    double ber_std = std::numeric_limits<double>::quiet_NaN();   // sample std, NaN below 2 values
    double ber_lr_mean = std::numeric_limits<double>::quiet_NaN();
    double ber_naive_mean = std::numeric_limits<double>::quiet_NaN();
};

/// Per grid point statistics of the reservoir BER across seeds, sorted by
/// (x, delta_f, k_f). NaN values are left out of the statistics and counted.
std::vector<AggregateRow> aggregate(const std::vector<SweepRecord>& records);

/// x_name labels the leading swept-parameter column; empty omits it.
std::string records_csv_header(const std::string& x_name = "");
std::string record_csv_line(const SweepRecord& r, bool with_x);
void write_records_csv(const std::filesystem::path& path, const std::vector<SweepRecord>& records,
                       const std::string& x_name = "");
std::vector<SweepRecord> read_records_csv(const std::filesystem::path& path);
void write_aggregate_csv(const std::filesystem::path& path, const std::vector<AggregateRow>& rows,
                         const std::string& x_name = "");

/// Heatmap of values (rows: ys, cols: xs). log_scale colors by log10.
void write_heatmap_svg(const std::filesystem::path& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, const std::vector<std::vector<double>>& values,
                       const std::string& title, const std::string& x_label, const std::string& y_label,
                       bool log_scale);

struct LineSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Line plot; log_y plots log10(y) and skips non-positive values. A
/// horizontal marker is drawn at hline when it is finite.
void write_line_svg(const std::filesystem::path& path, const std::vector<LineSeries>& series,
                    const std::string& title, const std::string& x_label, const std::string& y_label, bool log_y,
                    double hline = std::numeric_limits<double>::quiet_NaN());

} // namespace lrc
