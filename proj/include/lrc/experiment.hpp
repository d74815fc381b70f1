#pragma once

// End-to-end experiment configuration and orchestration shared by the CLI,
// the sweeps and the acceptance suite.

#include "lrc/link.hpp"
#include "lrc/pipeline.hpp"
#include "lrc/readout.hpp"
#include "lrc/reservoir.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lrc {

struct ReadoutConfig {
    SplitSpec split;
    std::vector<double> lambda_grid = default_lambda_grid();
    int taps = 10;
};

struct RunConfig {
    std::size_t n_symbols = std::size_t{1} << 17;
    int n_test_sets = 5;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    double osnr_db = std::numeric_limits<double>::infinity(); // receiver-side noise loading
    int probe_symbols = 256;
    int probe_trials = 3;
};

/// Parameter ranges for the sweep subcommand. Empty lists fall back to the
/// defaults of the chosen kind.
struct SweepConfig {
    std::string kind = "map";        // map | taps | power | osnr
    std::vector<double> delta_f;     // GHz
    std::vector<double> k_f;
    std::vector<double> power_dbm;
    std::vector<double> osnr_db;
    std::vector<double> taps;
    int replicates = 1;              // seeds per grid point
};

struct ExperimentConfig {
    LinkConfig link;
    ReservoirParams reservoir;
    MaskConfig mask = make_mask(32, 11);
    ReadoutConfig readout;
    RunConfig run;
    SweepConfig sweep;

    /// Field-level diagnostics via ConfigError.
    void validate() const;
    std::size_t oversampling() const;
    double theta_ns() const { return reservoir.tau / static_cast<double>(mask.n_nodes); }
};

/// Flat "section.key = value" text, '#' comments. Unknown keys are rejected.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});
/// Canonical text with every key except run.output_dir, in a fixed order.
std::string to_text(const ExperimentConfig& cfg);
/// FNV-1a 64 of to_text(cfg), hex.
std::string config_hash(const ExperimentConfig& cfg);

/// Seed of the i-th stream: 0 trains, 1..n_test_sets are the test sets.
std::uint64_t stream_seed(std::uint64_t base, int index);

struct SimulatedStream {
    SymbolStream symbols;
    OpticalField launch;
    OpticalField received;
    DetectedWaveform detected;
};

/// Random bits -> PAM-4 -> fiber -> optional ASE loading -> receiver.
SimulatedStream simulate_stream(const LinkConfig& link, std::size_t n_symbols, std::uint64_t seed,
                                double osnr_db = std::numeric_limits<double>::infinity());

/// Detected waveform and ground truth, the part of a stream the post-processing sees.
struct LabeledTrace {
    DetectedWaveform detected;
    SymbolStream symbols;
};

/// Normalized and masked inputs shared by every reservoir operating point.
struct PreparedData {
    NormAffine affine;
    std::vector<double> train_normalized;
    std::vector<double> train_masked;
    SymbolStream train_symbols;
    std::vector<std::vector<double>> test_normalized;
    std::vector<std::vector<double>> test_masked;
    std::vector<SymbolStream> test_symbols;
    std::vector<double> naive_ber;   // per test set
    std::size_t samples_per_baud = 0;
};

PreparedData prepare(const ExperimentConfig& cfg, const LabeledTrace& train, const std::vector<LabeledTrace>& tests);

/// Reservoir node responses for the training stream and each test stream.
struct NodeSet {
    Eigen::MatrixXd train;
    std::vector<Eigen::MatrixXd> tests;
};

NodeSet run_reservoir(const ReservoirParams& params, std::size_t n_nodes, const PreparedData& data);

struct ReadoutOutcome {
    ReadoutModel model;
    std::vector<BerResult> test;     // per test set, edges skipped
    double mean_ber = 0.0;
};

ReadoutOutcome evaluate_readout(const Eigen::MatrixXd& train_nodes, const std::vector<Eigen::MatrixXd>& test_nodes,
                                const PreparedData& data, const ReadoutConfig& readout, int taps);

/// Baseline: the same readout on the normalized detected samples.
ReadoutOutcome evaluate_baseline(const PreparedData& data, const ReadoutConfig& readout, int taps);

/// Consistency SNR of the reservoir on the first probe_symbols of the training input.
double reservoir_snr(const ExperimentConfig& cfg, const PreparedData& data);

struct PipelineReport {
    double ber_rc = 0.0;
    double ber_lr = 0.0;
    double ber_naive = 0.0;
    std::vector<double> ber_rc_sets, ber_lr_sets, ber_naive_sets;
    double lambda_rc = 0.0;
    double lambda_lr = 0.0;
    std::size_t counted_bits = 0;   // per test set
    double speed_penalty = 0.0;
    double theta_ps = 0.0;
    ReadoutModel rc_model;
    NormAffine affine;
};

/// Full post-processing chain. Stage rejections are rethrown with the stage
/// name prefixed. train_features, when given, receives the training features.
PipelineReport run_pipeline(const ExperimentConfig& cfg, const LabeledTrace& train,
                            const std::vector<LabeledTrace>& tests, FeatureMatrix* train_features = nullptr);

/// JSON text embedding the resolved config and its hash. Deterministic.
std::string report_json(const ExperimentConfig& cfg, const PipelineReport& report);

/// Built-in named presets (r1, r2, b2b and the figure recipes).
std::optional<ExperimentConfig> builtin_preset(const std::string& name);
std::vector<std::string> preset_names();
/// Shrinks stream lengths and test-set counts to desk scale.
void apply_desk_scale(ExperimentConfig& cfg);

} // namespace lrc
