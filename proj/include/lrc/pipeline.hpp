#pragma once

// Time-multiplexed reservoir input and output processing: normalization,
// oversampling, masking, virtual-node sampling and tap-window features.

#include "lrc/reservoir.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lrc {

/// value -> (value - offset) * scale
struct NormAffine {
    double offset = 0.0;
    double scale = 1.0;
    double apply(double v) const { return (v - offset) * scale; }
};

struct Normalized {
    std::vector<double> values;
    NormAffine affine;
};

/// Maps the span's min to 0 and max to 1. Constant input is rejected.
Normalized normalize_fit(std::span<const double> s);

/// Applies a stored affine and clamps to [-0.1, 1.1].
std::vector<double> normalize_apply(std::span<const double> s, const NormAffine& affine);

/// Zero-order hold: every sample repeated factor times.
std::vector<double> oversample(std::span<const double> s, std::size_t factor);

enum class MaskKind { Uniform, Binary };

struct MaskConfig {
    std::size_t n_nodes = 32;
    std::vector<double> values;
    std::uint64_t rng_seed = 11;
    MaskKind kind = MaskKind::Uniform;
};

MaskConfig make_mask(std::size_t n_nodes, std::uint64_t seed, MaskKind kind = MaskKind::Uniform);

/// value[b * N + i] = mask[i] * s[b * N + i]. Length must be a multiple of N.
std::vector<double> apply_mask(std::span<const double> s, const MaskConfig& mask);

/// Virtual-node responses (symbols x N): the trace value at the last step of
/// each theta slot.
Eigen::MatrixXd sample_nodes(std::span<const double> trace, std::size_t steps_per_slot, std::size_t n_nodes);

struct FeatureMatrix {
    Eigen::MatrixXd x;           // rows: symbols, cols: (2k+1) N + 1
    int taps = 0;                // k, taps on each side
    std::size_t nodes = 0;       // N per symbol

    std::size_t rows() const { return static_cast<std::size_t>(x.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(x.cols()); }
    std::vector<std::string> column_names() const;
};

/// Row b = [nodes(b-k) ... nodes(b+k), 1]; rows outside the stream are zero.
FeatureMatrix assemble_features(const Eigen::MatrixXd& nodes, int k);

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& f);

/// Slowdown from stretching one symbol over one delay period: (R / 2) tau.
double speed_penalty(double bit_rate, double tau_ns);

/// theta = tau / N, checked to be a whole number of integration steps.
std::size_t steps_per_slot(const ReservoirParams& p, std::size_t n_nodes);

/// Runs masked per-node values (N per symbol) through the reservoir in chunks
/// and returns node responses in units of E_inj0^2. The reservoir is warmed up
/// on the first symbol.
Eigen::MatrixXd reservoir_nodes(std::span<const double> masked, std::size_t n_nodes, const ReservoirParams& p,
                                std::size_t chunk_symbols = 256);

} // namespace lrc
