#pragma once

// Linear (ridge) readout: level regression on features, midpoint slicing to
// PAM-4 symbols and Gray-coded bit error counting.

#include "lrc/link.hpp"
#include "lrc/pipeline.hpp"

#include <Eigen/Dense>

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lrc {

struct SplitSpec {
    double train_fraction = 0.75;
    double validation_fraction = 0.25;
    void validate() const;
};

struct ReadoutModel {
    Eigen::VectorXd weights;
    double ridge_lambda = 0.0;
    std::array<double, 4> target_levels{-3.0, -1.0, 1.0, 3.0};
    std::array<double, 3> thresholds{-2.0, 0.0, 2.0};
    NormAffine norm_affine;
    double validation_ber = 0.0;
    std::vector<std::string> warnings;   // skipped grid points
};

/// 13 values log-spaced from 1e-8 to 1e4.
std::vector<double> default_lambda_grid();

struct RidgeSolution {
    Eigen::VectorXd weights;
    double relative_residual = 0.0;      // |(G + lambda I) w - b| / |b|
    bool accepted = false;
};

/// Solves (G + lambda I) w = b with a Cholesky factorization and one step of
/// iterative refinement. Rejected when the factorization fails or the
/// relative residual exceeds 1e-8.
RidgeSolution solve_ridge(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double lambda);

inline constexpr double kRidgeResidualTolerance = 1e-8;

Eigen::MatrixXd gram_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x);

/// Fits on the leading train_fraction of rows for every lambda, keeps the
/// lambda with the lowest validation BER on the trailing rows (ties: lowest
/// validation MSE), then refits on all rows. Throws NumericalError if no
/// grid point yields an accepted solve.
ReadoutModel train_ridge(const FeatureMatrix& x, const SymbolStream& y, const SplitSpec& split,
                         std::span<const double> lambda_grid);

Eigen::VectorXd predict(const ReadoutModel& model, const FeatureMatrix& x);

/// Nearest target level through the thresholds; a value exactly on a
/// threshold goes to the lower level.
SymbolStream slice(const Eigen::VectorXd& prediction, const std::array<double, 3>& thresholds);

SymbolStream predict_and_slice(const ReadoutModel& model, const FeatureMatrix& x);

struct BerResult {
    double ber = 0.0;
    double ser = 0.0;
    std::size_t counted_bits = 0;
    std::size_t bit_errors = 0;
    std::size_t symbol_errors = 0;
};

/// Bit and symbol error rates with skip_edges symbols dropped at each end.
BerResult ber(const SymbolStream& hat, const SymbolStream& ref, std::size_t skip_edges);

/// Raw detected samples per baud as the per-symbol feature block.
Eigen::MatrixXd sample_blocks(std::span<const double> samples, std::size_t samples_per_baud);

struct BaselineResult {
    ReadoutModel model;
    double ber = 0.0;           // validation BER of the selected lambda
};

/// Linear regression on the normalized detected waveform itself, with the
/// same tap windowing and training procedure as the reservoir readout.
BaselineResult baseline_lr(std::span<const double> normalized, std::size_t samples_per_baud, const SymbolStream& y,
                           const SplitSpec& split, int taps, std::span<const double> lambda_grid);

/// CSV: a '#'-prefixed JSON header line, then "weight" and one value per line.
void write_model(const std::filesystem::path& path, const ReadoutModel& model);
ReadoutModel read_model(const std::filesystem::path& path);

} // namespace lrc
