#include "lrc/pipeline.hpp"

#include "lrc/errors.hpp"
#include "lrc/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace lrc {

Normalized normalize_fit(std::span<const double> s)
{
    if (s.empty()) throw std::invalid_argument("normalize: empty waveform");
    const auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    if (!(*hi > *lo)) throw std::invalid_argument("normalize: degenerate waveform (max == min)");
    Normalized out;
    out.affine = {*lo, 1.0 / (*hi - *lo)};
    out.values.resize(s.size());
    std::transform(s.begin(), s.end(), out.values.begin(), [&](double v) { return out.affine.apply(v); });
    return out;
}

std::vector<double> normalize_apply(std::span<const double> s, const NormAffine& affine)
{
    if (s.empty()) throw std::invalid_argument("normalize: empty waveform");
    std::vector<double> out(s.size());
    std::transform(s.begin(), s.end(), out.begin(),
                   [&](double v) { return std::clamp(affine.apply(v), -0.1, 1.1); });
    return out;
}

std::vector<double> oversample(std::span<const double> s, std::size_t factor)
{
    if (factor < 1) throw std::invalid_argument("oversample: factor must be >= 1");
    std::vector<double> out;
    out.reserve(s.size() * factor);
    for (double v : s) out.insert(out.end(), factor, v);
    return out;
}

MaskConfig make_mask(std::size_t n_nodes, std::uint64_t seed, MaskKind kind)
{
    if (n_nodes == 0) throw ConfigError("mask.n_nodes: must be > 0");
    MaskConfig m;
    m.n_nodes = n_nodes;
    m.rng_seed = seed;
    m.kind = kind;
    auto rng = make_rng(seed, Stream::Mask);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    m.values.resize(n_nodes);
    for (auto& v : m.values) {
        v = kind == MaskKind::Uniform ? uni(rng) : static_cast<double>(rng() & 1u);
    }
    return m;
}

std::vector<double> apply_mask(std::span<const double> s, const MaskConfig& mask)
{
    const std::size_t n = mask.values.size();
    if (n == 0 || n != mask.n_nodes) throw std::invalid_argument("apply_mask: mask length differs from n_nodes");
    if (s.size() % n != 0) {
        throw std::invalid_argument("apply_mask: waveform length " + std::to_string(s.size()) +
                                    " is not a multiple of N = " + std::to_string(n));
    }
    std::vector<double> out(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) out[i] = mask.values[i % n] * s[i];
    return out;
}

Eigen::MatrixXd sample_nodes(std::span<const double> trace, std::size_t steps_per_slot, std::size_t n_nodes)
{
    const std::size_t per_symbol = steps_per_slot * n_nodes;
    if (per_symbol == 0 || trace.size() % per_symbol != 0) {
        throw std::invalid_argument("sample_nodes: trace length " + std::to_string(trace.size()) +
                                    " is not a whole number of delay periods");
    }
    const std::size_t symbols = trace.size() / per_symbol;
    Eigen::MatrixXd nodes(static_cast<Eigen::Index>(symbols), static_cast<Eigen::Index>(n_nodes));
    for (std::size_t b = 0; b < symbols; ++b) {
        for (std::size_t i = 0; i < n_nodes; ++i) {
            nodes(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(i)) =
                trace[b * per_symbol + (i + 1) * steps_per_slot - 1];
        }
    }
    return nodes;
}

std::vector<std::string> FeatureMatrix::column_names() const
{
    std::vector<std::string> names;
    names.reserve(cols());
    for (int j = -taps; j <= taps; ++j) {
        for (std::size_t i = 0; i < nodes; ++i) {
            names.push_back("node" + std::to_string(i) + "_tap" + std::to_string(j));
        }
    }
    names.emplace_back("bias");
    return names;
}

FeatureMatrix assemble_features(const Eigen::MatrixXd& nodes, int k)
{
    if (k < 0) throw std::invalid_argument("assemble_features: taps must be >= 0");
    const Eigen::Index rows = nodes.rows();
    const Eigen::Index n = nodes.cols();
    const Eigen::Index width = (2 * k + 1) * n;
    FeatureMatrix f;
    f.taps = k;
    f.nodes = static_cast<std::size_t>(n);
    f.x = Eigen::MatrixXd::Zero(rows, width + 1);
    for (int j = -k; j <= k; ++j) {
        const Eigen::Index col = (j + k) * n;
        // Rows b with 0 <= b + j < rows.
        const Eigen::Index first = std::max<Eigen::Index>(0, -j);
        const Eigen::Index last = std::min<Eigen::Index>(rows, rows - j);
        if (last > first) {
            f.x.block(first, col, last - first, n) = nodes.middleRows(first + j, last - first);
        }
    }
    f.x.col(width).setOnes();
    return f;
}

void write_features_csv(const std::filesystem::path& path, const FeatureMatrix& f)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const auto names = f.column_names();
    for (std::size_t c = 0; c < names.size(); ++c) out << (c ? "," : "") << names[c];
    out << '\n';
    out.precision(17);
    for (Eigen::Index r = 0; r < f.x.rows(); ++r) {
        for (Eigen::Index c = 0; c < f.x.cols(); ++c) out << (c ? "," : "") << f.x(r, c);
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

double speed_penalty(double bit_rate, double tau_ns) { return bit_rate / 2.0 * tau_ns * 1e-9; }

std::size_t steps_per_slot(const ReservoirParams& p, std::size_t n_nodes)
{
    if (n_nodes == 0) throw ConfigError("mask.n_nodes: must be > 0");
    const std::size_t period = p.delay_steps();
    if (std::abs(p.tau / p.dt - static_cast<double>(period)) > 1e-9 * static_cast<double>(period) ||
        period % n_nodes != 0) {
        throw ConfigError("reservoir: theta = tau / N must be a whole number of dt steps (tau = " +
                          std::to_string(p.tau) + " ns, N = " + std::to_string(n_nodes) +
                          ", dt = " + std::to_string(p.dt) + " ns)");
    }
    return period / n_nodes;
}

Eigen::MatrixXd reservoir_nodes(std::span<const double> masked, std::size_t n_nodes, const ReservoirParams& p,
                                std::size_t chunk_symbols)
{
    const std::size_t per_slot = steps_per_slot(p, n_nodes);
    const double theta = p.tau / static_cast<double>(n_nodes);
    if (masked.size() % n_nodes != 0 || masked.empty()) {
        throw std::invalid_argument("reservoir_nodes: input is not a whole number of symbols");
    }
    const std::size_t symbols = masked.size() / n_nodes;
    chunk_symbols = std::max<std::size_t>(chunk_symbols, 1);

    auto state = initial_state(p);
    warm_up(state, build_injection(masked.first(n_nodes), theta, p), p);

    const double unit = p.e_inj0 > 0.0 ? 1.0 / (p.e_inj0 * p.e_inj0) : 1.0;
    Eigen::MatrixXd nodes(static_cast<Eigen::Index>(symbols), static_cast<Eigen::Index>(n_nodes));
    for (std::size_t b = 0; b < symbols; b += chunk_symbols) {
        const std::size_t count = std::min(chunk_symbols, symbols - b);
        const auto inj = build_injection(masked.subspan(b * n_nodes, count * n_nodes), theta, p);
        const auto trace = integrate(inj, p, state);
        nodes.middleRows(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(count)) =
            sample_nodes(trace, per_slot, n_nodes) * unit;
    }
    return nodes;
}

} // namespace lrc
