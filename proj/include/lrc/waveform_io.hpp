#pragma once

// Binary trace files: little-endian header {"LRC1", dt: f64 seconds,
// count: u64 time samples} followed by f64 payload. Detected (real) traces
// store one value per sample; optical traces interleave re_x, im_x, re_y,
// im_y. Symbol files hold one ASCII digit '0'..'3' per byte.

#include "lrc/link.hpp"

#include <filesystem>
#include <vector>

namespace lrc::io {

inline constexpr char kMagic[4] = {'L', 'R', 'C', '1'};
inline constexpr std::size_t kHeaderBytes = 4 + 8 + 8;

void write_trace(const std::filesystem::path& path, double dt, const std::vector<double>& samples);
void write_optical(const std::filesystem::path& path, const OpticalField& field);
void write_symbols(const std::filesystem::path& path, const SymbolStream& symbols);

struct RealTrace {
    double dt = 0.0;
    std::vector<double> samples;
};

/// Throws IoError naming the byte offset on truncation or a bad header.
RealTrace read_trace(const std::filesystem::path& path);
OpticalField read_optical(const std::filesystem::path& path, double wavelength_nm);
SymbolStream read_symbols(const std::filesystem::path& path);

} // namespace lrc::io
