#include "lrc/waveform_io.hpp"

#include "lrc/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

namespace lrc::io {

static_assert(std::endian::native == std::endian::little, "trace files are written in host order");

namespace {

std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::vector<char> slurp(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_header(std::ofstream& out, double dt, std::uint64_t count)
{
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(&dt), sizeof dt);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
}

void finish(std::ofstream& out, const std::filesystem::path& path)
{
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

// Returns (dt, count) after checking the magic and the payload size.
std::pair<double, std::uint64_t> parse_header(const std::vector<char>& bytes, const std::filesystem::path& path,
                                              std::size_t values_per_sample)
{
    if (bytes.size() < kHeaderBytes) {
        throw IoError(path.string() + ": truncated header at byte offset " + std::to_string(bytes.size()) +
                      " (need " + std::to_string(kHeaderBytes) + ")");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw IoError(path.string() + ": bad magic at byte offset 0");
    }
    double dt = 0.0;
    std::uint64_t count = 0;
    std::memcpy(&dt, bytes.data() + 4, 8);
    std::memcpy(&count, bytes.data() + 12, 8);
    if (!(dt > 0.0)) throw IoError(path.string() + ": invalid sample interval at byte offset 4");
    const std::uint64_t expected = kHeaderBytes + count * values_per_sample * sizeof(double);
    if (bytes.size() < expected) {
        // First incomplete sample starts at the last whole-sample boundary.
        const std::size_t stride = values_per_sample * sizeof(double);
        const std::size_t whole = (bytes.size() - kHeaderBytes) / stride;
        throw IoError(path.string() + ": truncated payload at byte offset " +
                      std::to_string(kHeaderBytes + whole * stride) + " (file has " + std::to_string(bytes.size()) +
                      " bytes, header declares " + std::to_string(expected) + ")");
    }
    if (bytes.size() > expected) {
        throw IoError(path.string() + ": trailing data at byte offset " + std::to_string(expected));
    }
    return {dt, count};
}

} // namespace

void write_trace(const std::filesystem::path& path, double dt, const std::vector<double>& samples)
{
    auto out = open_out(path);
    write_header(out, dt, samples.size());
    out.write(reinterpret_cast<const char*>(samples.data()),
              static_cast<std::streamsize>(samples.size() * sizeof(double)));
    finish(out, path);
}

void write_optical(const std::filesystem::path& path, const OpticalField& field)
{
    auto out = open_out(path);
    write_header(out, field.dt, field.size());
    std::vector<double> buf;
    buf.reserve(4 * field.size());
    for (std::size_t i = 0; i < field.size(); ++i) {
        buf.push_back(field.x[i].real());
        buf.push_back(field.x[i].imag());
        buf.push_back(field.y[i].real());
        buf.push_back(field.y[i].imag());
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(double)));
    finish(out, path);
}

void write_symbols(const std::filesystem::path& path, const SymbolStream& symbols)
{
    auto out = open_out(path);
    std::string digits(symbols.size(), '0');
    for (std::size_t i = 0; i < symbols.size(); ++i) digits[i] = static_cast<char>('0' + symbols.symbols[i]);
    out.write(digits.data(), static_cast<std::streamsize>(digits.size()));
    finish(out, path);
}

RealTrace read_trace(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    const auto [dt, count] = parse_header(bytes, path, 1);
    RealTrace t;
    t.dt = dt;
    t.samples.resize(count);
    std::memcpy(t.samples.data(), bytes.data() + kHeaderBytes, count * sizeof(double));
    return t;
}

OpticalField read_optical(const std::filesystem::path& path, double wavelength_nm)
{
    const auto bytes = slurp(path);
    const auto [dt, count] = parse_header(bytes, path, 4);
    std::vector<double> buf(4 * count);
    std::memcpy(buf.data(), bytes.data() + kHeaderBytes, buf.size() * sizeof(double));
    OpticalField f;
    f.dt = dt;
    f.wavelength_nm = wavelength_nm;
    f.x.resize(count);
    f.y.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        f.x[i] = {buf[4 * i], buf[4 * i + 1]};
        f.y[i] = {buf[4 * i + 2], buf[4 * i + 3]};
    }
    return f;
}

SymbolStream read_symbols(const std::filesystem::path& path)
{
    const auto bytes = slurp(path);
    SymbolStream s;
    s.symbols.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) {
        const char c = bytes[i];
        if (c < '0' || c > '3') {
            throw IoError(path.string() + ": invalid symbol byte at byte offset " + std::to_string(i));
        }
        s.symbols[i] = static_cast<std::uint8_t>(c - '0');
    }
    return s;
}

} // namespace lrc::io
