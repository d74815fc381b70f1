#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>

namespace lrc {

/// In-place complex DFT of a fixed length, backed by FFTW.
///
/// Plans are created with FFTW_ESTIMATE so that the chosen algorithm, and
/// therefore every output bit, does not depend on run-time measurements.
/// Forward: X[m] = sum x[n] e^{-2 pi i m n / N}. Inverse is unnormalized.
class Fft {
public:
    explicit Fft(std::size_t n);
    ~Fft();
    Fft(Fft&&) noexcept;
    Fft& operator=(Fft&&) noexcept;
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    std::size_t size() const { return n_; }

    void forward(std::span<std::complex<double>> data) const;
    void inverse(std::span<std::complex<double>> data) const;

private:
    struct Plans;
    std::size_t n_;
    std::unique_ptr<Plans> plans_;
};

/// Angular frequency (rad/s) of DFT bin m for length n and sample interval dt.
double bin_omega(std::size_t m, std::size_t n, double dt);

std::size_t next_pow2(std::size_t n);

} // namespace lrc
