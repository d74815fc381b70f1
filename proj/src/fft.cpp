#include "lrc/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace lrc {

namespace {
// Planner calls are not thread-safe in FFTW; execution with new-array is.
std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}
} // namespace

struct Fft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

Fft::Fft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>())
{
    if (n == 0) {
        throw std::invalid_argument("Fft: length must be positive");
    }
    // Plan on a scratch buffer with the default SIMD alignment, execute on
    // caller buffers through the new-array interface.
    std::lock_guard lock(planner_mutex());
    auto* scratch = fftw_alloc_complex(n);
    const int len = static_cast<int>(n);
    plans_->fwd = fftw_plan_dft_1d(len, scratch, scratch, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_->inv = fftw_plan_dft_1d(len, scratch, scratch, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(scratch);
}

Fft::~Fft()
{
    if (plans_) {
        std::lock_guard lock(planner_mutex());
        if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
        if (plans_->inv) fftw_destroy_plan(plans_->inv);
    }
}

Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<std::complex<double>> data) const
{
    if (data.size() != n_) throw std::invalid_argument("Fft::forward: length mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->fwd, p, p);
}

void Fft::inverse(std::span<std::complex<double>> data) const
{
    if (data.size() != n_) throw std::invalid_argument("Fft::inverse: length mismatch");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plans_->inv, p, p);
}

double bin_omega(std::size_t m, std::size_t n, double dt)
{
    const auto k = static_cast<double>(m < (n + 1) / 2 ? static_cast<long long>(m)
                                                       : static_cast<long long>(m) - static_cast<long long>(n));
    return 2.0 * std::numbers::pi * k / (static_cast<double>(n) * dt);
}

std::size_t next_pow2(std::size_t n)
{
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

} // namespace lrc
