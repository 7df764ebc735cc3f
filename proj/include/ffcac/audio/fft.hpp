#pragma once

#include <complex>
#include <span>
#include <vector>

namespace ffcac::audio {

// In-place iterative radix-2 DFT, X[k] = sum_n x[n] exp(-2 pi i n k / N).
// N must be a power of two.
void fft_inplace(std::span<std::complex<double>> data);

// |X[k]|^2 for k = 0..n_fft/2 of a real frame zero-padded to n_fft.
std::vector<double> power_spectrum(std::span<const double> frame, std::size_t n_fft);

bool is_power_of_two(std::size_t n);

}  // namespace ffcac::audio
