#pragma once

#include <complex>
#include <mutex>
#include <span>
#include <vector>

#include "mtd/grid.hpp"

namespace mtd::fft {

using Complex = std::complex<double>;
using ComplexGrid = Grid<Complex>;

/// Unnormalized 2-D DFT, exponent -2*pi*i*(r*k_r/R + c*k_c/C).
ComplexGrid forward(const ComplexGrid& in);
ComplexGrid forward(const RealGrid& in);

/// Inverse 2-D DFT including the 1/(R*C) factor.
ComplexGrid inverse(const ComplexGrid& in);

/// Real part of the inverse transform; the caller asserts the input is Hermitian.
RealGrid inverse_real(const ComplexGrid& in);

/// In-place n-dimensional DFT of a row-major array; the inverse includes
/// the 1/size factor.
void forward_nd(std::vector<Complex>& data, std::span<const int> dims);
void inverse_nd(std::vector<Complex>& data, std::span<const int> dims);

/// FFTW planning is not thread-safe; hold this while creating or destroying plans.
std::mutex& plan_mutex();

/// Smallest size >= n whose only prime factors are 2, 3, 5 and 7.
std::size_t good_size(std::size_t n);

} // namespace mtd::fft
