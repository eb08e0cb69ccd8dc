#pragma once

// FFTW-backed transforms on TorusGrid data. Plans are cached per grid shape
// and executed with the new-array interface, which is thread-safe.

#include <span>

#include "fracvisc/torus.hpp"

namespace fracvisc::detail {

/// out = (1/N) sum_j in_j exp(-i k.x_j); in and out must not alias.
void fft_forward(const TorusGrid& grid, std::span<const Complex> in,
                 std::span<Complex> out);
/// out_j = sum_k in_k exp(i k.x_j); in and out must not alias.
void fft_inverse(const TorusGrid& grid, std::span<const Complex> in,
                 std::span<Complex> out);

/// Real nodal data to normalized coefficients.
void fft_forward_real(const TorusGrid& grid, std::span<const double> in,
                      std::span<Complex> scratch, std::span<Complex> out);
/// Coefficients to the real part of the nodal values.
void fft_inverse_real(const TorusGrid& grid, std::span<const Complex> in,
                      std::span<Complex> scratch, std::span<double> out);

/// Per-node wavevector table with the 2/3-rule mask.
struct WaveTable {
  explicit WaveTable(const TorusGrid& grid);

  TorusGrid grid;
  // k[axis][node]
  std::vector<std::vector<double>> k;
  std::vector<double> k_squared;
  std::vector<unsigned char> retained;
};

}  // namespace fracvisc::detail
