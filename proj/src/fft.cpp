#include "fft.hpp"

#include <fftw3.h>

#include <cstring>
#include <map>
#include <mutex>
#include <utility>

namespace fracvisc::detail {
namespace {

struct PlanPair {
  fftw_plan forward;
  fftw_plan backward;
};

// Plans live for the whole process; creation is serialized because the
// FFTW planner is not reentrant.
const PlanPair& plans_for(const TorusGrid& grid) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, PlanPair> cache;
  std::lock_guard lock(mutex);
  auto key = std::make_pair(grid.dim(), grid.n_points());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<Complex> a(grid.size()), b(grid.size());
  auto* in = reinterpret_cast<fftw_complex*>(a.data());
  auto* out = reinterpret_cast<fftw_complex*>(b.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  int dims[2] = {grid.n_points(), grid.n_points()};
  PlanPair p{
      fftw_plan_dft(grid.dim(), dims, in, out, FFTW_FORWARD, flags),
      fftw_plan_dft(grid.dim(), dims, in, out, FFTW_BACKWARD, flags),
  };
  return cache.emplace(key, p).first->second;
}

fftw_complex* as_fftw(std::span<Complex> s) {
  return reinterpret_cast<fftw_complex*>(s.data());
}

fftw_complex* as_fftw(std::span<const Complex> s) {
  return reinterpret_cast<fftw_complex*>(const_cast<Complex*>(s.data()));
}

}  // namespace

void fft_forward(const TorusGrid& grid, std::span<const Complex> in,
                 std::span<Complex> out) {
  fftw_execute_dft(plans_for(grid).forward, as_fftw(in), as_fftw(out));
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (auto& c : out) c *= scale;
}

void fft_inverse(const TorusGrid& grid, std::span<const Complex> in,
                 std::span<Complex> out) {
  fftw_execute_dft(plans_for(grid).backward, as_fftw(in), as_fftw(out));
}

void fft_forward_real(const TorusGrid& grid, std::span<const double> in,
                      std::span<Complex> scratch, std::span<Complex> out) {
  for (std::size_t i = 0; i < in.size(); ++i) scratch[i] = in[i];
  fft_forward(grid, scratch, out);
}

void fft_inverse_real(const TorusGrid& grid, std::span<const Complex> in,
                      std::span<Complex> scratch, std::span<double> out) {
  fft_inverse(grid, in, scratch);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = scratch[i].real();
}

WaveTable::WaveTable(const TorusGrid& g)
    : grid(g),
      k(g.dim(), std::vector<double>(g.size())),
      k_squared(g.size(), 0.0),
      retained(g.size(), 1) {
  const double cutoff = g.n_points() / 3.0;
  for (std::size_t node = 0; node < g.size(); ++node) {
    for (int axis = 0; axis < g.dim(); ++axis) {
      const int kj = g.wavenumber(g.axis_index(node, axis));
      k[axis][node] = kj;
      k_squared[node] += static_cast<double>(kj) * kj;
      if (std::abs(kj) > cutoff) retained[node] = 0;
    }
  }
}

}  // namespace fracvisc::detail
