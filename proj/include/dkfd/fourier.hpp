#pragma once

// Discrete Fourier transform on the periodic grid.
//
// Convention: for nodes x in [-pi, pi)^d and frequencies xi in {-L/2, ..., L/2-1}^d,
//   forward:  v^(xi) = h^d * sum_x v(x) exp(-i x.xi)
//   inverse:  v(x)   = (2 pi)^-d * sum_xi v^(xi) exp(i x.xi)
// so that sum_xi |v^(xi)|^2 = (2 pi)^d ||v||_h^2.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

#include "dkfd/grid.hpp"

namespace dkfd {

namespace detail {

/// FFTW planning is not thread-safe; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* p) const {
    if (p != nullptr) {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(p);
    }
  }
};
using FftwPlan = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
template <class T>
using FftwBuffer = std::unique_ptr<T[], FftwFree>;

template <class T>
FftwBuffer<T> fftw_alloc(std::size_t n) {
  auto* p = static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer<T>(p);
}

/// Map an FFT bin k in [0, L) to its frequency in [-L/2, L/2).
inline int bin_to_frequency(int k, int L) { return k < L / 2 ? k : k - L; }

inline std::array<int, 3> fftw_dims(const Grid& g) {
  // FFTW is row-major with the last dimension fastest; axis 0 is our fastest axis.
  return {g.nodes_per_axis(), g.nodes_per_axis(), g.nodes_per_axis()};
}

}  // namespace detail

/// Fourier coefficients of a grid function, stored in FFT bin order per axis.
class Spectrum {
public:
  explicit Spectrum(Grid grid) : grid_(grid), coeffs_(grid.size()) {}

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return coeffs_.size(); }

  std::complex<double>& operator[](std::size_t bin) { return coeffs_[bin]; }
  std::complex<double> operator[](std::size_t bin) const { return coeffs_[bin]; }

  /// Frequency vector of a flat bin index.
  std::array<int, 3> frequency(std::size_t bin) const {
    NodeIndex k = grid_.unflat(bin);
    for (int a = 0; a < grid_.dim(); ++a) k[a] = detail::bin_to_frequency(k[a], grid_.nodes_per_axis());
    return k;
  }

  /// Coefficient at frequency xi (components in [-L/2, L/2)).
  std::complex<double> at(const std::array<int, 3>& xi) const { return coeffs_[grid_.flat(xi)]; }
  std::complex<double> at(int xi) const { return at({xi, 0, 0}); }

  const std::vector<std::complex<double>>& coefficients() const { return coeffs_; }
  std::vector<std::complex<double>>& coefficients() { return coeffs_; }

private:
  Grid grid_;
  std::vector<std::complex<double>> coeffs_;
};

namespace detail {

inline void run_complex_dft(const Grid& g, std::vector<std::complex<double>>& data, int sign) {
  const auto n = fftw_dims(g);
  auto buf = fftw_alloc<fftw_complex>(g.size());
  FftwPlan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan.reset(fftw_plan_dft(g.dim(), n.data(), buf.get(), buf.get(), sign, FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    buf[i][0] = data[i].real();
    buf[i][1] = data[i].imag();
  }
  fftw_execute(plan.get());
  for (std::size_t i = 0; i < g.size(); ++i) data[i] = {buf[i][0], buf[i][1]};
}

/// (-1)^(xi_1 + ... + xi_d): the phase from the grid starting at -pi.
inline double origin_phase(const std::array<int, 3>& xi, int dim) {
  int s = 0;
  for (int a = 0; a < dim; ++a) s += xi[a];
  return (s % 2 == 0) ? 1.0 : -1.0;
}

}  // namespace detail

inline Spectrum forward_fft(const GridFunction& u) {
  const Grid& g = u.grid();
  Spectrum s(g);
  auto& c = s.coefficients();
  for (std::size_t i = 0; i < g.size(); ++i) c[i] = u[i];
  detail::run_complex_dft(g, c, FFTW_FORWARD);
  const double w = g.cell_volume();
  for (std::size_t b = 0; b < g.size(); ++b) c[b] *= w * detail::origin_phase(s.frequency(b), g.dim());
  return s;
}

/// Inverse transform; the imaginary residue of a Hermitian spectrum is discarded.
inline GridFunction inverse_fft(const Spectrum& s) {
  const Grid& g = s.grid();
  std::vector<std::complex<double>> c = s.coefficients();
  for (std::size_t b = 0; b < g.size(); ++b) c[b] *= detail::origin_phase(s.frequency(b), g.dim());
  detail::run_complex_dft(g, c, FFTW_BACKWARD);
  const double w = std::pow(kTwoPi, -g.dim());
  GridFunction out(g);
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = c[i].real() * w;
  return out;
}

/// Reusable real-to-complex transform pair for applying Fourier multipliers that are
/// even in every frequency component (functions of cos(h xi_l)). One instance per thread.
class FourierMultiplier {
public:
  explicit FourierMultiplier(Grid grid)
      : grid_(grid),
        half_size_(half_size(grid)),
        real_(detail::fftw_alloc<double>(grid.size())),
        spec_(detail::fftw_alloc<fftw_complex>(half_size_)) {
    const auto n = detail::fftw_dims(grid);
    std::lock_guard lock(detail::fftw_planner_mutex());
    forward_.reset(fftw_plan_dft_r2c(grid.dim(), n.data(), real_.get(), spec_.get(), FFTW_ESTIMATE));
    backward_.reset(fftw_plan_dft_c2r(grid.dim(), n.data(), spec_.get(), real_.get(), FFTW_ESTIMATE));
  }

  const Grid& grid() const { return grid_; }
  std::size_t half_size() const { return half_size_; }

  /// Tabulates `symbol(xi)` over the half-spectrum layout used by `apply`.
  std::vector<double> tabulate(const std::function<double(const std::array<int, 3>&)>& symbol) const {
    std::vector<double> out(half_size_);
    const int L = grid_.nodes_per_axis();
    const int half = L / 2 + 1;
    for (std::size_t j = 0; j < half_size_; ++j) {
      std::array<int, 3> xi{0, 0, 0};
      std::size_t rest = j;
      xi[0] = static_cast<int>(rest % half);  // axis 0 is the halved (fastest) FFTW dimension
      rest /= half;
      for (int a = 1; a < grid_.dim(); ++a) {
        xi[a] = detail::bin_to_frequency(static_cast<int>(rest % L), L);
        rest /= L;
      }
      out[j] = symbol(xi);
    }
    return out;
  }

  /// u <- F^-1 [ multiplier * F u ], in place.
  void apply(std::span<double> u, std::span<const double> multiplier) {
    if (u.size() != grid_.size() || multiplier.size() != half_size_) {
      throw std::invalid_argument("FourierMultiplier::apply: size mismatch");
    }
    std::copy(u.begin(), u.end(), real_.get());
    fftw_execute(forward_.get());
    const double inv_n = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t j = 0; j < half_size_; ++j) {
      const double m = multiplier[j] * inv_n;
      spec_[j][0] *= m;
      spec_[j][1] *= m;
    }
    fftw_execute(backward_.get());
    std::copy(real_.get(), real_.get() + grid_.size(), u.begin());
  }

  void apply(GridFunction& u, std::span<const double> multiplier) {
    if (u.grid() != grid_) throw std::invalid_argument("FourierMultiplier::apply: grid mismatch");
    apply(std::span<double>(u.values()), multiplier);
  }

private:
  static std::size_t half_size(const Grid& g) {
    std::size_t n = static_cast<std::size_t>(g.nodes_per_axis() / 2 + 1);
    for (int a = 1; a < g.dim(); ++a) n *= static_cast<std::size_t>(g.nodes_per_axis());
    return n;
  }

  Grid grid_;
  std::size_t half_size_;
  detail::FftwBuffer<double> real_;
  detail::FftwBuffer<fftw_complex> spec_;
  detail::FftwPlan forward_;
  detail::FftwPlan backward_;
};

}  // namespace dkfd
