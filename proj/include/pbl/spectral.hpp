#pragma once

// Periodic spectral kernels in the boundary coordinate: DFT (FFTW-backed),
// trigonometric interpolation at arbitrary points, and spectral
// differentiation/antidifferentiation of uniformly sampled periodic data.
//
// Normalization: coefficient c_k multiplies exp(2*pi*i*k*x/P) where P is the
// period, so a constant profile has c_0 equal to the constant. For even N the
// Nyquist coefficient is interpreted as a cosine (real part only), which keeps
// the interpolant real on and off the grid.

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "pbl/error.hpp"

namespace pbl {

using cplx = std::complex<double>;

namespace detail {

struct FftwPlanPair {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

class FftwPlanCache {
 public:
  static FftwPlanCache& instance() {
    static FftwPlanCache cache;
    return cache;
  }

  // Plans are created with FFTW_UNALIGNED so they can be executed on any
  // buffer through the new-array interface; execution is thread safe, planning
  // is not, hence the lock.
  FftwPlanPair get(int n) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(static_cast<std::size_t>(n));
    auto* spec = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    FftwPlanPair pair;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    pair.r2c = fftw_plan_dft_r2c_1d(n, real.data(), spec, flags);
    pair.c2r = fftw_plan_dft_c2r_1d(n, spec, real.data(), flags);
    fftw_free(spec);
    plans_.emplace(n, pair);
    return pair;
  }

  ~FftwPlanCache() {
    for (auto& [n, pair] : plans_) {
      fftw_destroy_plan(pair.r2c);
      fftw_destroy_plan(pair.c2r);
    }
  }

 private:
  FftwPlanCache() = default;
  std::mutex mutex_;
  std::map<int, FftwPlanPair> plans_;
};

inline double wavenumber(std::size_t k, double period) {
  return 2.0 * std::numbers::pi * static_cast<double>(k) / period;
}

}  // namespace detail

/// Half spectrum c_0 .. c_{N/2} of real samples, normalized by 1/N.
inline std::vector<cplx> rfft(std::span<const double> samples) {
  const std::size_t n = samples.size();
  detail::require(n >= 2, "rfft: need at least two samples");
  auto plans = detail::FftwPlanCache::instance().get(static_cast<int>(n));
  std::vector<double> in(samples.begin(), samples.end());
  std::vector<cplx> out(n / 2 + 1);
  fftw_execute_dft_r2c(plans.r2c, in.data(),
                       reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& c : out) c *= scale;
  return out;
}

/// Inverse of rfft: N real samples from the half spectrum.
inline std::vector<double> irfft(std::span<const cplx> half, std::size_t n) {
  detail::require(n >= 2 && half.size() == n / 2 + 1,
                  "irfft: half spectrum length does not match sample count");
  auto plans = detail::FftwPlanCache::instance().get(static_cast<int>(n));
  std::vector<cplx> in(half.begin(), half.end());
  // c2r ignores the imaginary parts of c_0 and (even n) c_{N/2}, consistent
  // with the real-cosine reading of the Nyquist term.
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plans.c2r, reinterpret_cast<fftw_complex*>(in.data()),
                       out.data());
  return out;
}

/// Full-length DFT: N coefficients in standard order (negative k stored at N-|k|).
inline std::vector<cplx> dft_s(std::span<const double> samples) {
  const std::size_t n = samples.size();
  auto half = rfft(samples);
  std::vector<cplx> full(n);
  for (std::size_t k = 0; k <= n / 2; ++k) full[k] = half[k];
  for (std::size_t k = n / 2 + 1; k < n; ++k) full[k] = std::conj(half[n - k]);
  return full;
}

/// Real part of sum_k c_k exp(2 pi i j k / N), j = 0..N-1.
inline std::vector<double> idft_s(std::span<const cplx> coeffs) {
  const std::size_t n = coeffs.size();
  detail::require(n >= 2, "idft_s: need at least two coefficients");
  std::vector<cplx> half(n / 2 + 1);
  // The real part only sees the Hermitian projection of the coefficients.
  for (std::size_t k = 0; k <= n / 2; ++k) {
    const cplx mirror = std::conj(coeffs[(n - k) % n]);
    half[k] = 0.5 * (coeffs[k] + mirror);
  }
  if (n % 2 == 0) half[n / 2] = cplx(half[n / 2].real(), 0.0);
  half[0] = cplx(half[0].real(), 0.0);
  return irfft(half, n);
}

inline std::vector<double> idft_s(std::span<const cplx> coeffs, std::size_t n) {
  detail::require(coeffs.size() == n, "idft_s: coefficient count does not match length");
  return idft_s(coeffs);
}

/// d^order/dx^order of uniformly sampled periodic data. The Nyquist mode is
/// dropped for odd orders (its derivative is not representable on the grid).
inline std::vector<double> periodic_derivative(std::span<const double> samples,
                                               double period, int order = 1) {
  const std::size_t n = samples.size();
  if (order == 0) return {samples.begin(), samples.end()};
  auto half = rfft(samples);
  for (std::size_t k = 0; k < half.size(); ++k) {
    const cplx factor = std::pow(cplx(0.0, detail::wavenumber(k, period)), order);
    half[k] *= factor;
  }
  if (n % 2 == 0 && order % 2 == 1) half[n / 2] = 0.0;
  return irfft(half, n);
}

/// Trigonometric interpolant of uniformly sampled periodic data, evaluable at
/// arbitrary points together with its derivative and running integral.
class TrigInterpolant {
 public:
  TrigInterpolant() = default;
  TrigInterpolant(std::span<const double> samples, double period)
      : n_(samples.size()), period_(period), half_(rfft(samples)) {
    detail::require(period > 0.0, "TrigInterpolant: period must be positive");
  }

  std::size_t size() const { return n_; }
  double period() const { return period_; }
  double mean() const { return half_[0].real(); }
  std::span<const cplx> coefficients() const { return half_; }

  double operator()(double x) const { return evaluate(x, Kind::value); }
  double derivative(double x) const { return evaluate(x, Kind::derivative); }
  /// Integral of the oscillatory part from 0 to x (the mean is excluded).
  double oscillatory_integral(double x) const { return evaluate(x, Kind::integral); }
  /// Integral from 0 to x of the full interpolant.
  double integral(double x) const { return mean() * x + oscillatory_integral(x); }

 private:
  enum class Kind { value, derivative, integral };

  double evaluate(double x, Kind kind) const {
    const double k1 = detail::wavenumber(1, period_);
    const std::size_t top = (n_ % 2 == 0) ? n_ / 2 : (n_ - 1) / 2 + 1;
    const cplx step = std::polar(1.0, k1 * x);
    cplx phase = step;
    double acc = (kind == Kind::value) ? half_[0].real() : 0.0;
    for (std::size_t k = 1; k < top; ++k) {
      const double kk = k1 * static_cast<double>(k);
      switch (kind) {
        case Kind::value: acc += 2.0 * (half_[k] * phase).real(); break;
        case Kind::derivative: acc += 2.0 * (half_[k] * cplx(0.0, kk) * phase).real(); break;
        case Kind::integral:
          acc += 2.0 * (half_[k] * (phase - 1.0) / cplx(0.0, kk)).real();
          break;
      }
      phase *= step;
    }
    if (n_ % 2 == 0) {
      const double kn = k1 * static_cast<double>(n_ / 2);
      const double a = half_[n_ / 2].real();
      switch (kind) {
        case Kind::value: acc += a * std::cos(kn * x); break;
        case Kind::derivative: acc -= a * kn * std::sin(kn * x); break;
        case Kind::integral: acc += a * std::sin(kn * x) / kn; break;
      }
    }
    return acc;
  }

  std::size_t n_ = 0;
  double period_ = 1.0;
  std::vector<cplx> half_;
};

/// Weights w_j such that sum_j w_j x_j is the trigonometric interpolant of
/// samples x_j (at j*period/n) evaluated at `point`.
inline std::vector<double> trig_interp_weights(std::size_t n, double period, double point) {
  std::vector<double> w(n);
  const double nn = static_cast<double>(n);
  const double h = period / nn;
  for (std::size_t j = 0; j < n; ++j) {
    double d = 2.0 * std::numbers::pi * (point - h * static_cast<double>(j)) / period;
    d = std::remainder(d, 2.0 * std::numbers::pi);
    const double half_angle = 0.5 * d;
    if (std::abs(std::sin(half_angle)) < 1e-15) {
      w[j] = 1.0;
      continue;
    }
    if (n % 2 == 0) {
      w[j] = std::sin(nn * half_angle) / std::tan(half_angle) / nn;
    } else {
      w[j] = std::sin(nn * half_angle) / std::sin(half_angle) / nn;
    }
  }
  return w;
}

/// Dense evaluation matrix mapping n periodic samples to values at `points`.
class TrigResampler {
 public:
  TrigResampler(std::size_t n, double period, std::span<const double> points)
      : n_(n), m_(points.size()), weights_(n * points.size()) {
    for (std::size_t i = 0; i < m_; ++i) {
      auto w = trig_interp_weights(n, period, points[i]);
      std::copy(w.begin(), w.end(), weights_.begin() + static_cast<std::ptrdiff_t>(i * n));
    }
  }

  std::size_t source_size() const { return n_; }
  std::size_t target_size() const { return m_; }

  std::vector<double> apply(std::span<const double> samples) const {
    detail::require(samples.size() == n_, "TrigResampler: sample count mismatch");
    std::vector<double> out(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      const double* w = weights_.data() + i * n_;
      double acc = 0.0;
      for (std::size_t j = 0; j < n_; ++j) acc += w[j] * samples[j];
      out[i] = acc;
    }
    return out;
  }

 private:
  std::size_t n_;
  std::size_t m_;
  std::vector<double> weights_;
};

}  // namespace pbl
