#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library's stencils or solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mobi/scalar_field.hpp"

namespace oracle {

using mobi::ScalarField;

inline ScalarField random_field(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ScalarField f(rows, cols);
  for (double& v : f.values()) v = u(rng);
  return f;
}

// Smooth strictly positive texture: a few random plane waves on a pedestal.
inline ScalarField smooth_texture(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                  double pedestal = 100.0, double amplitude = 30.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> freq(0.15, 0.6), phase(0.0, 6.283185307179586),
      dir(0.0, 3.141592653589793);
  struct Wave { double kx, ky, ph; };
  std::vector<Wave> waves;
  for (int i = 0; i < 6; ++i) {
    const double k = freq(rng), t = dir(rng);
    waves.push_back({k * std::cos(t), k * std::sin(t), phase(rng)});
  }
  return ScalarField::from_function(rows, cols, [&](std::size_t r, std::size_t c) {
    double v = pedestal;
    for (const auto& w : waves)
      v += amplitude / 6.0 * std::sin(w.kx * static_cast<double>(c) + w.ky * static_cast<double>(r) + w.ph);
    return v;
  });
}

// Element access with the boundary conventions written out longhand.
inline double at_clamped(const ScalarField& f, long r, long c) {
  r = std::clamp(r, 0L, static_cast<long>(f.rows()) - 1);
  c = std::clamp(c, 0L, static_cast<long>(f.cols()) - 1);
  return f(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
}

inline ScalarField dx(const ScalarField& f) {
  const long R = static_cast<long>(f.rows()), C = static_cast<long>(f.cols());
  ScalarField out(f.rows(), f.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double v;
      if (c == 0) v = f(r, 1) - f(r, 0);
      else if (c == C - 1) v = f(r, C - 1) - f(r, C - 2);
      else v = (f(r, c + 1) - f(r, c - 1)) / 2.0;
      out(r, c) = v;
    }
  return out;
}

inline ScalarField dy(const ScalarField& f) {
  const long R = static_cast<long>(f.rows()), C = static_cast<long>(f.cols());
  ScalarField out(f.rows(), f.cols());
  for (long r = 0; r < R; ++r)
    for (long c = 0; c < C; ++c) {
      double v;
      if (r == 0) v = f(1, c) - f(0, c);
      else if (r == R - 1) v = f(R - 1, c) - f(R - 2, c);
      else v = (f(r + 1, c) - f(r - 1, c)) / 2.0;
      out(r, c) = v;
    }
  return out;
}

inline ScalarField dxx(const ScalarField& f) {
  ScalarField out(f.rows(), f.cols());
  for (long r = 0; r < static_cast<long>(f.rows()); ++r)
    for (long c = 0; c < static_cast<long>(f.cols()); ++c)
      out(r, c) = at_clamped(f, r, c - 1) - 2.0 * at_clamped(f, r, c) + at_clamped(f, r, c + 1);
  return out;
}

inline ScalarField dyy(const ScalarField& f) {
  ScalarField out(f.rows(), f.cols());
  for (long r = 0; r < static_cast<long>(f.rows()); ++r)
    for (long c = 0; c < static_cast<long>(f.cols()); ++c)
      out(r, c) = at_clamped(f, r - 1, c) - 2.0 * at_clamped(f, r, c) + at_clamped(f, r + 1, c);
  return out;
}

inline ScalarField lap(const ScalarField& f) {
  ScalarField out(f.rows(), f.cols());
  for (long r = 0; r < static_cast<long>(f.rows()); ++r)
    for (long c = 0; c < static_cast<long>(f.cols()); ++c)
      out(r, c) = at_clamped(f, r, c + 1) + at_clamped(f, r, c - 1) + at_clamped(f, r + 1, c) +
                  at_clamped(f, r - 1, c) - 4.0 * at_clamped(f, r, c);
  return out;
}

inline ScalarField dxy(const ScalarField& f) { return dx(dy(f)); }

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

inline double rms_diff(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

// Maximum difference over pixels at least `margin` from every edge.
inline double max_abs_diff_interior(const ScalarField& a, const ScalarField& b, std::size_t margin) {
  double m = 0.0;
  for (std::size_t r = margin; r + margin < a.rows(); ++r)
    for (std::size_t c = margin; c + margin < a.cols(); ++c)
      m = std::max(m, std::fabs(a(r, c) - b(r, c)));
  return m;
}

// Per-pixel unknowns of the scalar linear model.
struct ScalarTruth {
  ScalarField a, disp_x, disp_y, diffusion;
};

// Sample image that satisfies I_r = a I_s + Dx dI_r/dx + Dy dI_r/dy - D lap(I_r) exactly.
inline ScalarField linear_model_sample(const ScalarField& ref, const ScalarTruth& t) {
  const ScalarField gx = dx(ref), gy = dy(ref), l = lap(ref);
  ScalarField s(ref.rows(), ref.cols());
  for (std::size_t i = 0; i < ref.size(); ++i)
    s[i] = (ref[i] - t.disp_x[i] * gx[i] - t.disp_y[i] * gy[i] + t.diffusion[i] * l[i]) / t.a[i];
  return s;
}

struct TensorTruth {
  ScalarField a, disp_x, disp_y, txx, tyy, txy;
};

inline ScalarField linear_tensor_sample(const ScalarField& ref, const TensorTruth& t) {
  const ScalarField gx = dx(ref), gy = dy(ref), xx = dxx(ref), yy = dyy(ref), xy = dxy(ref);
  ScalarField s(ref.rows(), ref.cols());
  for (std::size_t i = 0; i < ref.size(); ++i)
    s[i] = (ref[i] - t.disp_x[i] * gx[i] - t.disp_y[i] * gy[i] + t.txx[i] * xx[i] + t.tyy[i] * yy[i] +
            t.txy[i] * xy[i]) / t.a[i];
  return s;
}

// Exact 90-degree counter-clockwise grid rotation in (x = col, y = row):
// out(r, c) = in(c, cols - 1 - r) for a square field.
inline ScalarField rotate90(const ScalarField& f) {
  const std::size_t n = f.rows();
  ScalarField out(f.cols(), f.rows());
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = f(c, n - 1 - r);
  return out;
}

// Composite Simpson rule on [lo, hi] with n (even) panels.
template <typename F>
double simpson(F&& f, double lo, double hi, int n = 2000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace oracle
