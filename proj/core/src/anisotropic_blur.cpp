#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "mobi/error.hpp"
#include "mobi/forward_sim.hpp"

namespace mobi {

namespace {

struct LatticeKernel {
  int radius = 0;
  std::vector<double> weights;  // (2r+1)^2, row offset major

  double at(int dy, int dx) const {
    const int side = 2 * radius + 1;
    return weights[(dy + radius) * side + (dx + radius)];
  }
};

// Second moments (xx, yy, xy) of a normalized sampled Gaussian with covariance p.
struct Sampled {
  Eigen::Vector3d moments;
  std::vector<double> weights;
};

Sampled sample_gaussian(const Eigen::Vector3d& p, int radius) {
  const double det = p[0] * p[1] - p[2] * p[2];
  const double ixx = p[1] / det, iyy = p[0] / det, ixy = -p[2] / det;
  const int side = 2 * radius + 1;
  Sampled s;
  s.weights.resize(static_cast<std::size_t>(side * side));
  double total = 0.0;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const double q = ixx * dx * dx + iyy * dy * dy + 2.0 * ixy * dx * dy;
      const double w = std::exp(-0.5 * q);
      s.weights[(dy + radius) * side + (dx + radius)] = w;
      total += w;
    }
  s.moments.setZero();
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      double& w = s.weights[(dy + radius) * side + (dx + radius)];
      w /= total;
      s.moments += w * Eigen::Vector3d(dx * dx, dy * dy, dx * dy);
    }
  return s;
}

bool positive_definite(const Eigen::Vector3d& p) {
  return p[0] > 0.0 && p[1] > 0.0 && p[0] * p[1] - p[2] * p[2] > 0.0;
}

// A Gaussian sampled on the lattice has second moments that differ from its
// continuous covariance when the kernel is narrow. Newton iteration on the
// continuous covariance makes the lattice moments hit `target` exactly.
LatticeKernel build_kernel(const TensorComponents& t) {
  const Eigen::Vector3d target(2.0 * t.dxx, 2.0 * t.dyy, t.dxy);
  const TensorEigen eig = eigen_decompose(t.dxx, t.dyy, t.dxy);
  const double widest = 2.0 * std::max(eig.lambda1, 0.0);
  LatticeKernel kernel;
  kernel.radius = std::max(2, static_cast<int>(std::ceil(4.0 * std::sqrt(widest))));

  Eigen::Vector3d p = target;
  // narrow or degenerate targets start from a safely positive-definite guess
  p[0] = std::max(p[0], 0.05);
  p[1] = std::max(p[1], 0.05);
  if (!positive_definite(p)) p[2] = std::copysign(0.9 * std::sqrt(p[0] * p[1]), p[2]);

  Sampled current = sample_gaussian(p, kernel.radius);
  const double tol = 1e-13 * std::max(1.0, target.cwiseAbs().maxCoeff());
  for (int iter = 0; iter < 60; ++iter) {
    const Eigen::Vector3d err = target - current.moments;
    if (err.cwiseAbs().maxCoeff() <= tol) break;
    Eigen::Matrix3d jac;
    for (int j = 0; j < 3; ++j) {
      Eigen::Vector3d probe = p;
      const double h = 1e-7 * std::max(1.0, std::abs(p[j]));
      probe[j] += h;
      if (!positive_definite(probe)) probe[j] -= 2.0 * h;
      jac.col(j) = (sample_gaussian(probe, kernel.radius).moments - current.moments) / (probe[j] - p[j]);
    }
    Eigen::Vector3d step = jac.fullPivLu().solve(err);
    if (!step.allFinite()) break;
    bool improved = false;
    for (int halving = 0; halving < 30; ++halving) {
      const Eigen::Vector3d candidate = p + step;
      if (positive_definite(candidate)) {
        Sampled trial = sample_gaussian(candidate, kernel.radius);
        if ((target - trial.moments).cwiseAbs().maxCoeff() < err.cwiseAbs().maxCoeff()) {
          p = candidate;
          current = std::move(trial);
          improved = true;
          break;
        }
      }
      step *= 0.5;
    }
    // unreachable targets (e.g. rank-deficient at an off-lattice angle) stop at the closest fit
    if (!improved) break;
  }
  kernel.weights = std::move(current.weights);
  return kernel;
}

}  // namespace

ScalarField anisotropic_blur(const ScalarField& in, const DiffusionTensorField& tensor) {
  require_same_shape(in, tensor.dxx, "blur tensor dxx");
  require_same_shape(in, tensor.dyy, "blur tensor dyy");
  require_same_shape(in, tensor.dxy, "blur tensor dxy");
  const std::size_t rows = in.rows(), cols = in.cols();

  // one kernel per distinct tensor; built in raster order so ids are deterministic
  std::map<std::array<double, 3>, int> lookup;
  std::vector<LatticeKernel> kernels;
  std::vector<int> kernel_id(in.size(), -1);
  int max_radius = 0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    TensorComponents t{tensor.dxx[i], tensor.dyy[i], tensor.dxy[i]};
    if (!std::isfinite(t.dxx) || !std::isfinite(t.dyy) || !std::isfinite(t.dxy)) {
      fail(ErrorCode::kData, "blur tensor contains non-finite values");
    }
    clamp_to_psd(t);
    if (t.dxx + t.dyy <= 1e-12) continue;
    const std::array<double, 3> key{t.dxx, t.dyy, t.dxy};
    auto [it, inserted] = lookup.emplace(key, static_cast<int>(kernels.size()));
    if (inserted) {
      kernels.push_back(build_kernel(t));
      max_radius = std::max(max_radius, kernels.back().radius);
    }
    kernel_id[i] = it->second;
  }
  if (kernels.empty()) return in;

  // summed-area table of spreading pixels: untouched outputs are copied through
  std::vector<int> sat((rows + 1) * (cols + 1), 0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      sat[(r + 1) * (cols + 1) + c + 1] = (kernel_id[r * cols + c] >= 0 ? 1 : 0) +
                                          sat[r * (cols + 1) + c + 1] +
                                          sat[(r + 1) * (cols + 1) + c] - sat[r * (cols + 1) + c];
  auto spreading_near = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    const auto r0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, r - max_radius));
    const auto c0 = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, c - max_radius));
    const auto r1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(rows, r + max_radius + 1));
    const auto c1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(cols, c + max_radius + 1));
    return sat[r1 * (cols + 1) + c1] - sat[r0 * (cols + 1) + c1] - sat[r1 * (cols + 1) + c0] +
               sat[r0 * (cols + 1) + c0] > 0;
  };

  // Gather form of the scatter sum: out(y) = sum_x in(x) K_x(y - x). Each output
  // accumulates its sources in a fixed order, independent of threading.
  ScalarField out(rows, cols);
  const auto srows = static_cast<std::ptrdiff_t>(rows);
  const auto scols = static_cast<std::ptrdiff_t>(cols);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < srows; ++r) {
    for (std::ptrdiff_t c = 0; c < scols; ++c) {
      if (!spreading_near(r, c)) {
        out(r, c) = in(r, c);
        continue;
      }
      double acc = 0.0;
      for (int dy = -max_radius; dy <= max_radius; ++dy) {
        const std::ptrdiff_t sr = r - dy;
        if (sr < 0 || sr >= srows) continue;
        for (int dx = -max_radius; dx <= max_radius; ++dx) {
          const std::ptrdiff_t sc = c - dx;
          if (sc < 0 || sc >= scols) continue;
          const int id = kernel_id[sr * scols + sc];
          if (id < 0) {
            if (dy == 0 && dx == 0) acc += in(sr, sc);
            continue;
          }
          const LatticeKernel& k = kernels[id];
          if (std::abs(dy) > k.radius || std::abs(dx) > k.radius) continue;
          acc += in(sr, sc) * k.at(dy, dx);
        }
      }
      out(r, c) = acc;
    }
  }
  return out;
}

}  // namespace mobi
