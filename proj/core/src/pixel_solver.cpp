#include "pixel_solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace mobi::detail {

namespace {
constexpr double kRankDeficient = 1e12;
}

double transmission_from_a(double a, double min_transmission) noexcept {
  if (!(a > 0.0)) return min_transmission;
  return std::max(1.0 / a, min_transmission);
}

PixelFits solve_pixels(const AcquisitionSet& acq, const ColumnSource& source,
                       const SolverOptions& opts) {
  const std::size_t rows = acq.rows(), cols = acq.cols();
  const auto k_count = static_cast<Eigen::Index>(acq.count());
  const auto n = static_cast<Eigen::Index>(source.unknowns);
  const std::size_t pixels = rows * cols;

  PixelFits fits;
  fits.unknowns.assign(source.unknowns, ScalarField(rows, cols));
  fits.residual_rms = ScalarField(rows, cols);
  fits.condition = ScalarField(rows, cols);
  fits.flat = Mask(rows, cols);
  const double damping = std::sqrt(opts.tikhonov_lambda);

#pragma omp parallel
  {
    Eigen::MatrixXd design(k_count, n);
    Eigen::VectorXd rhs(k_count);
    Eigen::MatrixXd damped = Eigen::MatrixXd::Zero(k_count + n - 1, n);
    Eigen::VectorXd damped_rhs = Eigen::VectorXd::Zero(k_count + n - 1);
    Eigen::VectorXd solution(n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(k_count + n - 1, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(k_count, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> pinv(k_count, n, Eigen::ComputeThinU | Eigen::ComputeThinV);
    pinv.setThreshold(1.0 / kRankDeficient);
    std::vector<double> row(source.unknowns);

#pragma omp for schedule(static)
    for (std::ptrdiff_t p = 0; p < static_cast<std::ptrdiff_t>(pixels); ++p) {
      const auto idx = static_cast<std::size_t>(p);
      for (Eigen::Index k = 0; k < k_count; ++k) {
        source.fill(static_cast<std::size_t>(k), idx, row.data());
        for (Eigen::Index j = 0; j < n; ++j) design(k, j) = row[j];
        rhs(k) = acq.pairs[k].reference[idx];
      }

      svd.compute(design);
      const auto& sv = svd.singularValues();
      const double smax = sv(0), smin = sv(n - 1);
      double condition = smin > 0.0 ? smax / smin : kConditionCap;
      condition = std::clamp(condition, 1.0, kConditionCap);

      const double scale = rhs.cwiseAbs().mean();
      const double derivative_max = design.rightCols(n - 1).cwiseAbs().maxCoeff();
      solution.setZero();
      bool flat = false;
      if (derivative_max < 1e-9 * scale) {
        flat = true;
        const double ss = design.col(0).squaredNorm();
        solution(0) = ss > 0.0 ? design.col(0).dot(rhs) / ss : 0.0;
      } else if (damping > 0.0) {
        damped.topRows(k_count) = design;
        for (Eigen::Index j = 1; j < n; ++j) damped(k_count + j - 1, j) = damping;
        damped_rhs.head(k_count) = rhs;
        qr.compute(damped);
        solution = qr.solve(damped_rhs);
      } else if (condition > kRankDeficient) {
        // QR's own pivot cut is borderline here and flips with the intensity
        // scale; the minimum-norm solution does not
        pinv.compute(design);
        solution = pinv.solve(rhs);
      } else {
        qr.compute(design);
        solution = qr.solve(rhs);
      }

      const double residual = std::sqrt((design * solution - rhs).squaredNorm() /
                                        static_cast<double>(k_count));
      for (Eigen::Index j = 0; j < n; ++j) fits.unknowns[j][idx] = solution(j);
      fits.residual_rms[idx] = residual;
      fits.condition[idx] = condition;
      fits.flat.set(idx, flat);
    }
  }
  return fits;
}

}  // namespace mobi::detail
