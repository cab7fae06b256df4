#include <gtest/gtest.h>

#include <cmath>

#include "mobi/error.hpp"
#include "mobi/forward_sim.hpp"
#include "mobi/lcs_solver.hpp"
#include "mobi/phase_integration.hpp"
#include "oracles.hpp"

namespace {

using mobi::ScalarField;

struct Blob {
  double amp, x0, y0, s;
  double operator()(double x, double y) const {
    return amp * std::exp(-((x - x0) * (x - x0) + (y - y0) * (y - y0)) / (2 * s * s));
  }
};

// Exact blob gradients in rad per unit of `pitch`.
void blob_gradients(const Blob& b, std::size_t rows, std::size_t cols, double pitch, ScalarField& gx,
                    ScalarField& gy) {
  gx = ScalarField::from_function(rows, cols, [&](std::size_t r, std::size_t c) {
    const double x = static_cast<double>(c), y = static_cast<double>(r);
    return -(x - b.x0) / (b.s * b.s) * b(x, y) / pitch;
  });
  gy = ScalarField::from_function(rows, cols, [&](std::size_t r, std::size_t c) {
    const double x = static_cast<double>(c), y = static_cast<double>(r);
    return -(y - b.y0) / (b.s * b.s) * b(x, y) / pitch;
  });
}

ScalarField demean(const ScalarField& f) {
  ScalarField out = f;
  const double m = f.mean();
  for (double& v : out.values()) v -= m;
  return out;
}

double residual(const ScalarField& phi, const ScalarField& gx, const ScalarField& gy, double pitch) {
  const ScalarField px = oracle::dx(phi), py = oracle::dy(phi);
  double s = 0.0;
  for (std::size_t r = 1; r + 1 < phi.rows(); ++r)
    for (std::size_t c = 1; c + 1 < phi.cols(); ++c) {
      const double ex = px(r, c) / pitch - gx(r, c), ey = py(r, c) / pitch - gy(r, c);
      s += ex * ex + ey * ey;
    }
  return std::sqrt(s);
}

TEST(IntegrateGradient, ZeroGradientGivesZeroPhase) {
  const auto p = mobi::integrate_gradient(ScalarField(20, 30), ScalarField(20, 30), 1.0);
  EXPECT_EQ(oracle::max_abs_diff(p.phi, ScalarField(20, 30)), 0.0);
  EXPECT_TRUE(p.mean_zero_gauge);
}

TEST(IntegrateGradient, RecoversGaussianBlob) {
  for (double pitch : {1.0, 75.0}) {
    const Blob b{3.0, 40.0, 27.0, 7.0};
    ScalarField gx, gy;
    blob_gradients(b, 64, 90, pitch, gx, gy);
    const auto p = mobi::integrate_gradient(gx, gy, pitch);
    const ScalarField truth = ScalarField::from_function(
        64, 90, [&](std::size_t r, std::size_t c) { return b(static_cast<double>(c), static_cast<double>(r)); });
    EXPECT_LT(oracle::rms_diff(p.phi, demean(truth)), 1e-3 * 3.0);
    EXPECT_NEAR(p.phi.mean(), 0.0, 1e-9);
  }
}

TEST(IntegrateGradient, CurlComponentRaisesResidual) {
  const Blob b{2.0, 30.0, 30.0, 6.0};
  ScalarField gx, gy;
  blob_gradients(b, 60, 60, 1.0, gx, gy);
  const double clean = residual(mobi::integrate_gradient(gx, gy, 1.0).phi, gx, gy, 1.0);
  ScalarField cx = gx, cy = gy;
  const double c = 0.002;
  for (std::size_t r = 0; r < 60; ++r)
    for (std::size_t col = 0; col < 60; ++col) {
      cx(r, col) += -c * (static_cast<double>(r) - 29.5);
      cy(r, col) += c * (static_cast<double>(col) - 29.5);
    }
  const auto curl_phi = mobi::integrate_gradient(cx, cy, 1.0).phi;
  EXPECT_GT(residual(curl_phi, cx, cy, 1.0), clean);
}

TEST(IntegrateGradient, GradientRoundTrip) {
  // same stencil on both sides, so only the integration error remains
  const Blob b{1.5, 33.0, 21.0, 5.0};
  ScalarField gx, gy;
  blob_gradients(b, 48, 70, 1.0, gx, gy);
  const auto phi = mobi::integrate_gradient(gx, gy, 1.0).phi;
  const ScalarField truth = ScalarField::from_function(
      48, 70, [&](std::size_t r, std::size_t c) { return b(static_cast<double>(c), static_cast<double>(r)); });
  const ScalarField tx = oracle::dx(truth), ty = oracle::dy(truth);
  const double res = residual(phi, tx, ty, 1.0);
  double norm = 0.0;
  for (std::size_t r = 1; r + 1 < 48; ++r)
    for (std::size_t c = 1; c + 1 < 70; ++c) norm += tx(r, c) * tx(r, c) + ty(r, c) * ty(r, c);
  EXPECT_LT(res / std::sqrt(norm), 1e-2);
}

TEST(IntegrateGradient, Linearity) {
  const ScalarField g1x = oracle::random_field(24, 36, 1), g1y = oracle::random_field(24, 36, 2);
  const ScalarField g2x = oracle::random_field(24, 36, 3), g2y = oracle::random_field(24, 36, 4);
  const double a = 1.7, b = -0.4;
  const auto lhs = mobi::integrate_gradient(a * g1x + b * g2x, a * g1y + b * g2y, 2.0).phi;
  const auto rhs = a * mobi::integrate_gradient(g1x, g1y, 2.0).phi + b * mobi::integrate_gradient(g2x, g2y, 2.0).phi;
  EXPECT_LT(oracle::max_abs_diff(lhs, rhs), 1e-10);
}

TEST(IntegrateGradient, GaugeIsFixed) {
  // gradients are unchanged by an additive constant, so is the output
  const Blob b{1.0, 10.0, 10.0, 4.0};
  ScalarField gx, gy;
  blob_gradients(b, 24, 24, 1.0, gx, gy);
  const auto p = mobi::integrate_gradient(gx, gy, 1.0);
  EXPECT_NEAR(p.phi.mean(), 0.0, 1e-12);
}

TEST(IntegrateGradient, RejectsMismatchedShapes) {
  EXPECT_THROW(mobi::integrate_gradient(ScalarField(4, 4), ScalarField(4, 5), 1.0), mobi::Error);
  EXPECT_THROW(mobi::integrate_gradient(ScalarField(4, 4), ScalarField(4, 4), 0.0), mobi::Error);
}

TEST(PhaseFromDisplacement, ZeroDisplacementGivesZeroPhase) {
  const auto p = mobi::phase_from_displacement(ScalarField(16, 16), ScalarField(16, 16), mobi::Geometry{});
  EXPECT_EQ(oracle::max_abs_diff(p.phi, ScalarField(16, 16)), 0.0);
}

// Closed form for a vertical wire: phi = -k delta t(x) with t in micrometres.
ScalarField cylinder_phase(std::size_t rows, std::size_t cols, double center, double r, double delta,
                           const mobi::Geometry& g) {
  return ScalarField::from_function(rows, cols, [&](std::size_t, std::size_t c) {
    const double x = static_cast<double>(c) - center;
    const double t = x * x < r * r ? 2.0 * std::sqrt(r * r - x * x) : 0.0;
    return -g.wavenumber_per_um() * delta * t * g.pixel_pitch_um;
  });
}

TEST(PhaseFromDisplacement, CylinderMatchesProjectedThickness) {
  const mobi::Geometry g{3200.0, 75.0, 8.0};
  const double r = 20.0, delta = 1.5e-6;
  mobi::PhantomSpec spec;
  spec.elements.push_back(mobi::Cylinder{{64.0, 64.0}, r, 90.0, delta, 0.0});
  const auto truth = mobi::render_phantom(spec, 128, 128, g);
  const auto phi = demean(mobi::phase_from_displacement(truth.disp_x, truth.disp_y, g).phi);
  const auto expected = demean(cylinder_phase(128, 128, 64.0, r, delta, g));
  const double peak = std::fabs(expected(64, 64));
  EXPECT_NEAR(phi(64, 64), expected(64, 64), 0.10 * peak);
  EXPECT_LT(oracle::rms_diff(phi, expected), 0.05 * peak);
}

TEST(PhaseFromRetrieval, WireDominatesFibers) {
  const std::size_t n = 256;
  const mobi::Geometry g;
  const auto truth = mobi::render_phantom(mobi::default_phantom(n, n), n, n, g);
  mobi::AcquisitionSet acq;
  acq.geometry = g;
  for (std::uint64_t k = 0; k < 6; ++k) {
    mobi::SpeckleSpec s;
    s.seed = 900 + k;
    ScalarField ref = mobi::generate_speckle(s, n, n);
    acq.pairs.push_back({ref, mobi::simulate_acquisition(ref, truth).image});
  }
  const auto phi = mobi::phase_from_retrieval(mobi::solve_scalar(acq), g).phi;
  // wire axis at column 48 (96 / 2), upper bundle spans columns 100..235
  auto range = [&](std::size_t c0, std::size_t c1, std::size_t r0, std::size_t r1) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t r = r0; r < r1; ++r)
      for (std::size_t c = c0; c < c1; ++c) {
        lo = std::min(lo, phi(r, c));
        hi = std::max(hi, phi(r, c));
      }
    return hi - lo;
  };
  EXPECT_GT(range(30, 66, 100, 156), 3.0 * range(120, 220, 40, 100));
}

}  // namespace
