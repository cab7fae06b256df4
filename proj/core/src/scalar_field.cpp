#include "mobi/scalar_field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "mobi/error.hpp"

namespace mobi {

ScalarField::ScalarField(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

ScalarField::ScalarField(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    fail(ErrorCode::kShapeMismatch,
         "field of " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
             std::to_string(values_.size()) + " values");
  }
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double ScalarField::mean() const noexcept {
  if (values_.empty()) return 0.0;
  return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
}

double ScalarField::min() const noexcept {
  return values_.empty() ? 0.0 : *std::min_element(values_.begin(), values_.end());
}

double ScalarField::max() const noexcept {
  return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
}

void ScalarField::require_finite(const char* what) const {
  if (!all_finite()) fail(ErrorCode::kData, std::string(what) + " contains non-finite values");
}

void require_same_shape(const ScalarField& a, const ScalarField& b, const char* what) {
  if (!a.same_shape(b)) {
    fail(ErrorCode::kShapeMismatch, std::string(what) + ": " + std::to_string(a.rows()) + "x" +
                                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                        "x" + std::to_string(b.cols()));
  }
}

ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  require_same_shape(a, b, "field addition");
  ScalarField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  require_same_shape(a, b, "field subtraction");
  ScalarField out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

ScalarField operator*(double s, const ScalarField& a) {
  ScalarField out = a;
  for (double& v : out.values()) v *= s;
  return out;
}

std::size_t Mask::count() const noexcept {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

ScalarField Mask::to_field() const {
  ScalarField f(rows_, cols_);
  for (std::size_t i = 0; i < bits_.size(); ++i) f[i] = bits_[i] ? 1.0 : 0.0;
  return f;
}

Mask Mask::from_field(const ScalarField& f, double threshold) {
  Mask m(f.rows(), f.cols());
  for (std::size_t i = 0; i < f.size(); ++i) m.set(i, f[i] > threshold);
  return m;
}

Mask Mask::rectangle(std::size_t rows, std::size_t cols, std::size_t row0, std::size_t col0,
                     std::size_t height, std::size_t width) {
  if (row0 + height > rows || col0 + width > cols) {
    fail(ErrorCode::kDomain, "rectangle exceeds the image bounds");
  }
  Mask m(rows, cols);
  for (std::size_t r = row0; r < row0 + height; ++r)
    for (std::size_t c = col0; c < col0 + width; ++c) m.set(r, c, true);
  return m;
}

void Geometry::validate() const {
  if (!(z2_mm > 0.0) || !std::isfinite(z2_mm)) fail(ErrorCode::kDomain, "z2_mm must be > 0");
  if (!(pixel_pitch_um > 0.0) || !std::isfinite(pixel_pitch_um))
    fail(ErrorCode::kDomain, "pixel_pitch_um must be > 0");
  if (!(energy_keV > 0.0) || !std::isfinite(energy_keV))
    fail(ErrorCode::kDomain, "energy_keV must be > 0");
}

double Geometry::wavelength_um() const {
  // hc = 12.398419843320026 keV*Angstrom
  constexpr double kHcKevAngstrom = 12.398419843320026;
  return kHcKevAngstrom / energy_keV * 1e-4;
}

double Geometry::wavenumber_per_um() const {
  return 2.0 * std::numbers::pi / wavelength_um();
}

void AcquisitionSet::validate() const {
  if (pairs.empty()) fail(ErrorCode::kInsufficientMeasurements, "acquisition set is empty");
  geometry.validate();
  const ScalarField& first = pairs.front().reference;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    const std::string tag = "pair " + std::to_string(k);
    require_same_shape(first, p.reference, (tag + " reference").c_str());
    require_same_shape(first, p.sample, (tag + " sample").c_str());
    p.reference.require_finite((tag + " reference").c_str());
    p.sample.require_finite((tag + " sample").c_str());
    for (double v : p.reference.values()) {
      if (!(v > 0.0)) fail(ErrorCode::kData, tag + " reference has non-positive intensity");
    }
  }
}

}  // namespace mobi
