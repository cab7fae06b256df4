#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mobi {

/// Row-major 2D grid of doubles. Column index is the x coordinate, row index
/// is y; all solver-side lengths are in pixels.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(std::size_t rows, std::size_t cols, double fill = 0.0);
  ScalarField(std::size_t rows, std::size_t cols, std::vector<double> values);

  template <typename F>
  static ScalarField from_function(std::size_t rows, std::size_t cols, F&& f) {
    ScalarField out(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) out(r, c) = f(r, c);
    return out;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool same_shape(const ScalarField& other) const noexcept {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  bool all_finite() const noexcept;
  double mean() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  /// Throws kData naming `what` if any value is NaN or infinite.
  void require_finite(const char* what) const;

  bool operator==(const ScalarField&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

ScalarField operator+(const ScalarField& a, const ScalarField& b);
ScalarField operator-(const ScalarField& a, const ScalarField& b);
ScalarField operator*(double s, const ScalarField& a);

void require_same_shape(const ScalarField& a, const ScalarField& b, const char* what);

/// Boolean per-pixel field.
class Mask {
 public:
  Mask() = default;
  Mask(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return bits_.size(); }

  bool operator()(std::size_t r, std::size_t c) const noexcept { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) noexcept { bits_[r * cols_ + c] = v ? 1 : 0; }
  bool operator[](std::size_t i) const noexcept { return bits_[i] != 0; }
  void set(std::size_t i, bool v) noexcept { bits_[i] = v ? 1 : 0; }

  std::size_t count() const noexcept;
  ScalarField to_field() const;
  static Mask from_field(const ScalarField& f, double threshold = 0.5);
  static Mask rectangle(std::size_t rows, std::size_t cols, std::size_t row0, std::size_t col0,
                        std::size_t height, std::size_t width);

  bool operator==(const Mask&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Acquisition geometry. Only phase integration and reporting leave pixel units.
struct Geometry {
  double z2_mm = 3200.0;
  double pixel_pitch_um = 75.0;
  double energy_keV = 8.6;

  void validate() const;
  double wavelength_um() const;
  /// 2*pi / lambda, in radians per micrometre.
  double wavenumber_per_um() const;
  double z2_um() const { return z2_mm * 1e3; }
};

struct AcquisitionPair {
  ScalarField reference;
  ScalarField sample;
};

struct AcquisitionSet {
  std::vector<AcquisitionPair> pairs;
  Geometry geometry;

  std::size_t count() const noexcept { return pairs.size(); }
  std::size_t rows() const noexcept { return pairs.empty() ? 0 : pairs.front().reference.rows(); }
  std::size_t cols() const noexcept { return pairs.empty() ? 0 : pairs.front().reference.cols(); }

  /// K >= 1, uniform shape, finite values, strictly positive references.
  void validate() const;
};

}  // namespace mobi
