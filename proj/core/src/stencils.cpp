#include "mobi/stencils.hpp"

#include <string>

#include "mobi/error.hpp"

namespace mobi {

namespace {

void require_min(std::size_t n, const char* axis, const char* op) {
  if (n < 3) {
    fail(ErrorCode::kDimension, std::string(op) + " needs at least 3 " + axis + ", got " +
                                    std::to_string(n));
  }
}

}  // namespace

ScalarField gradient_x(const ScalarField& f) {
  require_min(f.cols(), "columns", "gradient_x");
  const std::size_t rows = f.rows(), cols = f.cols();
  ScalarField out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    out(r, 0) = f(r, 1) - f(r, 0);
    for (std::size_t c = 1; c + 1 < cols; ++c) out(r, c) = 0.5 * (f(r, c + 1) - f(r, c - 1));
    out(r, cols - 1) = f(r, cols - 1) - f(r, cols - 2);
  }
  return out;
}

ScalarField gradient_y(const ScalarField& f) {
  require_min(f.rows(), "rows", "gradient_y");
  const std::size_t rows = f.rows(), cols = f.cols();
  ScalarField out(rows, cols);
  for (std::size_t c = 0; c < cols; ++c) {
    out(0, c) = f(1, c) - f(0, c);
    out(rows - 1, c) = f(rows - 1, c) - f(rows - 2, c);
  }
  for (std::size_t r = 1; r + 1 < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = 0.5 * (f(r + 1, c) - f(r - 1, c));
  return out;
}

ScalarField second_derivative_x(const ScalarField& f) {
  require_min(f.cols(), "columns", "second_derivative_x");
  const std::size_t rows = f.rows(), cols = f.cols();
  ScalarField out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const double left = f(r, c == 0 ? 0 : c - 1);
      const double right = f(r, c + 1 == cols ? c : c + 1);
      out(r, c) = left + right - 2.0 * f(r, c);
    }
  }
  return out;
}

ScalarField second_derivative_y(const ScalarField& f) {
  require_min(f.rows(), "rows", "second_derivative_y");
  const std::size_t rows = f.rows(), cols = f.cols();
  ScalarField out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == rows ? r : r + 1;
    for (std::size_t c = 0; c < cols; ++c) out(r, c) = f(up, c) + f(down, c) - 2.0 * f(r, c);
  }
  return out;
}

ScalarField laplacian(const ScalarField& f) {
  require_min(f.rows(), "rows", "laplacian");
  require_min(f.cols(), "columns", "laplacian");
  const std::size_t rows = f.rows(), cols = f.cols();
  ScalarField out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t up = r == 0 ? 0 : r - 1;
    const std::size_t down = r + 1 == rows ? r : r + 1;
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t left = c == 0 ? 0 : c - 1;
      const std::size_t right = c + 1 == cols ? c : c + 1;
      out(r, c) = f(r, right) + f(r, left) + f(down, c) + f(up, c) - 4.0 * f(r, c);
    }
  }
  return out;
}

ScalarField mixed_derivative_xy(const ScalarField& f) {
  require_min(f.rows(), "rows", "mixed_derivative_xy");
  require_min(f.cols(), "columns", "mixed_derivative_xy");
  return gradient_x(gradient_y(f));
}

}  // namespace mobi
