#ifndef MSPR_MATRIX_HPP
#define MSPR_MATRIX_HPP

#include <cstddef>
#include <vector>

namespace mspr {

/// Minimal dense row-major matrix of doubles. The library only handles
/// p-by-p parameter blocks and trial-by-neuron count tables, so no linear
/// algebra is needed beyond element access.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace mspr

#endif  // MSPR_MATRIX_HPP
