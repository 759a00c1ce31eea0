#ifndef MSPR_MODEL_HPP
#define MSPR_MODEL_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "mspr/matrix.hpp"
#include "mspr/skellam.hpp"

namespace mspr {

/// Coupling signs a_ij in {-1, 0, +1} with zero diagonal. A pair is either
/// uncoupled (both a_ij and a_ji zero) or coupled (both nonzero).
class SignMatrix {
 public:
  SignMatrix() = default;
  explicit SignMatrix(std::size_t p) : p_(p), a_(p * p, 0) {}

  std::size_t size() const { return p_; }
  int operator()(std::size_t i, std::size_t j) const { return a_[i * p_ + j]; }

  /// Sets both directions of a coupling; values must be -1 or +1 (or both 0
  /// to clear the pair).
  void set_pair(std::size_t i, std::size_t j, int aij, int aji);

  friend bool operator==(const SignMatrix&, const SignMatrix&) = default;

 private:
  std::size_t p_ = 0;
  std::vector<int> a_;
};

/// Full model parameterization: per-neuron base rates, symmetric shared-rate
/// matrix gamma (zero diagonal) and the coupling sign matrix.
struct Params {
  std::vector<double> base_up;    // lambda_{i1}
  std::vector<double> base_down;  // lambda_{i2}
  Matrix gamma;                   // gamma_ij, symmetric, zero diagonal
  SignMatrix signs;

  std::size_t neuron_count() const { return base_up.size(); }

  /// Convenience constructor for an uncoupled ensemble.
  static Params independent(std::vector<double> up, std::vector<double> down);

  friend bool operator==(const Params&, const Params&) = default;
};

/// Per-neuron rates of the marginal process once shared components are
/// absorbed: (lambda_{i1} + sum_j gamma_ij, lambda_{i2} + sum_j gamma_ij).
RatePair marginal_rates(const Params& params, std::size_t i);

/// Model covariance of the latent values S_i(t), S_j(t):
/// 2 * a_ij * a_ji * gamma_ij * t. Zero for uncoupled pairs, positive iff
/// the coupling signs agree.
double count_covariance(const Params& params, std::size_t i, std::size_t j, double t);

/// Checks every structural invariant; returns the full list of violations
/// (empty means the parameters are valid).
std::vector<std::string> validate(const Params& params);

}  // namespace mspr

#endif  // MSPR_MODEL_HPP
