#include "mspr/model.hpp"

#include <cmath>
#include <stdexcept>

#include "mspr/format.hpp"

namespace mspr {

void SignMatrix::set_pair(std::size_t i, std::size_t j, int aij, int aji) {
  if (i >= p_ || j >= p_) throw std::out_of_range("SignMatrix::set_pair: index out of range");
  if (i == j) throw std::invalid_argument("SignMatrix::set_pair: diagonal must stay zero");
  const bool clear = aij == 0 && aji == 0;
  const bool coupled = (aij == 1 || aij == -1) && (aji == 1 || aji == -1);
  if (!clear && !coupled) {
    throw std::invalid_argument("SignMatrix::set_pair: signs must both be in {-1,+1} or both 0");
  }
  a_[i * p_ + j] = aij;
  a_[j * p_ + i] = aji;
}

Params Params::independent(std::vector<double> up, std::vector<double> down) {
  Params p;
  const std::size_t n = up.size();
  p.base_up = std::move(up);
  p.base_down = std::move(down);
  p.gamma = Matrix(n, n, 0.0);
  p.signs = SignMatrix(n);
  return p;
}

RatePair marginal_rates(const Params& params, std::size_t i) {
  const std::size_t p = params.neuron_count();
  if (i >= p) throw std::out_of_range("marginal_rates: neuron index out of range");
  double shared = 0.0;
  for (std::size_t j = 0; j < p; ++j) {
    if (j != i && params.signs(i, j) != 0) shared += params.gamma(i, j);
  }
  return {params.base_up[i] + shared, params.base_down[i] + shared};
}

double count_covariance(const Params& params, std::size_t i, std::size_t j, double t) {
  const std::size_t p = params.neuron_count();
  if (i >= p || j >= p) throw std::out_of_range("count_covariance: neuron index out of range");
  if (i == j) throw std::invalid_argument("count_covariance: indices must differ");
  if (!(t > 0.0)) throw std::domain_error("count_covariance: t must be positive");
  const int product = params.signs(i, j) * params.signs(j, i);
  if (product == 0) return 0.0;
  return 2.0 * product * params.gamma(i, j) * t;
}

std::vector<std::string> validate(const Params& params) {
  std::vector<std::string> out;
  const std::size_t p = params.neuron_count();
  if (params.base_down.size() != p) {
    out.push_back("base_down length does not match base_up");
    return out;
  }
  if (params.signs.size() != p || params.gamma.rows() != p || params.gamma.cols() != p) {
    out.push_back("gamma/sign matrix dimensions do not match the neuron count");
    return out;
  }
  for (std::size_t i = 0; i < p; ++i) {
    if (!(params.base_up[i] >= 0.0) || !std::isfinite(params.base_up[i])) {
      out.push_back(format("base up rate of neuron ", i, " must be finite and nonnegative"));
    }
    if (!(params.base_down[i] >= 0.0) || !std::isfinite(params.base_down[i])) {
      out.push_back(format("base down rate of neuron ", i, " must be finite and nonnegative"));
    }
    if (params.gamma(i, i) != 0.0) {
      out.push_back(format("gamma diagonal entry ", i, " must be zero"));
    }
    if (params.signs(i, i) != 0) {
      out.push_back(format("sign diagonal entry ", i, " must be zero"));
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      const double gij = params.gamma(i, j);
      const double gji = params.gamma(j, i);
      const int aij = params.signs(i, j);
      const int aji = params.signs(j, i);
      if (gij != gji) {
        out.push_back(format("gamma must be symmetric: (", i, ",", j, ")"));
      }
      if (!(gij >= 0.0) || !std::isfinite(gij)) {
        out.push_back(format("gamma(", i, ",", j, ") must be finite and nonnegative"));
        continue;
      }
      if (aij < -1 || aij > 1 || aji < -1 || aji > 1) {
        out.push_back(format("signs(", i, ",", j, ") must lie in {-1,0,+1}"));
      }
      if ((aij == 0) != (aji == 0)) {
        out.push_back(format("signs(", i, ",", j, ") and (", j, ",", i,
                             ") must be zero together"));
      }
      if ((gij > 0.0) != (aij != 0 || aji != 0)) {
        out.push_back(format("pair (", i, ",", j,
                             "): gamma must be positive exactly when the pair is coupled"));
      }
    }
  }
  if (out.empty()) {
    for (std::size_t i = 0; i < p; ++i) {
      if (!(marginal_rates(params, i).up > 0.0)) {
        out.push_back(format("neuron ", i, " has zero marginal up rate and can never spike"));
      }
    }
  }
  return out;
}

}  // namespace mspr
