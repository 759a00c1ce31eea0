// Shared parameter sets for the suite.

#ifndef MSPR_TESTS_BUILDERS_HPP
#define MSPR_TESTS_BUILDERS_HPP

#include "mspr/model.hpp"

namespace builders {

// Three positively coupled neurons; marginal rates (35,30), (35,30), (35,32).
inline mspr::Params coupled_ensemble() {
  mspr::Params params;
  params.base_up = {15.0, 20.0, 10.0};
  params.base_down = {10.0, 15.0, 7.0};
  params.gamma = mspr::Matrix(3, 3);
  params.gamma(0, 1) = params.gamma(1, 0) = 5.0;
  params.gamma(0, 2) = params.gamma(2, 0) = 15.0;
  params.gamma(1, 2) = params.gamma(2, 1) = 10.0;
  params.signs = mspr::SignMatrix(3);
  params.signs.set_pair(0, 1, +1, +1);
  params.signs.set_pair(0, 2, +1, +1);
  params.signs.set_pair(1, 2, +1, +1);
  return params;
}

// Mixed-sign triple with one anticorrelated pair and one correlated pair
// built from negative signs; low rates keep simulations cheap.
inline mspr::Params mixed_sign_ensemble() {
  mspr::Params params;
  params.base_up = {2.0, 2.0, 2.0};
  params.base_down = {1.0, 1.0, 1.0};
  params.gamma = mspr::Matrix(3, 3);
  params.gamma(0, 1) = params.gamma(1, 0) = 0.5;
  params.gamma(0, 2) = params.gamma(2, 0) = 0.8;
  params.gamma(1, 2) = params.gamma(2, 1) = 0.3;
  params.signs = mspr::SignMatrix(3);
  params.signs.set_pair(0, 1, +1, -1);  // anticorrelated
  params.signs.set_pair(0, 2, +1, +1);  // correlated
  params.signs.set_pair(1, 2, -1, -1);  // correlated through matching signs
  return params;
}

}  // namespace builders

#endif  // MSPR_TESTS_BUILDERS_HPP
