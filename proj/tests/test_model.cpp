#include <doctest.h>

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "builders.hpp"
#include "mspr/model.hpp"

using namespace mspr;

TEST_CASE("SignMatrix enforces paired entries") {
  SignMatrix signs(3);
  signs.set_pair(0, 1, +1, -1);
  CHECK(signs(0, 1) == +1);
  CHECK(signs(1, 0) == -1);
  signs.set_pair(0, 1, 0, 0);
  CHECK(signs(0, 1) == 0);
  CHECK(signs(1, 0) == 0);
  CHECK_THROWS_AS(signs.set_pair(0, 1, +1, 0), std::invalid_argument);
  CHECK_THROWS_AS(signs.set_pair(0, 1, 2, 1), std::invalid_argument);
  CHECK_THROWS_AS(signs.set_pair(1, 1, +1, +1), std::invalid_argument);
  CHECK_THROWS_AS(signs.set_pair(0, 3, +1, +1), std::out_of_range);
}

TEST_CASE("marginal_rates absorbs shared components") {
  const Params params = builders::coupled_ensemble();
  const RatePair r0 = marginal_rates(params, 0);
  CHECK(r0.up == 35.0);
  CHECK(r0.down == 30.0);
  const RatePair r1 = marginal_rates(params, 1);
  CHECK(r1.up == 35.0);
  CHECK(r1.down == 30.0);
  const RatePair r2 = marginal_rates(params, 2);
  CHECK(r2.up == 35.0);
  CHECK(r2.down == 32.0);
  CHECK_THROWS_AS(marginal_rates(params, 3), std::out_of_range);
}

TEST_CASE("marginal_rates reduces to base rates without coupling") {
  const Params params = Params::independent({3.0, 7.0}, {1.0, 2.0});
  CHECK(marginal_rates(params, 0).up == 3.0);
  CHECK(marginal_rates(params, 0).down == 1.0);
  CHECK(marginal_rates(params, 1).up == 7.0);
  CHECK(marginal_rates(params, 1).down == 2.0);

  const Params single = Params::independent({4.0}, {0.0});
  CHECK(marginal_rates(single, 0).up == 4.0);
  CHECK(marginal_rates(single, 0).down == 0.0);
}

TEST_CASE("count_covariance carries the coupling sign") {
  const Params plus = builders::coupled_ensemble();
  CHECK(count_covariance(plus, 0, 1, 10.0) == 2.0 * 5.0 * 10.0);
  CHECK(count_covariance(plus, 0, 2, 10.0) == 2.0 * 15.0 * 10.0);
  CHECK(count_covariance(plus, 2, 0, 10.0) == count_covariance(plus, 0, 2, 10.0));

  const Params mixed = builders::mixed_sign_ensemble();
  CHECK(count_covariance(mixed, 0, 1, 4.0) == -2.0 * 0.5 * 4.0);  // opposite signs
  CHECK(count_covariance(mixed, 1, 2, 4.0) == 2.0 * 0.3 * 4.0);   // matching negatives
  CHECK_THROWS_AS(count_covariance(mixed, 0, 0, 4.0), std::invalid_argument);

  Params uncoupled = Params::independent({1.0, 1.0}, {0.5, 0.5});
  CHECK(count_covariance(uncoupled, 0, 1, 4.0) == 0.0);
  CHECK_THROWS_AS(count_covariance(uncoupled, 0, 2, 1.0), std::out_of_range);
  CHECK_THROWS_AS(count_covariance(uncoupled, 0, 1, -1.0), std::domain_error);
}

TEST_CASE("validate accepts the reference configurations") {
  CHECK(validate(builders::coupled_ensemble()).empty());
  CHECK(validate(builders::mixed_sign_ensemble()).empty());
  CHECK(validate(Params::independent({4.0}, {0.0})).empty());  // pure Poisson neuron
}

TEST_CASE("validate reports each violation") {
  auto has_complaint = [](const Params& params) { return !validate(params).empty(); };

  SUBCASE("dimension mismatch") {
    Params params = builders::coupled_ensemble();
    params.base_down.pop_back();
    CHECK(has_complaint(params));
  }
  SUBCASE("negative rate") {
    Params params = builders::coupled_ensemble();
    params.base_up[0] = -1.0;
    CHECK(has_complaint(params));
  }
  SUBCASE("non-finite rate") {
    Params params = builders::coupled_ensemble();
    params.base_down[1] = std::numeric_limits<double>::infinity();
    CHECK(has_complaint(params));
  }
  SUBCASE("asymmetric gamma") {
    Params params = builders::coupled_ensemble();
    params.gamma(0, 1) = 6.0;
    CHECK(has_complaint(params));
  }
  SUBCASE("nonzero gamma diagonal") {
    Params params = builders::coupled_ensemble();
    params.gamma(1, 1) = 1.0;
    CHECK(has_complaint(params));
  }
  SUBCASE("coupled pair with zero gamma") {
    Params params = builders::coupled_ensemble();
    params.gamma(0, 1) = params.gamma(1, 0) = 0.0;
    CHECK(has_complaint(params));
  }
  SUBCASE("uncoupled pair with positive gamma") {
    Params params = Params::independent({2.0, 2.0}, {1.0, 1.0});
    params.gamma(0, 1) = params.gamma(1, 0) = 0.5;
    CHECK(has_complaint(params));
  }
  SUBCASE("zero marginal up rate") {
    const Params params = Params::independent({0.0}, {1.0});
    CHECK(has_complaint(params));
  }
}

TEST_CASE("marginal rates are permutation equivariant") {
  const Params params = builders::mixed_sign_ensemble();
  // swap neurons 0 and 2 by rebuilding
  Params swapped;
  swapped.base_up = {params.base_up[2], params.base_up[1], params.base_up[0]};
  swapped.base_down = {params.base_down[2], params.base_down[1], params.base_down[0]};
  swapped.gamma = Matrix(3, 3);
  const std::size_t perm[] = {2, 1, 0};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) swapped.gamma(i, j) = params.gamma(perm[i], perm[j]);
  swapped.signs = SignMatrix(3);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      if (params.signs(perm[i], perm[j]) != 0)
        swapped.signs.set_pair(i, j, params.signs(perm[i], perm[j]), params.signs(perm[j], perm[i]));

  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(marginal_rates(swapped, i).up == marginal_rates(params, perm[i]).up);
    CHECK(marginal_rates(swapped, i).down == marginal_rates(params, perm[i]).down);
    for (std::size_t j = 0; j < 3; ++j) {
      if (j == i) continue;
      CHECK(count_covariance(swapped, i, j, 2.0) ==
            count_covariance(params, perm[i], perm[j], 2.0));
    }
  }
}
