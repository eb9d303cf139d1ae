#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "wvsc/autograd.h"

namespace wvsc::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  int checked = 0;
};

// Central-difference check of d/dx sum(probe * f(...)) at `coords` random
// coordinates of each leaf. `f` must rebuild the graph from the leaves' current
// values on every call. Relative error uses max(|a|, |n|, 1e-6) as scale.
inline GradCheckResult grad_check(const std::function<ad::Var()>& f, std::vector<ad::Var> leaves,
                                  int coords, uint64_t seed, double eps = 1e-6) {
  std::mt19937_64 rng(seed);
  const Tensor out0 = f().value();
  Tensor probe(out0.shape());
  std::normal_distribution<double> nd(0.0, 1.0);
  for (auto& v : probe.values()) v = nd(rng);
  const auto loss_of = [&]() {
    return ad::sum(ad::mul(f(), ad::constant(probe)));
  };
  for (auto& l : leaves) l.zero_grad();
  ad::backward(loss_of());
  GradCheckResult r;
  for (auto& leaf : leaves) {
    const Tensor analytic = leaf.grad();
    std::uniform_int_distribution<size_t> pick(0, leaf.size() - 1);
    for (int c = 0; c < coords; ++c) {
      const size_t i = pick(rng);
      double& x = leaf.mutable_value()[i];
      const double saved = x;
      x = saved + eps;
      const double up = loss_of().value()[0];
      x = saved - eps;
      const double down = loss_of().value()[0];
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double scale = std::max({std::fabs(numeric), std::fabs(analytic[i]), 1e-6});
      r.max_rel_error = std::max(r.max_rel_error, std::fabs(numeric - analytic[i]) / scale);
      ++r.checked;
    }
  }
  return r;
}

inline Tensor random_tensor(std::vector<int> shape, uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = nd(rng);
  return t;
}

}  // namespace wvsc::testing
