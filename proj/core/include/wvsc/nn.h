#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wvsc/autograd.h"

namespace wvsc {

using Rng = std::mt19937_64;

// Derives an independent 64-bit stream seed from a base seed and a tag
// (splitmix64 finalizer), so sub-components never share RNG state.
uint64_t derive_seed(uint64_t base, uint64_t tag);

using NamedParam = std::pair<std::string, ad::Var>;
using StateDict = std::map<std::string, Tensor>;

// Ordered collection of learnable leaves. Names are fully qualified
// ("codec.enc.down0.weight") and unique within a store.
class ParamStore {
 public:
  explicit ParamStore(std::string prefix = "") : prefix_(std::move(prefix)) {}

  ad::Var add(const std::string& name, Tensor init);
  const ad::Var& get(const std::string& name) const;
  const std::vector<NamedParam>& entries() const { return entries_; }
  const std::string& prefix() const { return prefix_; }
  ParamStore scoped(const std::string& sub) const;

  // Child stores created through scoped() append here.
  void adopt(const ParamStore& child);

  size_t scalar_count() const;

 private:
  std::string prefix_;
  std::vector<NamedParam> entries_;
};

enum class Init { kHe, kSmall, kZero, kIdentity };

// (C,H,W) convolution layer with square kernel and "same" padding for odd k.
struct Conv {
  ad::Var weight;
  ad::Var bias;
  int stride = 1;
  int pad = 0;

  static Conv create(ParamStore& store, const std::string& name, int in, int out, int k,
                     int stride, Rng& rng, Init init = Init::kHe);
  ad::Var operator()(const ad::Var& x) const { return ad::conv2d(x, weight, bias, stride, pad); }
};

// Token-wise affine map (T, in) -> (T, out).
struct Linear {
  ad::Var weight;  // (in, out)
  ad::Var bias;    // (out) or undefined

  static Linear create(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                       bool with_bias = true, Init init = Init::kHe);
  ad::Var operator()(const ad::Var& x) const;
};

constexpr double kLeakySlope = 0.2;

// x + conv_b(lrelu(conv_a(x))), 3x3 convolutions at constant width.
struct ResBlock {
  Conv a;
  Conv b;

  static ResBlock create(ParamStore& store, const std::string& name, int channels, Rng& rng);
  ad::Var operator()(const ad::Var& x) const;
};

StateDict state_of(const std::vector<NamedParam>& params);
// Copies values by name; every parameter must be present with a matching shape.
void load_state_into(const std::vector<NamedParam>& params, const StateDict& state);

}  // namespace wvsc
