#include "wvsc/nn.h"

#include <cmath>

#include "wvsc/errors.h"

namespace wvsc {

uint64_t derive_seed(uint64_t base, uint64_t tag) {
  uint64_t z = base + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ad::Var ParamStore::add(const std::string& name, Tensor init) {
  const std::string full = prefix_.empty() ? name : prefix_ + "." + name;
  for (const auto& [n, _] : entries_) {
    if (n == full) throw ConfigError("duplicate parameter name " + full);
  }
  ad::Var v(std::move(init), true);
  entries_.emplace_back(full, v);
  return v;
}

const ad::Var& ParamStore::get(const std::string& name) const {
  const std::string full = prefix_.empty() ? name : prefix_ + "." + name;
  for (const auto& [n, v] : entries_) {
    if (n == full || n == name) return v;
  }
  throw ConfigError("no parameter named " + full);
}

ParamStore ParamStore::scoped(const std::string& sub) const {
  return ParamStore(prefix_.empty() ? sub : prefix_ + "." + sub);
}

void ParamStore::adopt(const ParamStore& child) {
  for (const auto& e : child.entries()) entries_.push_back(e);
}

size_t ParamStore::scalar_count() const {
  size_t n = 0;
  for (const auto& [_, v] : entries_) n += v.size();
  return n;
}

namespace {

Tensor init_tensor(std::vector<int> shape, int fan_in, Init init, Rng& rng) {
  Tensor t(std::move(shape), 0.0);
  switch (init) {
    case Init::kZero:
      break;
    case Init::kHe:
    case Init::kSmall: {
      double stddev = std::sqrt(2.0 / ((1.0 + kLeakySlope * kLeakySlope) * fan_in));
      if (init == Init::kSmall) stddev *= 0.1;
      std::normal_distribution<double> dist(0.0, stddev);
      for (auto& v : t.values()) v = dist(rng);
      break;
    }
    case Init::kIdentity:
      throw ConfigError("identity init is only defined for explicit layer setups");
  }
  return t;
}

}  // namespace

Conv Conv::create(ParamStore& store, const std::string& name, int in, int out, int k, int stride,
                  Rng& rng, Init init) {
  Conv c;
  c.stride = stride;
  c.pad = k / 2;
  if (init == Init::kIdentity) {
    if (k != 1) throw ConfigError("identity init requires a 1x1 kernel");
    Tensor w({out, in, 1, 1}, 0.0);
    for (int i = 0; i < std::min(in, out); ++i) w[static_cast<size_t>(i) * in + i] = 1.0;
    c.weight = store.add(name + ".weight", std::move(w));
  } else {
    c.weight = store.add(name + ".weight", init_tensor({out, in, k, k}, in * k * k, init, rng));
  }
  c.bias = store.add(name + ".bias", Tensor({out}, 0.0));
  return c;
}

Linear Linear::create(ParamStore& store, const std::string& name, int in, int out, Rng& rng,
                      bool with_bias, Init init) {
  Linear l;
  l.weight = store.add(name + ".weight", init_tensor({in, out}, in, init, rng));
  if (with_bias) l.bias = store.add(name + ".bias", Tensor({out}, 0.0));
  return l;
}

ad::Var Linear::operator()(const ad::Var& x) const {
  ad::Var y = ad::matmul(x, weight);
  return bias.defined() ? ad::add_rows(y, bias) : y;
}

ResBlock ResBlock::create(ParamStore& store, const std::string& name, int channels, Rng& rng) {
  ResBlock r;
  r.a = Conv::create(store, name + ".a", channels, channels, 3, 1, rng);
  r.b = Conv::create(store, name + ".b", channels, channels, 3, 1, rng, Init::kSmall);
  return r;
}

ad::Var ResBlock::operator()(const ad::Var& x) const {
  return ad::add(x, b(ad::leaky_relu(a(x), kLeakySlope)));
}

StateDict state_of(const std::vector<NamedParam>& params) {
  StateDict d;
  for (const auto& [name, v] : params) d.emplace(name, v.value());
  return d;
}

void load_state_into(const std::vector<NamedParam>& params, const StateDict& state) {
  for (const auto& [name, v] : params) {
    auto it = state.find(name);
    if (it == state.end()) throw ConfigError("state is missing parameter " + name);
    require_same_shape(v.shape(), it->second.shape(), name.c_str());
    ad::Var leaf = v;
    leaf.mutable_value() = it->second;
  }
}

}  // namespace wvsc
