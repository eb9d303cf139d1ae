#include "wvsc/mfc.h"

#include "wvsc/errors.h"

namespace wvsc {

void FrameHistory::push(LatentFrame frame) {
  if (!frames_.empty() && frame.var().shape() != frames_.front().var().shape()) {
    throw ShapeError("history frames must share one latent shape");
  }
  frames_.push_front(std::move(frame));
  while (static_cast<int>(frames_.size()) > window_) frames_.pop_back();
}

ad::Var cross_attend(const ad::Var& q, const ad::Var& k, const ad::Var& v) {
  if (q.value().rank() != 2 || k.value().rank() != 2 || v.value().rank() != 2) {
    throw ShapeError("cross_attend expects token matrices");
  }
  if (q.dim(1) != k.dim(1)) {
    throw ShapeError("cross_attend: query/key embedding mismatch " + shape_string(q.shape()) +
                     " vs " + shape_string(k.shape()));
  }
  if (k.dim(0) != v.dim(0)) {
    throw ShapeError("cross_attend: key/value token count mismatch " + shape_string(k.shape()) +
                     " vs " + shape_string(v.shape()));
  }
  return ad::matmul(ad::softmax_rows(ad::matmul(q, ad::transpose2d(k))), v);
}

namespace {

ad::Var to_tokens(const ad::Var& x) {
  return ad::transpose2d(ad::reshape(x, {x.dim(0), x.dim(1) * x.dim(2)}));
}

}  // namespace

MfaModule::MfaModule(const std::string& prefix, const MfaConfig& config, uint64_t seed)
    : config_(config), store_(prefix) {
  if (config_.latent_channels < 1 || config_.attention_dim < 1 || config_.history_window < 1) {
    throw ConfigError("MFA dimensions must be positive");
  }
  Rng rng(derive_seed(seed, 0x3FA));
  const int c = config_.latent_channels, d = config_.attention_dim;
  csi_embed_ = Linear::create(store_, "csi", 2, c, rng, true, Init::kSmall);
  q_ref_ = Linear::create(store_, "q_ref", c, d, rng, false, Init::kSmall);
  k_ref_ = Linear::create(store_, "k_ref", c, d, rng, false, Init::kSmall);
  v_ref_ = Linear::create(store_, "v_ref", c, d, rng, false);
  q_pre_ = Linear::create(store_, "q_pre", c, d, rng, false, Init::kSmall);
  k_pre_ = Linear::create(store_, "k_pre", c, d, rng, false, Init::kSmall);
  v_pre_ = Linear::create(store_, "v_pre", c, d, rng, false);
  fuse_ = Linear::create(store_, "fuse", 2 * d, c, rng);
  gamma_ = store_.add("gamma", Tensor::scalar(0.0));
}

void MfaModule::set_gamma(double g) {
  ad::Var leaf = gamma_;
  leaf.mutable_value()[0] = g;
}

ad::Var MfaModule::fused(const ad::Var& reference, const std::vector<ad::Var>& history,
                         const ChannelDescriptor& csi) const {
  const int c = config_.latent_channels;
  if (reference.value().rank() != 3 || reference.dim(0) != c) {
    throw ShapeError("MFA reference must have " + std::to_string(c) + " channels, got " +
                     shape_string(reference.shape()));
  }
  const int h = reference.dim(1), w = reference.dim(2);

  std::vector<ad::Var> pre_parts;
  for (const auto& f : history) {
    require_same_shape(f.shape(), reference.shape(), "MFA history frame");
    pre_parts.push_back(to_tokens(f));
  }
  if (pre_parts.empty()) pre_parts.push_back(to_tokens(reference));
  const int k = static_cast<int>(pre_parts.size());

  ad::Var descriptor = ad::constant(Tensor({1, 2}, {csi.mean_fading_power, csi.noise_variance}));
  ad::Var embed = ad::reshape(csi_embed_(descriptor), {c});
  ad::Var ref_tokens = ad::add_rows(to_tokens(reference), embed);
  ad::Var pre_tokens = k == 1 ? pre_parts.front() : ad::concat(pre_parts, 0);

  ad::Var q_ref = q_ref_(ref_tokens), k_ref = k_ref_(ref_tokens), v_ref = v_ref_(ref_tokens);
  ad::Var q_pre = q_pre_(pre_tokens), k_pre = k_pre_(pre_tokens), v_pre = v_pre_(pre_tokens);

  // The reference attention map (T x T) weights the history values averaged
  // over frames; the history map (kT x kT) weights the reference values
  // replicated per frame and is then averaged back to T rows. Both reduce to
  // the plain cross-stream products when k == 1.
  ad::Var pre_values = k == 1 ? v_pre : ad::block_mean(v_pre, k);
  ad::Var from_ref = cross_attend(q_ref, k_ref, pre_values);
  ad::Var ref_values = v_ref;
  if (k > 1) ref_values = ad::concat(std::vector<ad::Var>(static_cast<size_t>(k), v_ref), 0);
  ad::Var from_pre = cross_attend(q_pre, k_pre, ref_values);
  if (k > 1) from_pre = ad::block_mean(from_pre, k);

  ad::Var combined = fuse_(ad::concat({from_pre, from_ref}, 1));  // (T, c)
  return ad::reshape(ad::transpose2d(combined), {c, h, w});
}

ad::Var MfaModule::compensate(const ad::Var& reference, const std::vector<ad::Var>& history,
                              const ChannelDescriptor& csi) const {
  return ad::add(reference, ad::scale_by(fused(reference, history, csi), gamma_));
}

LatentFrame compensate_reference(const LatentFrame& reference, const FrameHistory& history,
                                 const ChannelDescriptor& csi, const MfaModule& mfa) {
  std::vector<ad::Var> frames;
  for (const auto& f : history.frames()) frames.push_back(f.var());
  return LatentFrame(mfa.compensate(reference.var(), frames, csi));
}

}  // namespace wvsc
