#pragma once

#include "wvsc/autograd.h"

namespace wvsc {

// A semantic frame: a (channels, h', w') feature map. Holds an autodiff value
// so the same type flows through inference and training.
class LatentFrame {
 public:
  LatentFrame() = default;
  explicit LatentFrame(ad::Var features);
  explicit LatentFrame(Tensor features) : LatentFrame(ad::constant(std::move(features))) {}

  const ad::Var& var() const { return features_; }
  const Tensor& tensor() const { return features_.value(); }
  int channels() const { return features_.dim(0); }
  int height() const { return features_.dim(1); }
  int width() const { return features_.dim(2); }
  // Flattened length L = channels * h' * w'.
  size_t length() const { return features_.size(); }
  bool defined() const { return features_.defined(); }

 private:
  ad::Var features_;
};

}  // namespace wvsc
