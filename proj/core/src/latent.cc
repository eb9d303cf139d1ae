#include "wvsc/latent.h"

#include "wvsc/errors.h"

namespace wvsc {

LatentFrame::LatentFrame(ad::Var features) : features_(std::move(features)) {
  if (!features_.defined() || features_.value().rank() != 3) {
    throw ShapeError("latent frames are (channels, h, w) maps");
  }
}

}  // namespace wvsc
