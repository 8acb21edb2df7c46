#pragma once

#include <optional>

#include "wdur/wavelet.hpp"

namespace wdur {

/// Conditioning for one x2 step: the low-frequency target-band condition and,
/// in cross-scale mode, one condition per detail band.
struct Condition {
  ImageTensor lf;
  std::optional<DetailBands> hf;

  bool operator==(const Condition&) const = default;
};

}  // namespace wdur
