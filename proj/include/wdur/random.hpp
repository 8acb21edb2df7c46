#pragma once

#include <cstdint>
#include <random>

#include "wdur/tensor.hpp"

namespace wdur {

using Rng = std::mt19937_64;

/// Unit Gaussian tensor drawn from `rng`.
inline ImageTensor gaussian(int height, int width, int channels, Rng& rng) {
  ImageTensor out(height, width, channels);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (float& v : out.values()) v = normal(rng);
  return out;
}

inline ImageTensor gaussian_like(const ImageTensor& shape, Rng& rng) {
  return gaussian(shape.height(), shape.width(), shape.channels(), rng);
}

/// Derives an independent stream seed from a base seed and a stream index (splitmix64).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace wdur
