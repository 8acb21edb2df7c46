#pragma once

#include <cstdint>
#include <random>

#include "wdur/random.hpp"
#include "wdur/tensor.hpp"

namespace wdur::test {

inline ImageTensor uniform_image(int h, int w, int c, std::uint64_t seed, float lo = 0.0f,
                                 float hi = 1.0f) {
  Rng rng(seed);
  std::uniform_real_distribution<float> u(lo, hi);
  ImageTensor out(h, w, c);
  for (float& v : out.values()) v = u(rng);
  return out;
}

inline std::vector<double> normal_vector(std::size_t n, std::uint64_t seed, double sd = 1.0) {
  Rng rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> out(n);
  for (double& v : out) v = d(rng);
  return out;
}

}  // namespace wdur::test
