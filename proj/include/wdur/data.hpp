#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wdur/tensor.hpp"

namespace wdur {

/// Catmull-Rom (a = -0.5) separable resampling with replicated edges. When shrinking, the
/// kernel is widened by the inverse scale (antialiased, as in MATLAB's imresize).
/// `clamp_pixels` clamps the result to [0, 1]; pass false for wavelet or latent tensors.
ImageTensor bicubic_resize(const ImageTensor& img, int out_height, int out_width,
                           bool clamp_pixels = true);

/// Bicubic kernel value at distance x.
double cubic_kernel(double x);

struct SamplePair {
  ImageTensor lr;
  ImageTensor ref;
  ImageTensor hr;
  std::string id;
};

/// Repeated x2 bicubic shrinking, `levels` times.
ImageTensor degrade(const ImageTensor& hr, int levels);

/// Reference size used for a given LR size (1.5x).
int reference_size(int lr_size);

/// Procedural scene: oriented sinusoids over a Voronoi mosaic plus mild noise, in [0, 1].
ImageTensor synthesize_scene(int size, int channels, std::uint64_t seed);

/// n deterministic triplets with HR of hr_size, LR = hr_size / 2^d, ref = 1.5 x LR.
std::vector<SamplePair> make_synthetic_dataset(std::uint64_t seed, int n, int hr_size, int d,
                                               int channels = 3);

}  // namespace wdur
