#include "wdur/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wdur/errors.hpp"
#include "wdur/random.hpp"

namespace wdur {

namespace {

struct Tap {
  int index;
  double weight;
};

// Contributions of input samples to every output sample along one axis.
std::vector<std::vector<Tap>> resample_taps(int in_size, int out_size) {
  const double scale = static_cast<double>(out_size) / in_size;
  const double support = scale < 1.0 ? 2.0 / scale : 2.0;
  const double kscale = scale < 1.0 ? scale : 1.0;
  std::vector<std::vector<Tap>> taps(out_size);
  for (int j = 0; j < out_size; ++j) {
    const double center = (j + 0.5) / scale - 0.5;
    const int first = static_cast<int>(std::floor(center - support)) + 1;
    const int last = static_cast<int>(std::ceil(center + support)) - 1;
    double total = 0.0;
    for (int i = first; i <= last; ++i) {
      const double w = cubic_kernel((center - i) * kscale);
      if (w == 0.0) continue;
      taps[j].push_back({std::clamp(i, 0, in_size - 1), w});
      total += w;
    }
    for (Tap& t : taps[j]) t.weight /= total;
  }
  return taps;
}

}  // namespace

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

ImageTensor bicubic_resize(const ImageTensor& img, int out_height, int out_width, bool clamp_pixels) {
  if (out_height < 1 || out_width < 1) {
    throw ParameterError("bicubic_resize: output size must be positive");
  }
  if (out_height == img.height() && out_width == img.width()) {
    return clamp_pixels ? clamp(img, 0.0f, 1.0f) : img;
  }
  const int C = img.channels();
  const auto row_taps = resample_taps(img.height(), out_height);
  const auto col_taps = resample_taps(img.width(), out_width);

  // Columns first, kept in double until the end.
  std::vector<double> tmp(static_cast<std::size_t>(img.height()) * out_width * C, 0.0);
  for (int r = 0; r < img.height(); ++r)
    for (int q = 0; q < out_width; ++q)
      for (const Tap& t : col_taps[q])
        for (int c = 0; c < C; ++c)
          tmp[(static_cast<std::size_t>(r) * out_width + q) * C + c] += t.weight * img.at(r, t.index, c);

  ImageTensor out(out_height, out_width, C);
  for (int r = 0; r < out_height; ++r)
    for (int q = 0; q < out_width; ++q)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (const Tap& t : row_taps[r])
          acc += t.weight * tmp[(static_cast<std::size_t>(t.index) * out_width + q) * C + c];
        if (clamp_pixels) acc = std::clamp(acc, 0.0, 1.0);
        out.at(r, q, c) = static_cast<float>(acc);
      }
  return out;
}

ImageTensor degrade(const ImageTensor& hr, int levels) {
  ImageTensor cur = hr;
  for (int i = 0; i < levels; ++i) {
    if (cur.height() % 2 || cur.width() % 2) {
      throw ParameterError("degrade: size " + cur.shape_string() + " cannot be halved");
    }
    cur = bicubic_resize(cur, cur.height() / 2, cur.width() / 2);
  }
  return cur;
}

int reference_size(int lr_size) { return lr_size * 3 / 2; }

ImageTensor synthesize_scene(int size, int channels, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  struct Wave {
    double fx, fy, phase;
    std::vector<double> amp;
  };
  const int n_waves = 3 + static_cast<int>(uni(rng) * 4.0);
  std::vector<Wave> waves(n_waves);
  for (Wave& w : waves) {
    const double theta = uni(rng) * std::numbers::pi;
    const double cycles = 1.0 + uni(rng) * (size / 6.0);
    w.fx = cycles * std::cos(theta) / size;
    w.fy = cycles * std::sin(theta) / size;
    w.phase = uni(rng) * 2.0 * std::numbers::pi;
    for (int c = 0; c < channels; ++c) w.amp.push_back(0.2 + 0.8 * uni(rng));
  }

  struct Site {
    double y, x;
    std::vector<double> color;
  };
  const int n_sites = 4 + static_cast<int>(uni(rng) * 7.0);
  std::vector<Site> sites(n_sites);
  for (Site& s : sites) {
    s.y = uni(rng) * size;
    s.x = uni(rng) * size;
    for (int c = 0; c < channels; ++c) s.color.push_back(uni(rng));
  }

  std::vector<double> raw(static_cast<std::size_t>(size) * size * channels);
  for (int r = 0; r < size; ++r) {
    for (int q = 0; q < size; ++q) {
      const double y = r + 0.5, x = q + 0.5;
      const Site* nearest = &sites[0];
      double best = 1e300;
      for (const Site& s : sites) {
        const double d = (s.y - y) * (s.y - y) + (s.x - x) * (s.x - x);
        if (d < best) {
          best = d;
          nearest = &s;
        }
      }
      for (int c = 0; c < channels; ++c) {
        double wave = 0.0;
        for (const Wave& w : waves) {
          wave += w.amp[c] * std::sin(2.0 * std::numbers::pi * (w.fx * x + w.fy * y) + w.phase);
        }
        raw[(static_cast<std::size_t>(r) * size + q) * channels + c] =
            0.5 * wave / n_waves + nearest->color[c];
      }
    }
  }
  for (double& v : raw) v += 0.01 * normal(rng);
  const auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
  const double lo_v = *lo, span = std::max(*hi - *lo, 1e-12);
  ImageTensor out(size, size, channels);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[i] = std::clamp(static_cast<float>((raw[i] - lo_v) / span), 0.0f, 1.0f);
  }
  return out;
}

std::vector<SamplePair> make_synthetic_dataset(std::uint64_t seed, int n, int hr_size, int d,
                                               int channels) {
  if (n < 1) throw ParameterError("dataset: n must be >= 1");
  if (d < 1) throw ParameterError("dataset: d must be >= 1");
  const int factor = 1 << d;
  if (hr_size % factor != 0 || (hr_size / factor) % 2 != 0) {
    throw ParameterError("dataset: hr_size " + std::to_string(hr_size) +
                         " must be an even multiple of 2^d = " + std::to_string(factor));
  }
  const int lr_size = hr_size / factor;
  std::vector<SamplePair> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    SamplePair p;
    p.hr = synthesize_scene(hr_size, channels, derive_seed(seed, static_cast<std::uint64_t>(i)));
    p.lr = degrade(p.hr, d);
    const int ref = reference_size(lr_size);
    p.ref = bicubic_resize(p.hr, ref, ref);
    char id[32];
    std::snprintf(id, sizeof(id), "s%05d", i);
    p.id = id;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace wdur
