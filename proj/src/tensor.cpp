#include "wdur/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "wdur/errors.hpp"

namespace wdur {

ImageTensor::ImageTensor(int height, int width, int channels, float fill)
    : height_(height), width_(width), channels_(channels) {
  if (height <= 0 || width <= 0 || channels <= 0) {
    throw ShapeError("ImageTensor dimensions must be positive, got " + std::to_string(height) + "x" +
                     std::to_string(width) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

ImageTensor::ImageTensor(int height, int width, int channels, std::vector<float> data)
    : ImageTensor(height, width, channels) {
  if (data.size() != data_.size()) {
    throw ShapeError("ImageTensor data length " + std::to_string(data.size()) + " does not match " +
                     shape_string());
  }
  data_ = std::move(data);
}

std::string ImageTensor::shape_string() const {
  return std::to_string(height_) + "x" + std::to_string(width_) + "x" + std::to_string(channels_);
}

void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  }
}

bool all_finite(const ImageTensor& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](float v) { return std::isfinite(v); });
}

void require_finite(const ImageTensor& t, const std::string& what) {
  if (!all_finite(t)) throw NumericError(what + ": non-finite value");
}

ImageTensor clamp(const ImageTensor& t, float lo, float hi) {
  ImageTensor out = t;
  for (float& v : out.values()) v = std::clamp(v, lo, hi);
  return out;
}

ImageTensor axpby(float a, const ImageTensor& x, float b, const ImageTensor& y) {
  require_same_shape(x, y, "axpby");
  ImageTensor out(x.height(), x.width(), x.channels());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

ImageTensor scaled(const ImageTensor& x, float s) {
  ImageTensor out = x;
  for (float& v : out.values()) v *= s;
  return out;
}

double sum_of_squares(const ImageTensor& t) {
  double acc = 0.0;
  for (float v : t.values()) acc += static_cast<double>(v) * v;
  return acc;
}

double mean(const ImageTensor& t) {
  double acc = 0.0;
  for (float v : t.values()) acc += v;
  return t.empty() ? 0.0 : acc / static_cast<double>(t.size());
}

float max_abs_diff(const ImageTensor& a, const ImageTensor& b) {
  require_same_shape(a, b, "max_abs_diff");
  float m = 0.0f;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

}  // namespace wdur
