#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace wdur {

/// H x W x C image of 32-bit reals stored row-major as (row, col, channel).
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(int height, int width, int channels, float fill = 0.0f);
  ImageTensor(int height, int width, int channels, std::vector<float> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int row, int col, int ch) {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }
  float at(int row, int col, int ch) const {
    return data_[(static_cast<std::size_t>(row) * width_ + col) * channels_ + ch];
  }

  float& operator[](std::size_t i) { return data_[i]; }
  float operator[](std::size_t i) const { return data_[i]; }

  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }
  const std::vector<float>& vec() const { return data_; }

  bool same_shape(const ImageTensor& other) const {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }
  std::string shape_string() const;

  bool operator==(const ImageTensor& other) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<float> data_;
};

/// Throws ShapeError naming `what` if the shapes differ.
void require_same_shape(const ImageTensor& a, const ImageTensor& b, const char* what);

bool all_finite(const ImageTensor& t);

/// Throws NumericError naming `what` if any value is NaN/Inf.
void require_finite(const ImageTensor& t, const std::string& what);

ImageTensor clamp(const ImageTensor& t, float lo, float hi);

/// a*x + b*y, elementwise.
ImageTensor axpby(float a, const ImageTensor& x, float b, const ImageTensor& y);
ImageTensor scaled(const ImageTensor& x, float s);

double sum_of_squares(const ImageTensor& t);
double mean(const ImageTensor& t);
float max_abs_diff(const ImageTensor& a, const ImageTensor& b);

}  // namespace wdur
