#include "wdur/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "wdur/errors.hpp"

namespace wdur {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <class T>
  void le(T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    bytes(b, sizeof(T));
  }
  void floats(std::span<const float> v) {
    for (float f : v) le(f);
  }
  void flush(const fs::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw FormatError("write failed for '" + path.string() + "'");
  }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  explicit Reader(const fs::path& path) : path_(path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  std::size_t offset() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (pos_ + n > buf_.size()) {
      throw FormatError(path_.string() + ": truncated at byte " + std::to_string(pos_) +
                        " reading " + what + ": expected " + std::to_string(pos_ + n) +
                        " bytes, file has " + std::to_string(buf_.size()));
    }
  }

  void magic(const char* expected) {
    need(4, "magic");
    if (std::memcmp(buf_.data() + pos_, expected, 4) != 0) {
      throw FormatError(path_.string() + ": bad magic at byte 0, expected '" +
                        std::string(expected, 4) + "'");
    }
    pos_ += 4;
  }

  template <class T>
  T le(const char* what) {
    need(sizeof(T), what);
    unsigned char b[sizeof(T)];
    std::memcpy(b, buf_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string text(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  std::vector<float> floats(std::size_t n, const char* what) {
    need(n * sizeof(float), what);
    std::vector<float> out(n);
    for (float& f : out) f = le<float>(what);
    return out;
  }

  void expect_end() const {
    if (pos_ != buf_.size()) {
      throw FormatError(path_.string() + ": " + std::to_string(buf_.size() - pos_) +
                        " trailing bytes after byte " + std::to_string(pos_));
    }
  }

  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError(path_.string() + ": " + msg + " at byte " + std::to_string(at));
  }

 private:
  fs::path path_;
  std::vector<unsigned char> buf_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_tensor(const fs::path& path, const ImageTensor& t) {
  Writer w;
  w.bytes("WDTN", 4);
  w.le<std::uint32_t>(kTensorFormatVersion);
  w.le<std::uint8_t>(3);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(t.height()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(t.width()));
  w.le<std::uint32_t>(static_cast<std::uint32_t>(t.channels()));
  w.floats(t.values());
  w.flush(path);
}

ImageTensor load_tensor(const fs::path& path) {
  Reader r(path);
  r.magic("WDTN");
  const std::size_t vpos = r.offset();
  const auto version = r.le<std::uint32_t>("version");
  if (version != kTensorFormatVersion) {
    r.fail("unsupported tensor version " + std::to_string(version), vpos);
  }
  const std::size_t npos = r.offset();
  const auto ndim = r.le<std::uint8_t>("ndim");
  if (ndim != 3) r.fail("expected 3 dimensions, found " + std::to_string(ndim), npos);
  std::uint32_t dims[3];
  for (auto& d : dims) {
    const std::size_t at = r.offset();
    d = r.le<std::uint32_t>("dims");
    if (d == 0) r.fail("zero-sized dimension", at);
  }
  auto data = r.floats(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], "payload");
  r.expect_end();
  return ImageTensor(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                     static_cast<int>(dims[2]), std::move(data));
}

void save_checkpoint(const fs::path& path, const ParamStore<float>& params) {
  Writer w;
  w.bytes("WDUR", 4);
  w.le<std::uint32_t>(kCheckpointFormatVersion);
  w.le<std::uint32_t>(static_cast<std::uint32_t>(params.tensor_count()));
  for (const auto& [name, p] : params.entries()) {
    if (name.size() > 0xFFFF) throw FormatError("parameter name too long: " + name);
    w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.le<std::uint8_t>(static_cast<std::uint8_t>(p.dims.size()));
    for (int d : p.dims) w.le<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.floats(p.value);
  }
  w.flush(path);
}

ParamStore<float> load_checkpoint(const fs::path& path) {
  Reader r(path);
  r.magic("WDUR");
  const std::size_t vpos = r.offset();
  const auto version = r.le<std::uint32_t>("version");
  if (version != kCheckpointFormatVersion) {
    r.fail("checkpoint version " + std::to_string(version) + " is not supported (expected " +
               std::to_string(kCheckpointFormatVersion) + ")",
           vpos);
  }
  const auto count = r.le<std::uint32_t>("tensor count");
  ParamStore<float> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = r.le<std::uint16_t>("name length");
    const std::size_t name_pos = r.offset();
    std::string name = r.text(len, "name");
    if (out.contains(name)) r.fail("duplicate tensor '" + name + "'", name_pos);
    const auto ndim = r.le<std::uint8_t>("ndim");
    std::vector<int> dims(ndim);
    for (int& d : dims) d = static_cast<int>(r.le<std::uint32_t>("dims"));
    auto& p = out.add(name, dims);
    p.value = r.floats(p.value.size(), "tensor values");
  }
  r.expect_end();
  return out;
}

void load_checkpoint_into(const fs::path& path, ParamStore<float>& params) {
  const ParamStore<float> loaded = load_checkpoint(path);
  std::ostringstream problems;
  for (const auto& [name, p] : loaded.entries()) {
    if (!params.contains(name)) {
      problems << "\n  unknown tensor '" << name << "'";
    } else if (params.get(name).dims != p.dims) {
      problems << "\n  shape mismatch for '" << name << "': checkpoint " << dims_string(p.dims)
               << " vs model " << dims_string(params.get(name).dims);
    }
  }
  for (const auto& [name, p] : params.entries()) {
    if (!loaded.contains(name)) problems << "\n  missing tensor '" << name << "'";
  }
  const std::string report = problems.str();
  if (!report.empty()) {
    throw FormatError(path.string() + ": checkpoint does not match the model:" + report);
  }
  for (auto& [name, p] : params.entries()) p.value = loaded.get(name).value;
}

void save_png(const fs::path& path, const ImageTensor& img) {
  if (img.channels() != 1 && img.channels() != 3 && img.channels() != 4) {
    throw FormatError("save_png: unsupported channel count " + std::to_string(img.channels()));
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 1 ? PNG_FORMAT_GRAY
                                      : (img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_RGBA);
  std::vector<png_byte> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img[i], 0.0f, 1.0f);
    bytes[i] = static_cast<png_byte>(std::floor(v * 255.0f + 0.5f));
  }
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, bytes.data(), 0, nullptr)) {
    throw FormatError("save_png: " + std::string(image.message));
  }
}

ImageTensor load_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw FormatError(path.string() + ": " + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> bytes(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, bytes.data(), 0, nullptr)) {
    throw FormatError(path.string() + ": " + image.message);
  }
  ImageTensor out(static_cast<int>(image.height), static_cast<int>(image.width), 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = bytes[i] / 255.0f;
  return out;
}

ImageTensor load_image(const fs::path& path) {
  if (path.extension() == ".png") return load_png(path);
  return load_tensor(path);
}

void save_image(const fs::path& path, const ImageTensor& img) {
  if (path.extension() == ".png") {
    save_png(path, img);
  } else {
    save_tensor(path, img);
  }
}

void save_dataset(const fs::path& root, const std::vector<SamplePair>& pairs) {
  for (const SamplePair& p : pairs) {
    const fs::path dir = root / p.id;
    fs::create_directories(dir);
    save_tensor(dir / "lr.wdtn", p.lr);
    save_tensor(dir / "ref.wdtn", p.ref);
    save_tensor(dir / "hr.wdtn", p.hr);
  }
}

std::vector<SamplePair> load_dataset(const fs::path& root) {
  if (!fs::is_directory(root)) throw FormatError("dataset root '" + root.string() + "' is not a directory");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<SamplePair> out;
  for (const fs::path& dir : dirs) {
    SamplePair p;
    p.id = dir.filename().string();
    p.lr = load_tensor(dir / "lr.wdtn");
    p.ref = load_tensor(dir / "ref.wdtn");
    p.hr = load_tensor(dir / "hr.wdtn");
    out.push_back(std::move(p));
  }
  if (out.empty()) throw FormatError("dataset root '" + root.string() + "' has no samples");
  return out;
}

}  // namespace wdur
