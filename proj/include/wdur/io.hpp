#pragma once

#include <filesystem>
#include <vector>

#include "wdur/data.hpp"
#include "wdur/params.hpp"
#include "wdur/tensor.hpp"

namespace wdur {

inline constexpr std::uint32_t kTensorFormatVersion = 1;
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Raw tensor file: "WDTN", u32 version, u8 ndim, u32 dims..., little-endian float32 payload.
/// Image tensors are written with ndim = 3 as (height, width, channels).
void save_tensor(const std::filesystem::path& path, const ImageTensor& t);
ImageTensor load_tensor(const std::filesystem::path& path);

/// Checkpoint file: "WDUR", u32 version, u32 tensor count, then per tensor
/// u16 name length, UTF-8 name, u8 ndim, u32 dims..., little-endian float32 values.
void save_checkpoint(const std::filesystem::path& path, const ParamStore<float>& params);

/// Reads every tensor in the file as-is.
ParamStore<float> load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into an already-built store. Throws FormatError listing unknown
/// names, missing names and shape differences when the architectures disagree.
void load_checkpoint_into(const std::filesystem::path& path, ParamStore<float>& params);

/// 8-bit PNG export (values clamped to [0,1], scaled by 255, rounded half up).
void save_png(const std::filesystem::path& path, const ImageTensor& img);
/// 8-bit PNG import as RGB (3 channels), values / 255.
ImageTensor load_png(const std::filesystem::path& path);

/// Loads .png or .wdtn by extension.
ImageTensor load_image(const std::filesystem::path& path);
/// Saves .png or .wdtn by extension.
void save_image(const std::filesystem::path& path, const ImageTensor& img);

/// Dataset layout <root>/<id>/{lr,ref,hr}.wdtn.
void save_dataset(const std::filesystem::path& root, const std::vector<SamplePair>& pairs);
/// Reads every sub-directory of root, sorted by id.
std::vector<SamplePair> load_dataset(const std::filesystem::path& root);

}  // namespace wdur
