#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "vtr/config.hpp"
#include "vtr/matrix.hpp"
#include "vtr/model.hpp"
#include "vtr/spt.hpp"
#include "vtr/weights.hpp"

// Binary formats. All integers and floats are little-endian regardless of host.
//
// VTRT (one tensor):
//   "VTRT" | u32 rank | u32 dims[rank] | u32 dtype (1 = f32) | f32 payload, row-major
//
// VTRW (weights with embedded config):
//   "VTRW" | u32 version (1)
//   | u32 x 11 config: height, width, channels, patch, shifts, shift_magnitude,
//                      dim, depth, heads, mlp_ratio, num_classes
//   | u32 tensor_count
//   | per tensor: u32 name_len | name bytes | u32 rank | u32 dims[rank] | u64 offset
//   | payload: f32 values; offsets are relative to the payload start and must
//     be contiguous in directory order
namespace vtr::io {

inline constexpr std::uint32_t kWeightsVersion = 1;
inline constexpr std::uint32_t kDtypeF32 = 1;

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  std::size_t element_count() const;
  bool operator==(const Tensor&) const = default;
};

std::vector<char> encode_tensor(const Tensor& t);
Tensor decode_tensor(const std::vector<char>& bytes);
void write_tensor(const std::filesystem::path& path, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& path);

Tensor to_tensor(const Matrix& m);
Matrix to_matrix(const Tensor& t);  // rank 1 -> 1 x n, rank 2 -> rows x cols

std::vector<char> encode_weights(const WeightSet& w, const VtrConfig& cfg);
std::pair<WeightSet, VtrConfig> decode_weights(const std::vector<char>& bytes);
void save_weights(const WeightSet& w, const VtrConfig& cfg, const std::filesystem::path& path);
std::pair<WeightSet, VtrConfig> load_weights(const std::filesystem::path& path);

/// Binary (P5) PGM, 8- or 16-bit, normalized to [0, 1] by the header maxval.
Image read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const std::vector<std::uint16_t>& samples, std::size_t height,
               std::size_t width, std::uint16_t maxval);

/// VTRT ([H, W] or [H, W, C]) or PGM, detected from the file's magic bytes.
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& img);

/// Trace bundle: one `<stage>.vtrt` per stage inside `dir`.
void write_trace(const std::filesystem::path& dir, const ActivationTrace& trace);
ActivationTrace read_trace(const std::filesystem::path& dir, const std::vector<std::string>& stages);
/// Every `<stage>.vtrt` in `dir`, ordered by name.
ActivationTrace read_trace(const std::filesystem::path& dir);

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

}  // namespace vtr::io
