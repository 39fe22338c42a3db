#include "vtr/config.hpp"

#include <sstream>

#include "vtr/errors.hpp"

namespace vtr {

ShiftSpec VtrConfig::shift_spec() const {
  const auto m = static_cast<int>(shift_magnitude);
  // Diagonals first, then the axis-aligned directions for 8-way shifting.
  const PixelShift all[] = {{-m, -m}, {m, -m}, {-m, m}, {m, m}, {-m, 0}, {m, 0}, {0, -m}, {0, m}};
  ShiftSpec spec;
  for (std::size_t i = 0; i < shifts; ++i) spec.directions.push_back(all[i]);
  return spec;
}

void VtrConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidConfig("VtrConfig: " + msg); };
  if (image_height == 0 || image_width == 0 || channels == 0) fail("image dimensions must be >= 1");
  if (patch == 0 || image_height % patch != 0 || image_width % patch != 0)
    fail("patch size must divide image height and width");
  if (shifts > 8) fail("at most 8 shift directions are supported");
  if (shifts > 0 && shift_magnitude >= std::min(image_height, image_width))
    fail("shift magnitude must be smaller than the image");
  if (dim == 0 || heads == 0 || dim % heads != 0) fail("heads must divide the hidden dimension");
  if (mlp_ratio == 0) fail("mlp_ratio must be >= 1");
  if (num_classes == 0) fail("num_classes must be >= 1");
}

std::string VtrConfig::describe() const {
  std::ostringstream os;
  os << "image " << image_height << "x" << image_width << "x" << channels << ", patch " << patch
     << ", shifts " << shifts << "@" << shift_magnitude << "px, dim " << dim << ", depth " << depth
     << ", heads " << heads << ", mlp_ratio " << mlp_ratio << ", classes " << num_classes;
  return os.str();
}

}  // namespace vtr
