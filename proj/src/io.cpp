#include "vtr/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>

#include "vtr/errors.hpp"

namespace vtr::io {

namespace fs = std::filesystem;

namespace {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    out_.insert(out_.end(), c, c + n);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f32s(std::span<const float> vs) {
    out_.reserve(out_.size() + vs.size() * 4);
    for (float v : vs) f32(v);
  }
  std::vector<char> take() { return std::move(out_); }

 private:
  std::vector<char> out_;
};

class Reader {
 public:
  Reader(const std::vector<char>& buf, std::string what) : buf_(buf), what_(std::move(what)) {}

  void need(std::size_t n, const char* field) const {
    if (buf_.size() - pos_ < n) {
      throw TruncatedPayload(what_ + ": file ends inside " + field + " (offset " + std::to_string(pos_) +
                             ", need " + std::to_string(n) + " bytes, have " +
                             std::to_string(buf_.size() - pos_) + ")");
    }
  }
  std::string str(std::size_t n, const char* field) {
    need(n, field);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }
  void f32s(std::span<float> out, const char* field) {
    need(out.size() * 4, field);
    for (auto& v : out) {
      std::uint32_t bits = 0;
      for (int i = 0; i < 4; ++i) bits |= std::uint32_t(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
      v = std::bit_cast<float>(bits);
      pos_ += 4;
    }
  }
  std::size_t pos() const { return pos_; }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::vector<char>& buf_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::string dims_str(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? ", " : "") + std::to_string(dims[i]);
  return s + "]";
}

std::size_t product(const std::vector<std::uint32_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1}, std::multiplies<>());
}

void check_magic(Reader& r, const char* magic, const std::string& what) {
  const std::size_t n = std::strlen(magic);
  if (r.remaining() < n) throw BadMagic(what + ": too short to hold the " + magic + " magic");
  const std::string got = r.str(n, "magic");
  if (got != magic) throw BadMagic(what + ": expected magic '" + magic + "'");
}

}  // namespace

std::size_t Tensor::element_count() const { return product(dims); }

std::vector<char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading '" + path.string() + "'");
  return buf;
}

void write_file(const fs::path& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing '" + path.string() + "'");
}

// ---- VTRT ------------------------------------------------------------------

std::vector<char> encode_tensor(const Tensor& t) {
  if (t.values.size() != t.element_count()) {
    throw ShapeInconsistent("tensor dims " + dims_str(t.dims) + " do not match " +
                            std::to_string(t.values.size()) + " values");
  }
  Writer w;
  w.bytes("VTRT", 4);
  w.u32(static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) w.u32(d);
  w.u32(kDtypeF32);
  w.f32s(t.values);
  return w.take();
}

namespace {

Tensor decode_tensor_named(const std::vector<char>& bytes, const std::string& what) {
  Reader r(bytes, what);
  check_magic(r, "VTRT", what);
  const std::uint32_t rank = r.u32("rank");
  if (rank > 8) throw ShapeInconsistent(what + ": implausible rank " + std::to_string(rank));
  Tensor t;
  for (std::uint32_t i = 0; i < rank; ++i) t.dims.push_back(r.u32("dims"));
  const std::uint32_t dtype = r.u32("dtype");
  if (dtype != kDtypeF32) throw FormatError(what + ": unsupported dtype tag " + std::to_string(dtype));
  const std::size_t n = t.element_count();
  if (r.remaining() < n * 4) {
    throw TruncatedPayload(what + ": payload holds " + std::to_string(r.remaining()) + " bytes, dims " +
                           dims_str(t.dims) + " need " + std::to_string(n * 4));
  }
  if (r.remaining() > n * 4) {
    throw ShapeInconsistent(what + ": " + std::to_string(r.remaining() - n * 4) +
                            " trailing bytes after payload of dims " + dims_str(t.dims));
  }
  t.values.resize(n);
  r.f32s(t.values, "payload");
  return t;
}

}  // namespace

Tensor decode_tensor(const std::vector<char>& bytes) { return decode_tensor_named(bytes, "VTRT"); }

void write_tensor(const fs::path& path, const Tensor& t) { write_file(path, encode_tensor(t)); }

Tensor read_tensor(const fs::path& path) { return decode_tensor_named(read_file(path), path.string()); }

Tensor to_tensor(const Matrix& m) {
  return Tensor{{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())}, m.data()};
}

Matrix to_matrix(const Tensor& t) {
  if (t.dims.size() == 1) return Matrix(1, t.dims[0], t.values);
  if (t.dims.size() == 2) return Matrix(t.dims[0], t.dims[1], t.values);
  throw ShapeInconsistent("expected a rank 1 or 2 tensor, got dims " + dims_str(t.dims));
}

// ---- VTRW ------------------------------------------------------------------

namespace {

constexpr std::size_t kConfigFields = 11;

std::array<std::size_t VtrConfig::*, kConfigFields> config_fields() {
  return {&VtrConfig::image_height, &VtrConfig::image_width, &VtrConfig::channels,
          &VtrConfig::patch,        &VtrConfig::shifts,      &VtrConfig::shift_magnitude,
          &VtrConfig::dim,          &VtrConfig::depth,       &VtrConfig::heads,
          &VtrConfig::mlp_ratio,    &VtrConfig::num_classes};
}

}  // namespace

std::vector<char> encode_weights(const WeightSet& ws, const VtrConfig& cfg) {
  cfg.validate();
  validate_weights(ws, cfg);
  Writer w;
  w.bytes("VTRW", 4);
  w.u32(kWeightsVersion);
  for (auto field : config_fields()) w.u32(static_cast<std::uint32_t>(cfg.*field));
  const auto refs = tensor_refs(ws);
  w.u32(static_cast<std::uint32_t>(refs.size()));
  std::uint64_t offset = 0;
  for (const auto& t : refs) {
    w.u32(static_cast<std::uint32_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    w.u64(offset);
    offset += t.values.size() * 4;
  }
  for (const auto& t : refs) w.f32s(t.values);
  return w.take();
}

namespace {

std::pair<WeightSet, VtrConfig> decode_weights_named(const std::vector<char>& bytes, const std::string& what) {
  Reader r(bytes, what);
  check_magic(r, "VTRW", what);
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion) {
    throw VersionMismatch(what + ": format version " + std::to_string(version) + ", this build reads " +
                          std::to_string(kWeightsVersion));
  }
  VtrConfig cfg;
  for (auto field : config_fields()) cfg.*field = r.u32("config header");
  try {
    cfg.validate();
  } catch (const InvalidConfig& e) {
    throw ShapeInconsistent(what + ": embedded config is invalid: " + e.what());
  }

  const auto layout = tensor_layout(cfg);
  const std::uint32_t count = r.u32("tensor count");
  if (count != layout.size()) {
    throw ShapeInconsistent(what + ": directory lists " + std::to_string(count) + " tensors, config " +
                            cfg.describe() + " needs " + std::to_string(layout.size()));
  }
  std::uint64_t expected_offset = 0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& [name, dims] = layout[i];
    const std::uint32_t len = r.u32("directory name length");
    if (len > 4096) throw ShapeInconsistent(what + ": implausible tensor name length " + std::to_string(len));
    const std::string got = r.str(len, "directory name");
    if (got != name) {
      throw ShapeInconsistent(what + ": directory entry " + std::to_string(i) + " is '" + got + "', expected '" +
                              name + "'");
    }
    const std::uint32_t rank = r.u32("directory rank");
    if (rank > 8) throw ShapeInconsistent(what + ": '" + name + "' has implausible rank " + std::to_string(rank));
    std::vector<std::uint32_t> got_dims(rank);
    for (auto& d : got_dims) d = r.u32("directory dims");
    if (got_dims != dims) {
      throw ShapeInconsistent(what + ": '" + name + "' has dims " + dims_str(got_dims) + ", config needs " +
                              dims_str(dims));
    }
    const std::uint64_t offset = r.u64("directory offset");
    if (offset != expected_offset) {
      throw ShapeInconsistent(what + ": '" + name + "' starts at payload offset " + std::to_string(offset) +
                              ", expected " + std::to_string(expected_offset) + " (gap or overlap)");
    }
    expected_offset += product(dims) * 4;
  }
  if (r.remaining() < expected_offset) {
    throw TruncatedPayload(what + ": payload holds " + std::to_string(r.remaining()) + " bytes, directory needs " +
                           std::to_string(expected_offset));
  }
  if (r.remaining() > expected_offset) {
    throw ShapeInconsistent(what + ": " + std::to_string(r.remaining() - expected_offset) +
                            " trailing bytes after payload");
  }
  WeightSet ws = allocate_weights(cfg);
  for (auto& t : tensor_refs(ws)) r.f32s(t.values, "payload");
  try {
    validate_weights(ws, cfg);
  } catch (const InvalidConfig& e) {
    throw FormatError(what + ": " + e.what());
  }
  return {std::move(ws), cfg};
}

}  // namespace

std::pair<WeightSet, VtrConfig> decode_weights(const std::vector<char>& bytes) {
  return decode_weights_named(bytes, "VTRW");
}

void save_weights(const WeightSet& w, const VtrConfig& cfg, const fs::path& path) {
  write_file(path, encode_weights(w, cfg));
}

std::pair<WeightSet, VtrConfig> load_weights(const fs::path& path) {
  return decode_weights_named(read_file(path), path.string());
}

// ---- PGM -------------------------------------------------------------------

namespace {

std::size_t pgm_number(const std::vector<char>& buf, std::size_t& pos, const std::string& what) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  if (pos >= buf.size()) throw TruncatedPayload(what + ": PGM header ends early");
  if (!std::isdigit(static_cast<unsigned char>(buf[pos]))) throw FormatError(what + ": malformed PGM header");
  std::size_t v = 0;
  while (pos < buf.size() && std::isdigit(static_cast<unsigned char>(buf[pos]))) {
    v = v * 10 + static_cast<std::size_t>(buf[pos] - '0');
    if (v > 1u << 30) throw FormatError(what + ": PGM header value out of range");
    ++pos;
  }
  return v;
}

Image decode_pgm(const std::vector<char>& buf, const std::string& what) {
  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5') throw BadMagic(what + ": not a binary (P5) PGM");
  std::size_t pos = 2;
  const std::size_t width = pgm_number(buf, pos, what);
  const std::size_t height = pgm_number(buf, pos, what);
  const std::size_t maxval = pgm_number(buf, pos, what);
  if (width == 0 || height == 0) throw ShapeInconsistent(what + ": PGM has zero size");
  if (maxval == 0 || maxval > 65535) throw FormatError(what + ": PGM maxval must be in 1..65535");
  if (pos >= buf.size() || !std::isspace(static_cast<unsigned char>(buf[pos]))) {
    throw TruncatedPayload(what + ": PGM header ends early");
  }
  ++pos;
  const std::size_t bps = maxval < 256 ? 1 : 2;
  const std::size_t need = width * height * bps;
  if (buf.size() - pos < need) {
    throw TruncatedPayload(what + ": PGM raster holds " + std::to_string(buf.size() - pos) + " bytes, need " +
                           std::to_string(need));
  }
  Image img(height, width, 1);
  const float scale = static_cast<float>(maxval);
  for (std::size_t i = 0; i < width * height; ++i) {
    std::size_t v = static_cast<unsigned char>(buf[pos + i * bps]);
    if (bps == 2) v = (v << 8) | static_cast<unsigned char>(buf[pos + i * bps + 1]);
    img.data()[i] = static_cast<float>(v) / scale;
  }
  return img;
}

}  // namespace

Image read_pgm(const fs::path& path) { return decode_pgm(read_file(path), path.string()); }

void write_pgm(const fs::path& path, const std::vector<std::uint16_t>& samples, std::size_t height,
               std::size_t width, std::uint16_t maxval) {
  if (samples.size() != height * width) throw DimensionMismatch("write_pgm: sample count does not match size");
  if (maxval == 0) throw InvalidConfig("write_pgm: maxval must be positive");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
                             std::to_string(maxval) + "\n";
  std::vector<char> out(header.begin(), header.end());
  for (auto s : samples) {
    if (s > maxval) throw InvalidConfig("write_pgm: sample exceeds maxval");
    if (maxval >= 256) out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  write_file(path, out);
}

// ---- images and traces -----------------------------------------------------

Image load_image(const fs::path& path) {
  const auto buf = read_file(path);
  if (buf.size() >= 4 && std::memcmp(buf.data(), "VTRT", 4) == 0) {
    const Tensor t = decode_tensor_named(buf, path.string());
    if (t.dims.size() == 2) return Image(t.dims[0], t.dims[1], 1, t.values);
    if (t.dims.size() == 3) return Image(t.dims[0], t.dims[1], t.dims[2], t.values);
    throw ShapeInconsistent(path.string() + ": image tensor must be [H, W] or [H, W, C], got " +
                            dims_str(t.dims));
  }
  if (buf.size() >= 2 && buf[0] == 'P' && buf[1] == '5') return decode_pgm(buf, path.string());
  throw BadMagic(path.string() + ": neither a VTRT tensor nor a binary PGM");
}

void save_image(const fs::path& path, const Image& img) {
  write_tensor(path, Tensor{{static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()),
                             static_cast<std::uint32_t>(img.channels())},
                            img.data()});
}

void write_trace(const fs::path& dir, const ActivationTrace& trace) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create trace directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, m] : trace.entries()) write_tensor(dir / (name + ".vtrt"), to_tensor(m));
}

ActivationTrace read_trace(const fs::path& dir, const std::vector<std::string>& stages) {
  ActivationTrace trace;
  for (const auto& s : stages) trace.record(s, to_matrix(read_tensor(dir / (s + ".vtrt"))));
  return trace;
}

ActivationTrace read_trace(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("trace directory '" + dir.string() + "' does not exist");
  std::vector<std::string> stages;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".vtrt") stages.push_back(e.path().stem().string());
  }
  std::sort(stages.begin(), stages.end());
  return read_trace(dir, stages);
}

}  // namespace vtr::io
