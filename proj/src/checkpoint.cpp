#include "sdd/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "sdd/data_io.hpp"
#include "sdd/errors.hpp"

namespace sdd {
namespace {

constexpr char kMagic[4] = {'S', 'D', 'D', '1'};
constexpr std::uint8_t kF32 = 0;
constexpr std::uint8_t kU8 = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void need(std::size_t n) const {
    if (pos_ + n > in_.size()) throw FormatError("truncated", "truncated checkpoint");
  }
  std::uint8_t u8() {
    need(1);
    return in_[pos_++];
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{in_[pos_ + static_cast<std::size_t>(i)]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(std::span<const CheckpointTensor> tensors) {
  static_assert(std::endian::native == std::endian::little, "big-endian hosts need byte swapping");
  Writer w;
  w.bytes(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    if (t.name.size() > 0xFFFF) throw InvalidArgument("tensor name too long");
    if (t.shape.size() > 0xFF) throw InvalidArgument("tensor rank too large");
    w.u16(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    const bool is_f32 = std::holds_alternative<std::vector<float>>(t.data);
    w.u8(is_f32 ? kF32 : kU8);
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    const auto n = element_count(t.shape);
    if (is_f32) {
      const auto& v = std::get<std::vector<float>>(t.data);
      if (v.size() != n) throw ShapeError("tensor '" + t.name + "' payload does not match its shape");
      w.bytes(v.data(), v.size() * sizeof(float));
    } else {
      const auto& v = std::get<std::vector<std::uint8_t>>(t.data);
      if (v.size() != n) throw ShapeError("tensor '" + t.name + "' payload does not match its shape");
      w.bytes(v.data(), v.size());
    }
  }
  return w.take();
}

std::vector<CheckpointTensor> decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  const auto magic = r.take(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) throw FormatError("bad_magic", "bad magic in checkpoint");
  const auto version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError("bad_version", "unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = r.u32();
  std::vector<CheckpointTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    const auto name_len = r.u16();
    const auto name = r.take(name_len);
    t.name.assign(name.begin(), name.end());
    const auto dtype = r.u8();
    const auto rank = r.u8();
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.u32());
    const auto n = element_count(t.shape);
    if (dtype == kF32) {
      const auto payload = r.take(n * sizeof(float));
      std::vector<float> v(n);
      std::memcpy(v.data(), payload.data(), payload.size());
      t.data = std::move(v);
    } else if (dtype == kU8) {
      const auto payload = r.take(n);
      t.data = std::vector<std::uint8_t>(payload.begin(), payload.end());
    } else {
      throw FormatError("bad_dtype", "unknown dtype tag " + std::to_string(dtype) + " for '" + t.name + "'");
    }
    out.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing_bytes", "trailing bytes after checkpoint tensors");
  return out;
}

std::vector<std::uint8_t> encode_params(const ParamSet& params) {
  std::vector<CheckpointTensor> tensors;
  for (const auto& t : params.tensors()) tensors.push_back({t.name, t.shape, t.values});
  return encode_checkpoint(tensors);
}

ParamSet decode_params(std::span<const std::uint8_t> bytes) {
  const auto tensors = decode_checkpoint(bytes);
  if (tensors.empty() || tensors.size() % 2 != 0) {
    throw FormatError("bad_layout", "parameter checkpoint must hold weight/bias pairs");
  }
  MlpSpec spec;
  for (std::size_t l = 0; l < tensors.size() / 2; ++l) {
    const auto& w = tensors[2 * l];
    if (w.name != weight_name(l) || w.shape.size() != 2) {
      throw FormatError("bad_layout", "expected 2-D '" + weight_name(l) + "', found '" + w.name + "'");
    }
    if (l == 0) spec.layer_sizes.push_back(w.shape[1]);
    if (spec.layer_sizes.back() != w.shape[1]) {
      throw FormatError("bad_layout", "'" + w.name + "' input dim does not chain");
    }
    spec.layer_sizes.push_back(w.shape[0]);
  }
  ParamSet params(spec);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto& dst = params.tensors()[i];
    const auto& src = tensors[i];
    if (src.name != dst.name || src.shape != dst.shape ||
        !std::holds_alternative<std::vector<float>>(src.data)) {
      throw FormatError("bad_layout", "unexpected tensor '" + src.name + "' in parameter checkpoint");
    }
    dst.values = std::get<std::vector<float>>(src.data);
  }
  return params;
}

std::vector<std::uint8_t> encode_mask(const Mask& mask) {
  std::vector<CheckpointTensor> tensors;
  for (const auto& t : mask.tensors()) tensors.push_back({t.name, t.shape, t.bits});
  return encode_checkpoint(tensors);
}

Mask decode_mask(std::span<const std::uint8_t> bytes) {
  Mask m;
  for (auto& t : decode_checkpoint(bytes)) {
    if (!std::holds_alternative<std::vector<std::uint8_t>>(t.data)) {
      throw FormatError("bad_layout", "mask tensor '" + t.name + "' is not u8");
    }
    m.set({t.name, t.shape, std::get<std::vector<std::uint8_t>>(std::move(t.data))});
  }
  return m;
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  write_bytes(tmp, bytes);
  std::filesystem::rename(tmp, path);
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
  write_file_atomic(path, encode_params(params));
}

ParamSet load_params(const std::filesystem::path& path) { return decode_params(read_bytes(path)); }

void save_mask(const std::filesystem::path& path, const Mask& mask) {
  write_file_atomic(path, encode_mask(mask));
}

Mask load_mask(const std::filesystem::path& path) { return decode_mask(read_bytes(path)); }

}  // namespace sdd
