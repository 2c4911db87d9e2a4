#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sdd/params.hpp"

namespace sdd {

/// Sorted names of the weight tensors eligible for pruning.
using PrunableScope = std::vector<std::string>;

/// Every weight tensor except the output layer's; biases never.
PrunableScope default_scope(const MlpSpec& spec);

struct MaskTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<std::uint8_t> bits;  // 0 or 1

  std::size_t size() const { return bits.size(); }
  bool operator==(const MaskTensor&) const = default;
};

/// Binary masks over the prunable tensors, kept sorted by tensor name.
/// Tensors without an entry are treated as all-ones.
class Mask {
 public:
  Mask() = default;

  static Mask all_ones(const MlpSpec& spec, const PrunableScope& scope);

  const MaskTensor* find(std::string_view name) const;
  MaskTensor* find(std::string_view name);
  std::vector<MaskTensor>& tensors() { return tensors_; }
  const std::vector<MaskTensor>& tensors() const { return tensors_; }

  /// Inserts or replaces, keeping name order. Entries must be 0/1.
  void set(MaskTensor t);

  std::size_t surviving() const;
  std::size_t total() const;
  PrunableScope scope() const;
  bool operator==(const Mask&) const = default;

 private:
  std::vector<MaskTensor> tensors_;
};

/// Zeroes masked coordinates in place.
template <class T>
void apply_mask(BasicParamSet<T>& params, const Mask& mask) {
  for (const auto& m : mask.tensors()) {
    auto* t = params.find(m.name);
    if (t == nullptr || t->values.size() != m.bits.size()) {
      throw ShapeError("mask tensor '" + m.name + "' does not match parameters");
    }
    for (std::size_t i = 0; i < m.bits.size(); ++i) {
      if (!m.bits[i]) t->values[i] = T{0};
    }
  }
}

}  // namespace sdd
