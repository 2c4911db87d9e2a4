#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdd/errors.hpp"

namespace sdd {

/// Layer widths, input first and class count last. Hidden layers use ReLU;
/// the last affine map feeds the loss directly.
struct MlpSpec {
  std::vector<std::size_t> layer_sizes;

  std::size_t num_layers() const { return layer_sizes.empty() ? 0 : layer_sizes.size() - 1; }
  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t num_classes() const { return layer_sizes.back(); }
  std::size_t num_weights() const;
  std::size_t num_params() const;
  void validate() const;

  static MlpSpec lenet_300_100() { return {{784, 300, 100, 10}}; }
  bool operator==(const MlpSpec&) const = default;
};

std::string weight_name(std::size_t layer);
std::string bias_name(std::size_t layer);

template <class T>
struct BasicTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<T> values;

  std::size_t size() const { return values.size(); }
  bool operator==(const BasicTensor&) const = default;
};

/// Named parameter tensors of an MLP in the fixed order
/// fc1.weight, fc1.bias, fc2.weight, fc2.bias, ...
/// Weights are out_dim x in_dim row-major.
template <class T>
class BasicParamSet {
 public:
  BasicParamSet() = default;

  /// Zero-filled parameters shaped by `spec`.
  explicit BasicParamSet(MlpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    for (std::size_t l = 0; l < spec_.num_layers(); ++l) {
      const auto in = spec_.layer_sizes[l];
      const auto out = spec_.layer_sizes[l + 1];
      tensors_.push_back({weight_name(l), {out, in}, std::vector<T>(out * in, T{0})});
      tensors_.push_back({bias_name(l), {out}, std::vector<T>(out, T{0})});
    }
  }

  const MlpSpec& spec() const { return spec_; }
  std::size_t num_layers() const { return spec_.num_layers(); }

  BasicTensor<T>& weight(std::size_t layer) { return tensors_.at(2 * layer); }
  const BasicTensor<T>& weight(std::size_t layer) const { return tensors_.at(2 * layer); }
  BasicTensor<T>& bias(std::size_t layer) { return tensors_.at(2 * layer + 1); }
  const BasicTensor<T>& bias(std::size_t layer) const { return tensors_.at(2 * layer + 1); }

  std::span<BasicTensor<T>> tensors() { return tensors_; }
  std::span<const BasicTensor<T>> tensors() const { return tensors_; }

  static bool is_weight_index(std::size_t tensor_index) { return tensor_index % 2 == 0; }

  const BasicTensor<T>* find(std::string_view name) const {
    for (const auto& t : tensors_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
  BasicTensor<T>* find(std::string_view name) {
    for (auto& t : tensors_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  template <class U>
  BasicParamSet<U> cast() const {
    BasicParamSet<U> out(spec_);
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      auto& dst = out.tensors()[i].values;
      const auto& src = tensors_[i].values;
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
    }
    return out;
  }

  bool operator==(const BasicParamSet&) const = default;

 private:
  MlpSpec spec_;
  std::vector<BasicTensor<T>> tensors_;
};

using Tensor = BasicTensor<float>;
using ParamSet = BasicParamSet<float>;
using ParamSetF64 = BasicParamSet<double>;

/// Kaiming-normal weights, N(0, 2 / fan_in), and zero biases.
ParamSet init_params(const MlpSpec& spec, std::uint64_t seed);

}  // namespace sdd
