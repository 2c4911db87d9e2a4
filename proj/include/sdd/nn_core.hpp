#pragma once

#include <vector>

#include <Eigen/Core>

#include "sdd/data_io.hpp"
#include "sdd/mask.hpp"
#include "sdd/params.hpp"

namespace sdd {

using MatrixD = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Metrics {
  double loss = 0.0;      // mean cross-entropy, nats
  double accuracy = 0.0;  // top-1, ties go to the lowest class index
  bool operator==(const Metrics&) const = default;
};

/// Per-tensor gradients aligned with ParamSet::tensors(). `raw` is dL/d(w*m)
/// without masking; `masked` is raw * mask and is what the optimizer uses.
struct Gradients {
  std::vector<std::vector<double>> raw;
  std::vector<std::vector<double>> masked;
};

struct LossAndGrads {
  Metrics metrics;
  Gradients grads;
};

/// Logits (rows x num_classes) of the masked network. `features` is row-major
/// rows x input_dim.
template <class T>
MatrixD forward(const BasicParamSet<T>& params, const Mask& mask,
                std::span<const float> features, std::size_t rows);

template <class T>
MatrixD forward(const BasicParamSet<T>& params, const Mask& mask, const MatrixD& features);

/// Mean softmax cross-entropy over the batch and its gradients. Throws
/// Divergence on a non-finite loss.
template <class T>
LossAndGrads loss_and_grads(const BasicParamSet<T>& params, const Mask& mask, const Batch& batch);

/// Full-dataset loss and accuracy, evaluated in fixed-size chunks in index
/// order so the result is bitwise reproducible.
template <class T>
Metrics evaluate(const BasicParamSet<T>& params, const Mask& mask, const Dataset& dataset);

/// Loss and accuracy for precomputed logits.
Metrics metrics_from_logits(const MatrixD& logits, std::span<const std::int32_t> labels);

/// Index of the largest entry of each row, lowest index on ties.
std::vector<std::size_t> argmax_rows(const MatrixD& logits);

}  // namespace sdd
