#include "sdd/nn_core.hpp"

#include <algorithm>
#include <cmath>

#include "sdd/rng.hpp"

namespace sdd {

std::size_t MlpSpec::num_weights() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) n += layer_sizes[l] * layer_sizes[l + 1];
  return n;
}

std::size_t MlpSpec::num_params() const {
  std::size_t n = num_weights();
  for (std::size_t l = 1; l < layer_sizes.size(); ++l) n += layer_sizes[l];
  return n;
}

void MlpSpec::validate() const {
  if (layer_sizes.size() < 2) throw InvalidArgument("MlpSpec needs at least input and output sizes");
  for (auto s : layer_sizes) {
    if (s < 1) throw InvalidArgument("MlpSpec layer sizes must be >= 1");
  }
}

std::string weight_name(std::size_t layer) { return "fc" + std::to_string(layer + 1) + ".weight"; }
std::string bias_name(std::size_t layer) { return "fc" + std::to_string(layer + 1) + ".bias"; }

ParamSet init_params(const MlpSpec& spec, std::uint64_t seed) {
  ParamSet params(spec);
  Rng rng(derive_seed(seed, Stream::kInit));
  for (std::size_t l = 0; l < params.num_layers(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(spec.layer_sizes[l]));
    for (auto& w : params.weight(l).values) w = static_cast<float>(stddev * rng.normal());
  }
  return params;
}

namespace {

constexpr std::size_t kEvalChunk = 1024;

struct Layers {
  std::vector<MatrixD> weights;            // masked, out x in
  std::vector<Eigen::RowVectorXd> biases;  // 1 x out
  std::vector<const MaskTensor*> masks;    // null when unmasked
};

template <class T>
Layers effective_layers(const BasicParamSet<T>& params, const Mask& mask) {
  Layers layers;
  const auto n = params.num_layers();
  layers.weights.reserve(n);
  layers.biases.reserve(n);
  for (std::size_t l = 0; l < n; ++l) {
    const auto& w = params.weight(l);
    const auto out = w.shape[0];
    const auto in = w.shape[1];
    const MaskTensor* m = mask.find(w.name);
    if (m != nullptr && m->bits.size() != w.values.size()) {
      throw ShapeError("layer " + std::to_string(l + 1) + " (" + w.name + "): mask has " +
                       std::to_string(m->bits.size()) + " entries, weight has " +
                       std::to_string(w.values.size()));
    }
    MatrixD we(out, in);
    double* dst = we.data();
    if (m == nullptr) {
      for (std::size_t i = 0; i < w.values.size(); ++i) dst[i] = static_cast<double>(w.values[i]);
    } else {
      for (std::size_t i = 0; i < w.values.size(); ++i) {
        dst[i] = m->bits[i] ? static_cast<double>(w.values[i]) : 0.0;
      }
    }
    const auto& b = params.bias(l);
    Eigen::RowVectorXd bv(out);
    for (std::size_t i = 0; i < out; ++i) bv[static_cast<Eigen::Index>(i)] = static_cast<double>(b.values[i]);
    layers.weights.push_back(std::move(we));
    layers.biases.push_back(std::move(bv));
    layers.masks.push_back(m);
  }
  return layers;
}

MatrixD to_matrix(std::span<const float> features, std::size_t rows, std::size_t cols) {
  if (features.size() != rows * cols) {
    throw ShapeError("feature buffer holds " + std::to_string(features.size()) + " values, expected " +
                     std::to_string(rows) + " x " + std::to_string(cols));
  }
  MatrixD x(rows, cols);
  double* dst = x.data();
  for (std::size_t i = 0; i < features.size(); ++i) dst[i] = static_cast<double>(features[i]);
  return x;
}

void check_input(const Layers& layers, Eigen::Index cols) {
  if (layers.weights.front().cols() != cols) {
    throw ShapeError("layer 1 (" + weight_name(0) + ") expects input dim " +
                     std::to_string(layers.weights.front().cols()) + ", got " + std::to_string(cols));
  }
}

MatrixD run_forward(const Layers& layers, MatrixD x, std::vector<MatrixD>* activations,
                    std::vector<MatrixD>* preacts) {
  check_input(layers, x.cols());
  const auto n = layers.weights.size();
  if (activations) activations->push_back(x);
  for (std::size_t l = 0; l < n; ++l) {
    MatrixD z = x * layers.weights[l].transpose();
    z.rowwise() += layers.biases[l];
    if (l + 1 == n) return z;
    if (preacts) preacts->push_back(z);
    x = z.cwiseMax(0.0);
    if (activations) activations->push_back(x);
  }
  return x;
}

}  // namespace

std::vector<std::size_t> argmax_rows(const MatrixD& logits) {
  std::vector<std::size_t> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c) {
      if (logits(r, c) > logits(r, best)) best = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<std::size_t>(best);
  }
  return out;
}

namespace {

// Per-row cross-entropy summed in row order, plus correct-prediction count.
struct LossSum {
  double loss = 0.0;
  std::size_t correct = 0;
};

LossSum sum_losses(const MatrixD& logits, std::span<const std::int32_t> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw ShapeError("logits rows do not match label count");
  }
  LossSum s;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const auto y = static_cast<Eigen::Index>(labels[static_cast<std::size_t>(r)]);
    if (y < 0 || y >= logits.cols()) throw ShapeError("label outside the output layer's range");
    const double mx = logits.row(r).maxCoeff();
    double z = 0.0;
    Eigen::Index best = 0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      z += std::exp(logits(r, c) - mx);
      if (logits(r, c) > logits(r, best)) best = c;
    }
    s.loss += std::log(z) + mx - logits(r, y);
    if (best == y) ++s.correct;
  }
  return s;
}

}  // namespace

Metrics metrics_from_logits(const MatrixD& logits, std::span<const std::int32_t> labels) {
  const auto s = sum_losses(logits, labels);
  const auto n = static_cast<double>(labels.size());
  return {s.loss / n, static_cast<double>(s.correct) / n};
}

template <class T>
MatrixD forward(const BasicParamSet<T>& params, const Mask& mask, const MatrixD& features) {
  const auto layers = effective_layers(params, mask);
  return run_forward(layers, features, nullptr, nullptr);
}

template <class T>
MatrixD forward(const BasicParamSet<T>& params, const Mask& mask, std::span<const float> features,
                std::size_t rows) {
  const auto layers = effective_layers(params, mask);
  const auto cols = static_cast<std::size_t>(layers.weights.front().cols());
  if (rows == 0 || features.size() % rows != 0 || features.size() / rows != cols) {
    throw ShapeError("layer 1 (" + weight_name(0) + ") expects input dim " + std::to_string(cols) +
                     ", feature buffer does not match");
  }
  return run_forward(layers, to_matrix(features, rows, cols), nullptr, nullptr);
}

template <class T>
LossAndGrads loss_and_grads(const BasicParamSet<T>& params, const Mask& mask, const Batch& batch) {
  const auto batch_size = batch.size();
  if (batch_size == 0) throw InvalidArgument("loss_and_grads: empty batch");
  const auto layers = effective_layers(params, mask);
  const auto n_layers = layers.weights.size();

  std::vector<MatrixD> acts;
  std::vector<MatrixD> pre;
  acts.reserve(n_layers);
  pre.reserve(n_layers);
  const MatrixD logits =
      run_forward(layers, to_matrix(batch.features, batch_size, batch.input_dim), &acts, &pre);

  const auto s = sum_losses(logits, batch.labels);
  const double inv_b = 1.0 / static_cast<double>(batch_size);
  LossAndGrads out;
  out.metrics = {s.loss * inv_b, static_cast<double>(s.correct) * inv_b};
  if (!std::isfinite(out.metrics.loss)) throw Divergence("non-finite loss");

  // dL/dz for the output layer: (softmax - one_hot) / B.
  MatrixD delta(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    double z = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      delta(r, c) = std::exp(logits(r, c) - mx);
      z += delta(r, c);
    }
    for (Eigen::Index c = 0; c < logits.cols(); ++c) delta(r, c) /= z;
    delta(r, batch.labels[static_cast<std::size_t>(r)]) -= 1.0;
  }
  delta *= inv_b;

  const auto n_tensors = params.tensors().size();
  out.grads.raw.resize(n_tensors);
  out.grads.masked.resize(n_tensors);
  for (std::size_t li = n_layers; li-- > 0;) {
    const MatrixD dw = delta.transpose() * acts[li];
    const Eigen::RowVectorXd db = delta.colwise().sum();

    auto& raw_w = out.grads.raw[2 * li];
    raw_w.assign(dw.data(), dw.data() + dw.size());
    auto& masked_w = out.grads.masked[2 * li];
    masked_w = raw_w;
    if (const MaskTensor* m = layers.masks[li]) {
      for (std::size_t i = 0; i < masked_w.size(); ++i) {
        if (!m->bits[i]) masked_w[i] = 0.0;
      }
    }
    out.grads.raw[2 * li + 1].assign(db.data(), db.data() + db.size());
    out.grads.masked[2 * li + 1] = out.grads.raw[2 * li + 1];

    if (li > 0) {
      MatrixD da = delta * layers.weights[li];
      delta = da.cwiseProduct((pre[li - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return out;
}

template <class T>
Metrics evaluate(const BasicParamSet<T>& params, const Mask& mask, const Dataset& dataset) {
  const auto n = dataset.size();
  if (n == 0) throw InvalidArgument("evaluate: empty dataset");
  const auto layers = effective_layers(params, mask);
  LossSum total;
  for (std::size_t start = 0; start < n; start += kEvalChunk) {
    const auto rows = std::min(kEvalChunk, n - start);
    const std::span<const float> feats(dataset.features.data() + start * dataset.input_dim,
                                       rows * dataset.input_dim);
    const MatrixD logits =
        run_forward(layers, to_matrix(feats, rows, dataset.input_dim), nullptr, nullptr);
    const auto s = sum_losses(logits, std::span(dataset.labels).subspan(start, rows));
    total.loss += s.loss;
    total.correct += s.correct;
  }
  return {total.loss / static_cast<double>(n),
          static_cast<double>(total.correct) / static_cast<double>(n)};
}

template MatrixD forward(const ParamSet&, const Mask&, const MatrixD&);
template MatrixD forward(const ParamSetF64&, const Mask&, const MatrixD&);
template MatrixD forward(const ParamSet&, const Mask&, std::span<const float>, std::size_t);
template MatrixD forward(const ParamSetF64&, const Mask&, std::span<const float>, std::size_t);
template LossAndGrads loss_and_grads(const ParamSet&, const Mask&, const Batch&);
template LossAndGrads loss_and_grads(const ParamSetF64&, const Mask&, const Batch&);
template Metrics evaluate(const ParamSet&, const Mask&, const Dataset&);
template Metrics evaluate(const ParamSetF64&, const Mask&, const Dataset&);

}  // namespace sdd
