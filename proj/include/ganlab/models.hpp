#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

struct MlpSpec {
  std::size_t in_dim = 2;
  std::vector<std::size_t> hidden = {128, 128};
  std::size_t out_dim = 32;
  enum class Output { linear, tanh } output = Output::linear;
  double leak = 0.2;
  bool bias = true;
  double init_std = 0.02;
};

struct DenseLayer {
  Tensor w;  // out x in
  Tensor b;  // out, absent when bias-free
  bool has_bias = true;
};

// Fully-connected stack: LeakyReLU between layers, configurable activation
// on the last. Layer tensors are shared_ptr-backed, so assigning one
// network's layer into another aliases the parameter.
class Mlp {
 public:
  Mlp() = default;

  Mlp(const MlpSpec& spec, SeededRng& rng) : spec_(spec) {
    std::vector<std::size_t> dims;
    dims.push_back(spec.in_dim);
    for (const auto h : spec.hidden) dims.push_back(h);
    dims.push_back(spec.out_dim);
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
      DenseLayer layer;
      layer.w = Tensor::randn({dims[i + 1], dims[i]}, rng, 0.0, spec.init_std);
      layer.has_bias = spec.bias;
      if (spec.bias) {
        layer.b = Tensor::zeros({dims[i + 1]}, true);
      }
      layers_.push_back(std::move(layer));
    }
  }

  Tensor forward(const Tensor& x) const {
    Tensor h = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      const auto& l = layers_[i];
      h = l.has_bias ? linear(h, l.w, l.b) : linear(h, l.w);
      if (i + 1 < layers_.size()) {
        h = leaky_relu(h, spec_.leak);
      } else if (spec_.output == MlpSpec::Output::tanh) {
        h = tanh_act(h);
      }
    }
    return h;
  }

  std::size_t depth() const { return layers_.size(); }
  DenseLayer& layer(std::size_t i) { return layers_.at(i); }
  const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
  const MlpSpec& spec() const { return spec_; }

  std::vector<Tensor> params() const {
    std::vector<Tensor> out;
    for (const auto& l : layers_) {
      out.push_back(l.w);
      if (l.has_bias) out.push_back(l.b);
    }
    return out;
  }

 private:
  MlpSpec spec_;
  std::vector<DenseLayer> layers_;
};

// Feature extractor plus a linear head, kept separate so the head's row and
// null spaces can be analyzed against the features feeding it.
struct DecomposedNet {
  enum class Head { sigmoid_head, softmax_head };

  Mlp extractor;
  Tensor head_w;                 // k x d
  std::optional<Tensor> head_b;  // length k
  Head head = Head::sigmoid_head;

  Tensor features(const Tensor& x) const { return extractor.forward(x); }

  Tensor head_logits(const Tensor& f) const {
    return head_b ? linear(f, head_w, *head_b) : linear(f, head_w);
  }

  Tensor forward(const Tensor& x) const {
    const Tensor z = head_logits(features(x));
    return head == Head::sigmoid_head ? sigmoid(z) : softmax_rows(z);
  }

  std::vector<Tensor> params() const {
    std::vector<Tensor> out = extractor.params();
    out.push_back(head_w);
    if (head_b) out.push_back(*head_b);
    return out;
  }
};

class GeneratorBank {
 public:
  GeneratorBank() = default;
  GeneratorBank(std::vector<Mlp> gens, std::size_t z_dim)
      : gens_(std::move(gens)), z_dim_(z_dim) {}

  std::size_t size() const { return gens_.size(); }
  std::size_t z_dim() const { return z_dim_; }
  Mlp& generator(std::size_t k) { return gens_.at(k); }
  const Mlp& generator(std::size_t k) const { return gens_.at(k); }

  // n samples from generator k, taped through its parameters.
  Tensor sample(std::size_t k, std::size_t n, SeededRng& rng) const {
    Tensor z({n, z_dim_}, rng.normal_vector(n * z_dim_));
    return gens_.at(k).forward(z);
  }

  std::vector<Tensor> params() const {
    std::vector<Tensor> out;
    for (const auto& g : gens_) {
      auto p = g.params();
      out.insert(out.end(), p.begin(), p.end());
    }
    return out;
  }

 private:
  std::vector<Mlp> gens_;
  std::size_t z_dim_ = 2;
};

struct MganConfig {
  std::size_t k_generators = 10;
  std::size_t z_dim = 2;
  std::size_t data_dim = 2;
  std::vector<std::size_t> gen_hidden = {128, 128};
  std::vector<std::size_t> trunk_hidden = {128, 128};
  std::size_t feature_dim = 32;
  std::size_t shares_removed = 0;  // trailing trunk layers NOT shared
  double leak = 0.2;
  double init_std = 0.02;

  std::size_t trunk_depth() const { return trunk_hidden.size() + 1; }
  std::size_t shared_layers() const { return trunk_depth() - shares_removed; }
};

// Generator bank plus discriminator and classifier whose extractor trunks
// alias their first shared_layers() parameter tensors. The discriminator
// head is bias-free (one sigmoid unit); the classifier head is affine with
// one softmax unit per generator.
struct MganModel {
  MganConfig cfg;
  GeneratorBank generators;
  DecomposedNet discriminator;
  DecomposedNet classifier;

  std::vector<Tensor> generator_params() const { return generators.params(); }
  std::vector<Tensor> discriminator_params() const {
    return discriminator.params();
  }
  std::vector<Tensor> classifier_params() const { return classifier.params(); }

  bool trunk_layer_shared(std::size_t i) const {
    return discriminator.extractor.layer(i).w.same_node(
        classifier.extractor.layer(i).w);
  }
};

// Deterministic construction: every component draws from its own stream
// derived from the base seed, so changing one component's width or count
// leaves the others' initial weights untouched.
inline MganModel build_mgan(const MganConfig& cfg, std::uint64_t seed) {
  if (cfg.shares_removed > cfg.trunk_depth()) {
    throw std::invalid_argument(
        "build_mgan: shares_removed exceeds trunk depth " +
        std::to_string(cfg.trunk_depth()));
  }
  if (cfg.k_generators == 0) {
    throw std::invalid_argument("build_mgan: need at least one generator");
  }
  MganModel model;
  model.cfg = cfg;
  SeededRng root(seed);

  MlpSpec gen_spec;
  gen_spec.in_dim = cfg.z_dim;
  gen_spec.hidden = cfg.gen_hidden;
  gen_spec.out_dim = cfg.data_dim;
  gen_spec.output = MlpSpec::Output::tanh;
  gen_spec.leak = cfg.leak;
  gen_spec.init_std = cfg.init_std;
  std::vector<Mlp> gens;
  for (std::size_t k = 0; k < cfg.k_generators; ++k) {
    SeededRng r = root.derive("gen", k);
    gens.emplace_back(gen_spec, r);
  }
  model.generators = GeneratorBank(std::move(gens), cfg.z_dim);

  MlpSpec trunk_spec;
  trunk_spec.in_dim = cfg.data_dim;
  trunk_spec.hidden = cfg.trunk_hidden;
  trunk_spec.out_dim = cfg.feature_dim;
  trunk_spec.output = MlpSpec::Output::linear;
  trunk_spec.leak = cfg.leak;
  trunk_spec.init_std = cfg.init_std;

  SeededRng rd = root.derive("disc");
  model.discriminator.extractor = Mlp(trunk_spec, rd);
  model.discriminator.head_w =
      Tensor::randn({1, cfg.feature_dim}, rd, 0.0, cfg.init_std);
  model.discriminator.head = DecomposedNet::Head::sigmoid_head;

  SeededRng rc = root.derive("cls");
  model.classifier.extractor = Mlp(trunk_spec, rc);
  model.classifier.head_w =
      Tensor::randn({cfg.k_generators, cfg.feature_dim}, rc, 0.0, cfg.init_std);
  model.classifier.head_b = Tensor::zeros({cfg.k_generators}, true);
  model.classifier.head = DecomposedNet::Head::softmax_head;

  for (std::size_t i = 0; i < cfg.shared_layers(); ++i) {
    model.classifier.extractor.layer(i) = model.discriminator.extractor.layer(i);
  }
  return model;
}

// Everything the decomposed forward pass produces, so the geometry side can
// look at features and logits rather than only the squashed output.
struct ForwardDecomposed {
  Tensor features;  // f(x)
  Tensor logits;    // A f(x) (+ b for the classifier)
  Tensor probs;     // sigmoid or row softmax of the logits
};

inline ForwardDecomposed forward_discriminator(const DecomposedNet& net,
                                               const Tensor& x) {
  if (net.head != DecomposedNet::Head::sigmoid_head) {
    throw std::invalid_argument("forward_discriminator: not a sigmoid head");
  }
  ForwardDecomposed out;
  out.features = net.features(x);
  out.logits = net.head_logits(out.features);
  out.probs = sigmoid(out.logits);
  return out;
}

inline ForwardDecomposed forward_classifier(const DecomposedNet& net,
                                            const Tensor& x) {
  if (net.head != DecomposedNet::Head::softmax_head) {
    throw std::invalid_argument("forward_classifier: not a softmax head");
  }
  ForwardDecomposed out;
  out.features = net.features(x);
  out.logits = net.head_logits(out.features);
  out.probs = softmax_rows(out.logits);
  return out;
}

// Stratified mixture draw: exactly batch/K samples from each generator, in
// generator order, each sub-batch taped through its own parameters. Equal
// sub-batch sizes keep the mean of per-part losses equal to the pooled-batch
// loss.
struct MixtureBatch {
  std::vector<Tensor> parts;        // one (batch/K x data_dim) block per generator
  std::vector<std::size_t> labels;  // generator id per pooled row
};

inline MixtureBatch sample_generator_mixture(const GeneratorBank& bank,
                                             std::size_t batch,
                                             SeededRng& rng) {
  const std::size_t kk = bank.size();
  if (kk == 0 || batch == 0 || batch % kk != 0) {
    throw std::invalid_argument(
        "sample_generator_mixture: batch must be a positive multiple of K");
  }
  const std::size_t per_gen = batch / kk;
  MixtureBatch out;
  out.parts.reserve(kk);
  out.labels.reserve(batch);
  for (std::size_t k = 0; k < kk; ++k) {
    out.parts.push_back(bank.sample(k, per_gen, rng));
    out.labels.insert(out.labels.end(), per_gen, k);
  }
  return out;
}

// Pool sub-batches into one untaped leaf, preserving generator order.
inline Tensor concat_rows_detached(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows_detached: empty");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw std::invalid_argument("concat_rows_detached: column mismatch");
    }
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  for (const auto& p : parts) {
    data.insert(data.end(), p.data().begin(), p.data().end());
  }
  return Tensor({rows, cols}, std::move(data));
}

}  // namespace ganlab
