#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganlab/models.hpp"
#include "ganlab/optim.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

// Mean negative log of the target-class probability, with the same floor
// and zero-gradient clamping as log_floored.
inline Tensor cross_entropy(const Tensor& probs,
                            const std::vector<std::size_t>& targets,
                            double floor = kLogFloor,
                            std::size_t* floor_hits = nullptr) {
  if (probs.shape().size() != 2 || probs.rows() != targets.size()) {
    throw std::invalid_argument("cross_entropy: need probs (m,k) and m targets");
  }
  const std::size_t m = probs.rows(), k = probs.cols();
  double loss = 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (targets[i] >= k) {
      throw std::invalid_argument("cross_entropy: target class out of range");
    }
    const double p = probs.at(i, targets[i]);
    if (p < floor) ++hits;
    loss -= std::log(std::max(p, floor));
  }
  loss /= static_cast<double>(m);
  if (floor_hits != nullptr) *floor_hits += hits;
  auto pn = probs.node();
  auto tg = targets;
  return make_op({1}, {loss}, {probs},
                 [pn, tg, m, k, floor](detail::TensorNode& nd) {
                   pn->ensure_grad();
                   const double g = nd.grad[0] / static_cast<double>(m);
                   for (std::size_t i = 0; i < m; ++i) {
                     const double p = pn->data[i * k + tg[i]];
                     if (p >= floor) {
                       pn->grad[i * k + tg[i]] -= g / p;
                     }
                   }
                 });
}

inline std::vector<std::size_t> argmax_rows(const Tensor& t) {
  const std::size_t m = t.rows(), k = t.cols();
  std::vector<std::size_t> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j) {
      if (t.at(i, j) > t.at(i, best)) best = j;
    }
    out[i] = best;
  }
  return out;
}

inline double accuracy(const Tensor& probs,
                       const std::vector<std::size_t>& labels) {
  const auto pred = argmax_rows(probs);
  if (pred.size() != labels.size()) {
    throw std::invalid_argument("accuracy: label count mismatch");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == labels[i]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(pred.size());
}

struct TrainConfig {
  std::size_t steps = 680;
  std::size_t real_batch = 120;
  std::size_t per_gen_batch = 12;
  double beta = 0.02;
  std::size_t d_steps_per_g = 1;  // discriminator/classifier updates per G step
  AdamConfig adam;  // lr 2e-4, beta1 0.5, beta2 0.999
  enum class GenLoss { minimax, non_saturating } gen_loss = GenLoss::minimax;
  std::uint64_t seed = 1;
};

namespace detail {

inline void check_unit_interval(const Tensor& t, const char* who) {
  for (const double v : t.data()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument(std::string(who) +
                                  ": output outside [0,1] after flooring");
    }
  }
}

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (const double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  return {mean, std::sqrt(var)};
}

inline void check_finite(double loss, const char* which, std::size_t step) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error(std::string("training diverged: ") + which +
                             " is not finite at step " + std::to_string(step));
  }
}

}  // namespace detail

struct GanLosses {
  Tensor d_loss;
  Tensor g_loss;
};

// The two sides of the minimax objective over given discriminator outputs.
// The returned losses share the d_fake subgraph: backward through one
// consumes the other's tape, so a training step evaluates them on separate
// batches (as the alternating updates require anyway).
inline GanLosses gan_losses(
    const Tensor& d_real, const Tensor& d_fake,
    TrainConfig::GenLoss variant = TrainConfig::GenLoss::minimax,
    std::size_t* floor_hits = nullptr) {
  detail::check_unit_interval(d_real, "gan_losses");
  detail::check_unit_interval(d_fake, "gan_losses");
  GanLosses out;
  Tensor fake_term = mean_all(log_floored(one_minus(d_fake), kLogFloor, floor_hits));
  out.d_loss = scale(
      add(mean_all(log_floored(d_real, kLogFloor, floor_hits)), fake_term),
      -1.0);
  out.g_loss =
      variant == TrainConfig::GenLoss::minimax
          ? fake_term
          : scale(mean_all(log_floored(d_fake, kLogFloor, floor_hits)), -1.0);
  return out;
}

struct MganLosses {
  Tensor d_loss;
  Tensor g_loss;  // adversarial + beta x classifier term, per Eq-16 reading
  Tensor c_loss;  // beta x cross-entropy of generator labels
};

// All three loss terms evaluated on one real batch and one pooled mixture
// batch. Diagnostic form: the training loop stages the same terms across
// separate tapes so each optimizer consumes its own graph.
inline MganLosses mgan_losses(const MganModel& model, const Tensor& real,
                              const MixtureBatch& mixture, double beta,
                              TrainConfig::GenLoss variant =
                                  TrainConfig::GenLoss::minimax,
                              std::size_t* floor_hits = nullptr) {
  if (beta < 0.0) throw std::invalid_argument("mgan_losses: beta must be >= 0");
  Tensor fake = concat_rows_detached(mixture.parts);
  Tensor d_real = model.discriminator.forward(real);
  Tensor d_fake = model.discriminator.forward(fake);
  GanLosses gl = gan_losses(d_real, d_fake, variant, floor_hits);

  MganLosses out;
  out.d_loss = gl.d_loss;
  if (beta > 0.0) {
    Tensor c_probs = model.classifier.forward(fake);
    out.c_loss = scale(
        cross_entropy(c_probs, mixture.labels, kLogFloor, floor_hits), beta);
  } else {
    out.c_loss = Tensor::scalar(0.0);
  }
  out.g_loss = add(gl.g_loss, out.c_loss);
  return out;
}

struct MetricsRecord {
  std::size_t step = 0;
  double d_loss = 0.0;
  double g_loss = 0.0;
  double c_loss = 0.0;
  double mean_d_real = 0.0;
  double mean_d_fake = 0.0;
  // Spread of D over the real batch: D* = 1/(alpha+1), so dispersion here is
  // the trained-model estimate of non-constant alpha (the collapse signature).
  double collapse = 0.0;
  std::size_t floor_hits = 0;

  nlohmann::json to_json() const {
    return nlohmann::json{{"step", step},
                          {"d_loss", d_loss},
                          {"g_loss", g_loss},
                          {"c_loss", c_loss},
                          {"mean_d_real", mean_d_real},
                          {"mean_d_fake", mean_d_fake},
                          {"collapse", collapse},
                          {"floor_hits", floor_hits}};
  }
};

using BatchSampler = std::function<Tensor(std::size_t n, SeededRng& rng)>;
using MetricsSink = std::function<void(const MetricsRecord&)>;

struct TrainResult {
  std::vector<MetricsRecord> metrics;
  std::size_t total_floor_hits = 0;
};

// One optimizer round: discriminator ascent on real/fake separation, then
// the classifier on the same pooled fake batch, then all generators against
// a fresh tape. Shared trunk tensors are stepped by both the discriminator
// and classifier optimizers, in that order, each holding its own Adam state.
inline TrainResult train_mgan(MganModel& model, const TrainConfig& cfg,
                              const BatchSampler& real_sampler,
                              const MetricsSink& sink = nullptr) {
  Adam adam_d(model.discriminator_params(), cfg.adam);
  Adam adam_c(model.classifier_params(), cfg.adam);
  Adam adam_g(model.generator_params(), cfg.adam);

  SeededRng rng = SeededRng(cfg.seed).derive("train");
  const std::size_t kk = model.generators.size();
  const std::size_t fake_batch = kk * cfg.per_gen_batch;
  const double inv_k = 1.0 / static_cast<double>(kk);

  TrainResult result;
  result.metrics.reserve(cfg.steps);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    MetricsRecord rec;
    rec.step = step;
    std::size_t hits = 0;

    // Discriminator and classifier phases, d_steps_per_g rounds per G step;
    // the record keeps the last round's numbers.
    const std::size_t dc_rounds = std::max<std::size_t>(1, cfg.d_steps_per_g);
    for (std::size_t round = 0; round < dc_rounds; ++round) {
      Tensor real = real_sampler(cfg.real_batch, rng).detach();
      const MixtureBatch mix =
          sample_generator_mixture(model.generators, fake_batch, rng);
      Tensor fake = concat_rows_detached(mix.parts);

      adam_d.zero_grad();
      Tensor d_real = model.discriminator.forward(real);
      Tensor d_fake = model.discriminator.forward(fake);
      Tensor d_loss =
          scale(add(mean_all(log_floored(d_real, kLogFloor, &hits)),
                    mean_all(log_floored(one_minus(d_fake), kLogFloor, &hits))),
                -1.0);
      rec.d_loss = d_loss.value();
      detail::check_finite(rec.d_loss, "d_loss", step);
      const auto [mr, sr] = detail::mean_std(d_real.data());
      rec.mean_d_real = mr;
      rec.collapse = sr;
      rec.mean_d_fake = detail::mean_std(d_fake.data()).first;
      backward(d_loss);
      adam_d.step();

      // Classifier update on the pooled batch the discriminator just saw.
      if (cfg.beta > 0.0) {
        adam_c.zero_grad();
        Tensor c_probs = model.classifier.forward(fake);
        Tensor c_loss = scale(
            cross_entropy(c_probs, mix.labels, kLogFloor, &hits), cfg.beta);
        rec.c_loss = c_loss.value();
        detail::check_finite(rec.c_loss, "c_loss", step);
        backward(c_loss);
        adam_c.step();
      }
    }

    // Generator phase on a fresh tape, one sub-batch per generator.
    adam_g.zero_grad();
    const MixtureBatch fresh =
        sample_generator_mixture(model.generators, fake_batch, rng);
    Tensor g_loss = Tensor::scalar(0.0);
    for (std::size_t k = 0; k < kk; ++k) {
      Tensor dk = model.discriminator.forward(fresh.parts[k]);
      Tensor adv =
          cfg.gen_loss == TrainConfig::GenLoss::minimax
              ? mean_all(log_floored(one_minus(dk), kLogFloor, &hits))
              : scale(mean_all(log_floored(dk, kLogFloor, &hits)), -1.0);
      g_loss = add(g_loss, adv);
      if (cfg.beta > 0.0) {
        Tensor ck = model.classifier.forward(fresh.parts[k]);
        const std::vector<std::size_t> tk(cfg.per_gen_batch, k);
        g_loss = add(g_loss,
                     scale(cross_entropy(ck, tk, kLogFloor, &hits), cfg.beta));
      }
    }
    g_loss = scale(g_loss, inv_k);
    rec.g_loss = g_loss.value();
    detail::check_finite(rec.g_loss, "g_loss", step);
    backward(g_loss);
    adam_g.step();

    rec.floor_hits = hits;
    result.total_floor_hits += hits;
    if (sink) sink(rec);
    result.metrics.push_back(std::move(rec));
  }
  return result;
}

// Discriminator-only fit against a fixed pair of samplers; used when the
// opposing density is known in closed form rather than generated.
inline TrainResult fit_discriminator(DecomposedNet& disc,
                                     const TrainConfig& cfg,
                                     const BatchSampler& real_sampler,
                                     const BatchSampler& fake_sampler,
                                     const MetricsSink& sink = nullptr) {
  Adam adam_d(disc.params(), cfg.adam);
  SeededRng rng = SeededRng(cfg.seed).derive("train");

  TrainResult result;
  result.metrics.reserve(cfg.steps);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    MetricsRecord rec;
    rec.step = step;
    std::size_t hits = 0;

    Tensor real = real_sampler(cfg.real_batch, rng).detach();
    Tensor fake = fake_sampler(cfg.real_batch, rng).detach();
    adam_d.zero_grad();
    Tensor d_real = disc.forward(real);
    Tensor d_fake = disc.forward(fake);
    Tensor d_loss =
        scale(add(mean_all(log_floored(d_real, kLogFloor, &hits)),
                  mean_all(log_floored(one_minus(d_fake), kLogFloor, &hits))),
              -1.0);
    rec.d_loss = d_loss.value();
    detail::check_finite(rec.d_loss, "d_loss", step);
    const auto [mr, sr] = detail::mean_std(d_real.data());
    rec.mean_d_real = mr;
    rec.collapse = sr;
    rec.mean_d_fake = detail::mean_std(d_fake.data()).first;
    backward(d_loss);
    adam_d.step();

    rec.floor_hits = hits;
    result.total_floor_hits += hits;
    if (sink) sink(rec);
    result.metrics.push_back(std::move(rec));
  }
  return result;
}

}  // namespace ganlab
