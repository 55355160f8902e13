#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ganlab/checkpoint.hpp"
#include "ganlab/dataset.hpp"
#include "ganlab/geometry.hpp"
#include "ganlab/linalg.hpp"
#include "ganlab/models.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/simplex.hpp"
#include "ganlab/tensor.hpp"
#include "ganlab/training.hpp"
#include "ganlab/transfer.hpp"

// Runtime invariant suites for the `check` command: each check re-verifies
// one of the library's contracts on randomized inputs, so an installation or
// a toolchain change can be validated without the development test suite.

namespace ganlab::selfcheck {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

using CheckList = std::vector<CheckResult>;

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::runtime_error(msg);
}

inline void run(CheckList& out, const std::string& name,
                const std::function<void()>& fn) {
  try {
    fn();
    out.push_back({name, true, ""});
  } catch (const std::exception& e) {
    out.push_back({name, false, e.what()});
  }
}

inline DiscreteDensity random_density(SeededRng& rng, std::size_t n,
                                      bool allow_zeros) {
  std::vector<double> p(n);
  for (auto& v : p) v = std::abs(rng.normal()) + 1e-3;
  if (allow_zeros && n > 1) {
    const std::size_t kill = rng.index(n);
    if (rng.uniform() < 0.5) p[kill] = 0.0;
  }
  double sum = 0.0;
  for (const double v : p) sum += v;
  bool any = false;
  for (const double v : p) any = any || v > 0.0;
  if (!any) p[0] = sum = 1.0;
  for (auto& v : p) v /= sum;
  return DiscreteDensity::from_probs(std::move(p));
}

}  // namespace detail

inline void numerics_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "numerics.gradient-vs-finite-differences", [seed] {
    SeededRng rng(seed);
    Tensor x({4, 3}, rng.normal_vector(12));
    Tensor w1 = Tensor::randn({5, 3}, rng, 0.0, 0.5);
    Tensor b1 = Tensor::zeros({5}, true);
    Tensor w2 = Tensor::randn({1, 5}, rng, 0.0, 0.5);
    auto loss_fn = [&] {
      return mean_all(sigmoid(linear(tanh_act(linear(x, w1, b1)), w2)));
    };
    Tensor loss = loss_fn();
    w1.zero_grad();
    w2.zero_grad();
    b1.zero_grad();
    backward(loss);
    const double h = 1e-5;
    double worst = 0.0;
    for (Tensor* p : {&w1, &b1, &w2}) {
      const auto grad = p->grad();
      for (std::size_t i = 0; i < p->size(); ++i) {
        const double keep = p->data()[i];
        p->data()[i] = keep + h;
        const double up = loss_fn().value();
        p->data()[i] = keep - h;
        const double dn = loss_fn().value();
        p->data()[i] = keep;
        const double fd = (up - dn) / (2.0 * h);
        const double rel = std::abs(grad[i] - fd) / std::max(std::abs(fd), 1e-6);
        worst = std::max(worst, rel);
      }
    }
    detail::require(worst < 1e-4, "finite-difference mismatch " +
                                      std::to_string(worst));
  });

  detail::run(out, "numerics.row-null-basis-property", [seed] {
    SeededRng rng(seed + 1);
    Matrix a(4, 7);
    for (auto& v : a.data) v = rng.normal();
    const SubspaceBases b = row_null_basis(a);
    detail::require(b.rank + b.null_basis.rows == a.cols,
                    "rank + null dimension must equal the column count");
    double a_norm = 0.0;
    for (const double v : a.data) a_norm += v * v;
    a_norm = std::sqrt(a_norm);
    for (std::size_t i = 0; i < a.rows; ++i) {
      std::vector<double> row(a.row(i), a.row(i) + a.cols);
      const auto proj = project_onto(b.row_basis, row);
      for (std::size_t j = 0; j < a.cols; ++j) {
        detail::require(std::abs(proj[j] - row[j]) <= 1e-8 * (1.0 + a_norm),
                        "row fails to reconstruct from the row basis");
      }
    }
    for (std::size_t j = 0; j < b.null_basis.rows; ++j) {
      std::vector<double> nv(b.null_basis.row(j),
                             b.null_basis.row(j) + a.cols);
      const auto img = matvec(a, nv);
      detail::require(norm2(img) <= 1e-8 * a_norm,
                      "null-basis vector is not annihilated");
    }
  });

  detail::run(out, "numerics.rng-determinism", [seed] {
    SeededRng a(seed), b(seed);
    for (int i = 0; i < 100; ++i) {
      detail::require(a.next_u64() == b.next_u64(), "u64 streams diverge");
    }
    SeededRng c(seed), d(seed);
    for (int i = 0; i < 100; ++i) {
      detail::require(c.normal() == d.normal(), "normal streams diverge");
    }
  });
}

inline void simplex_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "simplex.value-and-dstar-identities", [seed] {
    SeededRng rng(seed + 2);
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 2 + rng.index(5);
      const auto p_r = detail::random_density(rng, n, true);
      const auto p_g = detail::random_density(rng, n, true);
      const GanValue v = gan_value(p_r, p_g);  // checks Eq-6/Eq-7 agreement
      detail::require(v.direct >= -std::log(4.0) - 1e-12,
                      "value fell below -log 4");
      alpha_ratio(p_r, p_g);  // checks D* = 1/(alpha+1)
    }
    const auto p = detail::random_density(rng, 4, false);
    const GanValue eq = gan_value(p, p);
    detail::require(std::abs(eq.direct + std::log(4.0)) <= 1e-12,
                    "equal densities must attain -log 4");
  });

  detail::run(out, "simplex.collapse-and-invariance-laws", [seed] {
    SeededRng rng(seed + 3);
    for (int rep = 0; rep < 50; ++rep) {
      const std::size_t n = 2 + rng.index(4);
      const auto p_r = detail::random_density(rng, n, false);
      const auto p_g = detail::random_density(rng, n, true);
      const double cm = collapse_metric(p_r, p_g);
      const PointValues ds = optimal_discriminator(p_r, p_g);
      double lo = 1.0, hi = 0.0;
      for (std::size_t k = 0; k < ds.indices.size(); ++k) {
        if (p_r.probs[ds.indices[k]] > 0.0) {
          lo = std::min(lo, ds.values[k]);
          hi = std::max(hi, ds.values[k]);
        }
      }
      const bool d_const = hi - lo <= 1e-12;
      detail::require((cm == 0.0) == d_const,
                      "collapse metric and D* constancy disagree");
      if (cm > 0.0) {
        const auto br = generator_best_response(p_r, p_g);
        std::size_t support_r = 0, support_br = 0;
        for (std::size_t i = 0; i < p_r.size(); ++i) {
          if (p_r.probs[i] > 0.0) ++support_r;
          if (br.probs[i] > 0.0) ++support_br;
        }
        detail::require(support_br < support_r,
                        "best response must shrink the support under collapse");
      }
    }
  });
}

inline void models_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "models.softmax-shift-invariance", [seed] {
    SeededRng rng(seed + 4);
    std::vector<double> z = rng.normal_vector(5);
    const ShiftCheck uni = softmax_shift_check(z, std::vector<double>(5, 5.0));
    detail::require(uni.invariant && uni.max_deviation <= 1e-12,
                    "uniform shift must preserve softmax");
    std::vector<double> c = rng.normal_vector(5);
    double mean = 0.0;
    for (const double v : c) mean += v;
    for (auto& v : c) v -= mean / 5.0;
    double n2 = 0.0;
    for (const double v : c) n2 += v * v;
    for (auto& v : c) v /= std::sqrt(n2);
    const ShiftCheck non = softmax_shift_check(z, c);
    detail::require(!non.invariant && non.max_deviation > 1e-3,
                    "unit-norm non-uniform shift must move softmax");
  });

  detail::run(out, "models.discriminator-head-has-no-bias", [seed] {
    MganConfig mc;
    mc.k_generators = 2;
    mc.gen_hidden = {8};
    mc.trunk_hidden = {8};
    mc.feature_dim = 6;
    const MganModel m = build_mgan(mc, seed);
    detail::require(!m.discriminator.head_b.has_value(),
                    "discriminator head carries a bias");
    // trunk: 2 layers x (w+b) = 4 tensors, plus one head weight.
    detail::require(m.discriminator_params().size() == 5,
                    "discriminator parameter census mismatch");
    detail::require(m.classifier.head_b.has_value(),
                    "classifier head must carry a bias");
  });

  detail::run(out, "models.shared-layer-aliasing", [seed] {
    MganConfig mc;
    mc.k_generators = 2;
    mc.gen_hidden = {8};
    mc.trunk_hidden = {8};
    mc.feature_dim = 6;
    mc.shares_removed = 1;  // depth 2: first layer shared, last private
    MganModel m = build_mgan(mc, seed + 5);
    detail::require(m.trunk_layer_shared(0), "layer 0 should be shared");
    detail::require(!m.trunk_layer_shared(1), "layer 1 should be private");

    const std::vector<double> cls_last = m.classifier.extractor.layer(1).w.data();
    SeededRng rng(seed + 6);
    Tensor x({16, 2}, rng.normal_vector(32));
    Adam opt(m.discriminator_params());
    opt.zero_grad();
    Tensor loss = mean_all(m.discriminator.forward(x));
    backward(loss);
    opt.step();
    detail::require(
        m.classifier.extractor.layer(0).w.data() ==
            m.discriminator.extractor.layer(0).w.data(),
        "shared layer diverged between discriminator and classifier");
    detail::require(m.classifier.extractor.layer(1).w.data() == cls_last,
                    "discriminator update touched a private classifier layer");
  });
}

inline void training_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "training.deterministic-metrics", [seed] {
    MganConfig mc;
    mc.k_generators = 2;
    mc.gen_hidden = {8};
    mc.trunk_hidden = {8};
    mc.feature_dim = 6;
    TrainConfig tc;
    tc.steps = 10;
    tc.real_batch = 16;
    tc.per_gen_batch = 4;
    tc.seed = seed + 7;
    DatasetSpec ds;
    ds.modes = 2;
    ds.radius = 0.5;
    ds.sigma = 0.1;
    const SyntheticDataset data(ds);
    auto sampler = [&data](std::size_t n, SeededRng& r) {
      return data.sample(n, r).x;
    };
    MganModel m1 = build_mgan(mc, seed + 7);
    MganModel m2 = build_mgan(mc, seed + 7);
    const TrainResult r1 = train_mgan(m1, tc, sampler);
    const TrainResult r2 = train_mgan(m2, tc, sampler);
    for (std::size_t i = 0; i < r1.metrics.size(); ++i) {
      detail::require(r1.metrics[i].to_json() == r2.metrics[i].to_json(),
                      "metric streams diverged at step " + std::to_string(i));
    }
  });

  detail::run(out, "training.d-loss-at-analytic-optimum", [seed] {
    SeededRng rng(seed + 8);
    const auto p_r = detail::random_density(rng, 5, false);
    const auto p_g = detail::random_density(rng, 5, false);
    const PointValues ds = optimal_discriminator(p_r, p_g);
    double d_loss = 0.0;
    for (std::size_t k = 0; k < ds.indices.size(); ++k) {
      const std::size_t i = ds.indices[k];
      if (p_r.probs[i] > 0.0) d_loss -= p_r.probs[i] * std::log(ds.values[k]);
      if (p_g.probs[i] > 0.0) {
        d_loss -= p_g.probs[i] * std::log(1.0 - ds.values[k]);
      }
    }
    const GanValue v = gan_value(p_r, p_g);
    detail::require(std::abs(d_loss + v.direct) <= 1e-10,
                    "d-loss at D* must equal the negated value");
  });
}

inline void geometry_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "geometry.decomposition-exactness", [seed] {
    SeededRng rng(seed + 9);
    Matrix a(3, 8);
    for (auto& v : a.data) v = rng.normal();
    Matrix y(20, 8);
    for (auto& v : y.data) v = rng.normal();
    const SubspaceDecomposition dec = decompose_features(a, y);
    detail::require(dec.bases.rank == 3, "random 3x8 head should have rank 3");
    for (std::size_t i = 0; i < y.rows; ++i) {
      double cross = 0.0;
      for (std::size_t j = 0; j < y.cols; ++j) {
        const double sum =
            dec.row_component.at(i, j) + dec.null_component.at(i, j);
        detail::require(std::abs(sum - y.at(i, j)) <= 1e-8,
                        "components fail to reconstruct the feature");
        cross += dec.row_component.at(i, j) * dec.null_component.at(i, j);
      }
      detail::require(std::abs(cross) <= 1e-8, "components are not orthogonal");
    }
  });

  detail::run(out, "geometry.null-fraction-one-output-head", [seed] {
    SeededRng rng(seed + 10);
    const std::size_t d = 32;
    Matrix a(1, d);
    for (auto& v : a.data) v = rng.normal();
    const SubspaceBases b = row_null_basis(a);
    detail::require(b.rank == 1 && b.null_basis.rows == d - 1,
                    "1xd head must have null dimension d-1");
  });

  detail::run(out, "geometry.softmax-iff-law", [seed] {
    SeededRng rng(seed + 11);
    for (int rep = 0; rep < 1000; ++rep) {
      const std::size_t n = 2 + rng.index(7);
      const std::vector<double> z = rng.normal_vector(n);
      std::vector<double> c;
      if (rep % 2 == 0) {
        c.assign(n, rng.normal(0.0, 3.0));
      } else {
        c = rng.normal_vector(n);
      }
      const ShiftCheck sc = softmax_shift_check(z, c);
      detail::require(sc.invariant == in_span_of_ones(c),
                      "invariance flag disagrees with the span(1) predicate");
    }
  });

  detail::run(out, "geometry.monotone-consistency", [seed] {
    MganConfig mc;
    mc.k_generators = 2;
    mc.gen_hidden = {8};
    mc.trunk_hidden = {8};
    mc.feature_dim = 6;
    MganModel m = build_mgan(mc, seed + 12);
    for (auto& v : m.discriminator.head_w.data()) v = 0.0;
    SeededRng rng(seed + 12);
    Tensor x({32, 2}, rng.normal_vector(64));
    const InvarianceStats s = discriminator_invariance(m.discriminator, x);
    detail::require(s.stddev == 0.0 && s.mean == 0.5,
                    "zero head must give constant D = 0.5");
  });
}

inline void transfer_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "transfer.frozen-extractor", [seed] {
    SeededRng rng(seed + 13);
    MlpSpec spec;
    spec.in_dim = 2;
    spec.hidden = {8};
    spec.out_dim = 6;
    Mlp extractor(spec, rng);
    std::vector<std::vector<double>> before;
    for (const auto& p : extractor.params()) before.push_back(p.data());

    DatasetSpec ds;
    ds.kind = DatasetSpec::Kind::labeled_clusters;
    ds.modes = 3;
    ds.radius = 0.5;
    ds.sigma = 0.08;
    const SyntheticDataset data(ds);
    SeededRng drng(seed + 14);
    const LabeledBatch train = data.materialize(120, drng);
    const LabeledBatch test = data.materialize(60, drng);
    ProbeConfig pc;
    pc.epochs = 3;
    pc.batch = 30;
    pc.seed = seed + 15;
    probe_train(extractor, train, test, pc);

    const auto params = extractor.params();
    for (std::size_t i = 0; i < params.size(); ++i) {
      detail::require(params[i].data() == before[i],
                      "probe training modified the frozen extractor");
    }
  });

  detail::run(out, "transfer.report-integrity", [seed] {
    SweepConfig sc;
    sc.model.k_generators = 2;
    sc.model.gen_hidden = {8};
    sc.model.trunk_hidden = {8};
    sc.model.feature_dim = 6;
    sc.train.steps = 8;
    sc.train.real_batch = 16;
    sc.train.per_gen_batch = 4;
    sc.dataset.kind = DatasetSpec::Kind::labeled_clusters;
    sc.dataset.modes = 3;
    sc.dataset.radius = 0.5;
    sc.dataset.sigma = 0.08;
    sc.train_size = 96;
    sc.test_size = 48;
    sc.shares_removed = {0, 2};
    sc.num_seeds = 1;
    sc.base_seed = seed + 16;
    sc.probe.epochs = 3;
    sc.probe.batch = 32;
    const SweepReport rep = ablation_sweep(sc);
    for (const auto& row : rep.rows) {
      detail::require(row.difference == row.classifier_accuracy -
                                            row.discriminator_accuracy,
                      "difference column is inconsistent");
      if (row.shares_removed == 0) {
        detail::require(row.difference == 0.0,
                        "full sharing must give identical probes");
      }
    }
  });
}

inline void cli_io_checks(CheckList& out, std::uint64_t seed) {
  detail::run(out, "cli-io.dataset-determinism-and-mass", [seed] {
    DatasetSpec ds;
    ds.modes = 8;
    ds.radius = 0.7;
    ds.sigma = 0.05;
    const SyntheticDataset data(ds);
    data.validate_normalization();
    SeededRng r1(seed + 17), r2(seed + 17);
    const LabeledBatch b1 = data.sample(64, r1);
    const LabeledBatch b2 = data.sample(64, r2);
    detail::require(b1.x.data() == b2.x.data() && b1.labels == b2.labels,
                    "dataset regeneration is not bit-identical");
  });

  detail::run(out, "cli-io.checkpoint-round-trip", [seed] {
    MganConfig mc;
    mc.k_generators = 2;
    mc.gen_hidden = {8};
    mc.trunk_hidden = {8};
    mc.feature_dim = 6;
    MganModel m = build_mgan(mc, seed + 18);
    const std::string path = "/tmp/ganlab-selfcheck-ckpt.bin";
    model_to_checkpoint(m).save(path);
    MganModel m2 = build_mgan(mc, seed + 999);
    checkpoint_to_model(Checkpoint::load(path), m2);
    SeededRng rng(seed + 19);
    Tensor x({8, 2}, rng.normal_vector(16));
    detail::require(
        m.discriminator.forward(x).data() == m2.discriminator.forward(x).data(),
        "reloaded model disagrees with the original");
    std::remove(path.c_str());
  });
}

inline CheckList run_all(std::uint64_t seed = 20240801) {
  CheckList out;
  numerics_checks(out, seed);
  simplex_checks(out, seed);
  models_checks(out, seed);
  training_checks(out, seed);
  geometry_checks(out, seed);
  transfer_checks(out, seed);
  cli_io_checks(out, seed);
  return out;
}

}  // namespace ganlab::selfcheck
