#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ganlab/dataset.hpp"
#include "ganlab/models.hpp"
#include "ganlab/optim.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/training.hpp"

namespace ganlab {

struct ProbeConfig {
  std::size_t epochs = 60;
  std::size_t batch = 120;
  SgdConfig sgd;  // lr 2e-4, momentum 0.9
  std::uint64_t seed = 1;
};

struct ProbeOutcome {
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  std::vector<double> epoch_accuracies;  // held-out accuracy after each epoch
};

// Train a fresh bias-free softmax head on frozen features. The extractor is
// run once per split and detached, so no gradient can reach it; the returned
// accuracy is measured on the held-out split after every epoch, reporting
// both the final and the best epoch (final is the headline number).
//
// Features are divided by their train-split RMS before fitting. A single
// global scalar keeps the head bias-free and leaves the feature geometry
// untouched, but makes the fixed probe learning rate meaningful for
// extractors whose output scale varies by orders of magnitude.
inline ProbeOutcome probe_train(const Mlp& extractor,
                                const LabeledBatch& train,
                                const LabeledBatch& test,
                                const ProbeConfig& cfg) {
  if (train.labels.empty() || test.labels.empty()) {
    throw std::invalid_argument("probe_train: empty split");
  }
  std::size_t num_classes = 0;
  for (const auto l : train.labels) num_classes = std::max(num_classes, l + 1);
  for (const auto l : test.labels) num_classes = std::max(num_classes, l + 1);

  Tensor feat_train = extractor.forward(train.x).detach();
  Tensor feat_test = extractor.forward(test.x).detach();
  double rms = 0.0;
  for (const double v : feat_train.data()) rms += v * v;
  rms = std::sqrt(rms / static_cast<double>(feat_train.size()));
  if (rms > 0.0) {
    for (auto& v : feat_train.data()) v /= rms;
    for (auto& v : feat_test.data()) v /= rms;
  }
  const std::size_t d = feat_train.cols();
  const std::size_t n = feat_train.rows();

  SeededRng rng = SeededRng(cfg.seed).derive("probe");
  Tensor head = Tensor::randn({num_classes, d}, rng, 0.0, 0.02);
  SgdMomentum opt({head}, cfg.sgd);

  ProbeOutcome out;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < n; start += cfg.batch) {
      const std::size_t stop = std::min(start + cfg.batch, n);
      const std::size_t bs = stop - start;
      std::vector<double> bx(bs * d);
      std::vector<std::size_t> by(bs);
      for (std::size_t i = 0; i < bs; ++i) {
        const std::size_t r = order[start + i];
        for (std::size_t j = 0; j < d; ++j) {
          bx[i * d + j] = feat_train.at(r, j);
        }
        by[i] = train.labels[r];
      }
      Tensor batch({bs, d}, std::move(bx));
      opt.zero_grad();
      Tensor loss = cross_entropy(softmax_rows(linear(batch, head)), by);
      backward(loss);
      opt.step();
    }
    const double acc =
        accuracy(softmax_rows(linear(feat_test, head)), test.labels);
    out.epoch_accuracies.push_back(acc);
  }
  out.final_accuracy = out.epoch_accuracies.back();
  out.best_accuracy =
      *std::max_element(out.epoch_accuracies.begin(), out.epoch_accuracies.end());
  return out;
}

struct SweepConfig {
  MganConfig model;
  TrainConfig train;
  DatasetSpec dataset;  // should be labeled-clusters for a meaningful probe
  std::size_t train_size = 4096;
  std::size_t test_size = 1024;
  std::vector<std::size_t> shares_removed = {0, 1, 2, 3};
  std::size_t num_seeds = 5;
  std::uint64_t base_seed = 1;
  ProbeConfig probe;
};

struct SweepRow {
  std::size_t shares_removed = 0;
  std::size_t seed_index = 0;
  double discriminator_accuracy = 0.0;
  double classifier_accuracy = 0.0;
  double difference = 0.0;  // classifier - discriminator
  bool diverged = false;

  nlohmann::json to_json() const {
    return nlohmann::json{{"shares_removed", shares_removed},
                          {"seed", seed_index},
                          {"discriminator_accuracy", discriminator_accuracy},
                          {"classifier_accuracy", classifier_accuracy},
                          {"difference", difference},
                          {"diverged", diverged}};
  }
};

struct SweepAggregate {
  std::size_t shares_removed = 0;
  double median_discriminator = 0.0;
  double median_classifier = 0.0;
  double median_difference = 0.0;
  std::size_t diverged_rows = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<SweepAggregate> aggregates;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

using SweepProgress = std::function<void(const SweepRow&)>;

// The share-removal ablation: for each (s, seed) cell, rebuild the model
// from a seed derived from (base seed, s, seed index), train on the source
// task, then probe both frozen extractors on the labeled target task. The
// same probe seed serves both extractors, so at s=0 (identical trunks) the
// two probes are bit-identical and the difference is exactly zero. A cell
// whose source training diverges becomes a flagged row, never a dropped one.
inline SweepReport ablation_sweep(const SweepConfig& cfg,
                                  const SweepProgress& progress = nullptr) {
  SweepReport report;
  const SeededRng root(cfg.base_seed);
  const SyntheticDataset data(cfg.dataset);

  for (const std::size_t s : cfg.shares_removed) {
    if (s > cfg.model.trunk_depth()) {
      throw std::invalid_argument("ablation_sweep: shares_removed " +
                                  std::to_string(s) + " exceeds trunk depth");
    }
  }

  for (const std::size_t s : cfg.shares_removed) {
    for (std::size_t i = 0; i < cfg.num_seeds; ++i) {
      // Target/source data depend on the seed only, so every s sees the
      // same task at a given seed.
      SeededRng data_rng = root.derive("data", i);
      const LabeledBatch train_set = data.materialize(cfg.train_size, data_rng);
      const LabeledBatch test_set = data.materialize(cfg.test_size, data_rng);

      const std::uint64_t cell_seed =
          root.derive("cell", s).derive("seed", i).seed();
      MganConfig mc = cfg.model;
      mc.shares_removed = s;
      MganModel model = build_mgan(mc, cell_seed);

      TrainConfig tc = cfg.train;
      tc.seed = cell_seed;

      SweepRow row;
      row.shares_removed = s;
      row.seed_index = i;
      try {
        train_mgan(model, tc, index_sampler(train_set));
      } catch (const std::runtime_error&) {
        row.diverged = true;
        row.discriminator_accuracy = std::numeric_limits<double>::quiet_NaN();
        row.classifier_accuracy = std::numeric_limits<double>::quiet_NaN();
        row.difference = std::numeric_limits<double>::quiet_NaN();
        report.rows.push_back(row);
        if (progress) progress(row);
        continue;
      }

      ProbeConfig pc = cfg.probe;
      pc.seed = SeededRng(cell_seed).derive("probe-seed").seed();
      const ProbeOutcome disc_probe =
          probe_train(model.discriminator.extractor, train_set, test_set, pc);
      const ProbeOutcome cls_probe =
          probe_train(model.classifier.extractor, train_set, test_set, pc);

      row.discriminator_accuracy = disc_probe.final_accuracy;
      row.classifier_accuracy = cls_probe.final_accuracy;
      row.difference = row.classifier_accuracy - row.discriminator_accuracy;
      report.rows.push_back(row);
      if (progress) progress(row);
    }
  }

  for (const std::size_t s : cfg.shares_removed) {
    SweepAggregate agg;
    agg.shares_removed = s;
    std::vector<double> da, ca, diff;
    for (const auto& row : report.rows) {
      if (row.shares_removed != s) continue;
      if (row.diverged) {
        ++agg.diverged_rows;
        continue;
      }
      da.push_back(row.discriminator_accuracy);
      ca.push_back(row.classifier_accuracy);
      diff.push_back(row.difference);
    }
    agg.median_discriminator = median(da);
    agg.median_classifier = median(ca);
    agg.median_difference = median(diff);
    report.aggregates.push_back(agg);
  }
  return report;
}

namespace detail {

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

// Table layout mirrors the share-removal results table, plus the seed.
inline void write_sweep_csv(const SweepReport& report, std::ostream& os) {
  os << "shares_removed,discriminator_extractor_accuracy,"
        "classifier_extractor_accuracy,accuracy_difference,seed\n";
  for (const auto& row : report.rows) {
    os << row.shares_removed << ',' << detail::csv_num(row.discriminator_accuracy)
       << ',' << detail::csv_num(row.classifier_accuracy) << ','
       << detail::csv_num(row.difference) << ',' << row.seed_index << '\n';
  }
}

inline void write_sweep_summary_csv(const SweepReport& report,
                                    std::ostream& os) {
  os << "shares_removed,median_discriminator_accuracy,"
        "median_classifier_accuracy,median_accuracy_difference,diverged_rows\n";
  for (const auto& agg : report.aggregates) {
    os << agg.shares_removed << ',' << detail::csv_num(agg.median_discriminator)
       << ',' << detail::csv_num(agg.median_classifier) << ','
       << detail::csv_num(agg.median_difference) << ',' << agg.diverged_rows
       << '\n';
  }
}

}  // namespace ganlab
