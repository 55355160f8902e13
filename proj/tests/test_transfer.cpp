#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <sstream>
#include <vector>

#include "ganlab/dataset.hpp"
#include "ganlab/models.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/transfer.hpp"

using namespace ganlab;

namespace {

// Extractor whose features are exactly its inputs.
Mlp identity_extractor(std::size_t dim) {
  MlpSpec spec;
  spec.in_dim = dim;
  spec.hidden = {};
  spec.out_dim = dim;
  spec.bias = false;
  SeededRng rng(1);
  Mlp net(spec, rng);
  auto& w = net.layer(0).w.data();
  for (std::size_t i = 0; i < dim; ++i) {
    for (std::size_t j = 0; j < dim; ++j) w[i * dim + j] = (i == j) ? 1.0 : 0.0;
  }
  return net;
}

LabeledBatch one_hot_batch(std::size_t n, std::size_t k) {
  std::vector<double> x(n * k, 0.0);
  std::vector<std::size_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i % k;
    x[i * k + labels[i]] = 1.0;
  }
  return LabeledBatch{Tensor({n, k}, std::move(x)), std::move(labels)};
}

}  // namespace

TEST_CASE("a probe on one-hot features solves the task outright", "[transfer]") {
  const Mlp ext = identity_extractor(4);
  const LabeledBatch train = one_hot_batch(240, 4);
  const LabeledBatch test = one_hot_batch(120, 4);
  ProbeConfig cfg;
  cfg.epochs = 30;
  cfg.sgd.lr = 0.05;
  const ProbeOutcome out = probe_train(ext, train, test, cfg);
  REQUIRE(out.epoch_accuracies.size() == 30);
  REQUIRE(out.final_accuracy >= 0.99);
  REQUIRE(out.best_accuracy >= out.final_accuracy);
}

TEST_CASE("featureless extractors probe at chance", "[transfer]") {
  MlpSpec spec;
  spec.in_dim = 2;
  spec.hidden = {8};
  spec.out_dim = 6;
  SeededRng rng(101);
  Mlp ext(spec, rng);
  for (std::size_t i = 0; i < ext.depth(); ++i) {
    for (auto& v : ext.layer(i).w.data()) v = 0.0;
  }

  DatasetSpec dspec;
  dspec.kind = DatasetSpec::Kind::labeled_clusters;
  dspec.modes = 4;
  const SyntheticDataset ds(dspec);
  SeededRng data_rng(102);
  const LabeledBatch train = ds.materialize(160, data_rng);
  const LabeledBatch test = ds.materialize(80, data_rng);

  ProbeConfig cfg;
  cfg.epochs = 5;
  const ProbeOutcome out = probe_train(ext, train, test, cfg);
  // zero features block every gradient: argmax ties resolve to class 0
  for (const double acc : out.epoch_accuracies) {
    REQUIRE(acc == Catch::Approx(0.25).margin(1e-12));
  }
}

TEST_CASE("a random frozen extractor separates three clusters", "[transfer]") {
  MlpSpec spec;
  spec.in_dim = 2;
  spec.hidden = {32};
  spec.out_dim = 16;
  spec.init_std = 0.02;
  SeededRng rng(103);
  const Mlp ext(spec, rng);

  DatasetSpec dspec;
  dspec.kind = DatasetSpec::Kind::labeled_clusters;
  dspec.modes = 3;
  const SyntheticDataset ds(dspec);
  SeededRng data_rng(104);
  const LabeledBatch train = ds.materialize(512, data_rng);
  const LabeledBatch test = ds.materialize(256, data_rng);

  const std::vector<double> before = ext.layer(0).w.data();
  const ProbeOutcome out = probe_train(ext, train, test, ProbeConfig{});
  REQUIRE(out.final_accuracy >= 0.9);
  // the extractor is read-only to the probe
  REQUIRE(ext.layer(0).w.data() == before);

  REQUIRE_THROWS_AS(
      probe_train(ext, LabeledBatch{Tensor({1, 2}, {0.0, 0.0}), {}}, test,
                  ProbeConfig{}),
      std::invalid_argument);
}

TEST_CASE("median handles odd, even and empty inputs", "[transfer]") {
  REQUIRE(median({3.0, 1.0, 2.0}) == 2.0);
  REQUIRE(median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  REQUIRE(median({7.0}) == 7.0);
  REQUIRE(std::isnan(median({})));
}

TEST_CASE("the ablation sweep reports consistent rows", "[transfer]") {
  SweepConfig cfg;
  cfg.model.k_generators = 2;
  cfg.model.gen_hidden = {12};
  cfg.model.trunk_hidden = {12};
  cfg.model.feature_dim = 8;
  cfg.train.steps = 40;
  cfg.train.real_batch = 16;
  cfg.train.per_gen_batch = 8;
  cfg.dataset.kind = DatasetSpec::Kind::labeled_clusters;
  cfg.dataset.modes = 4;
  cfg.train_size = 128;
  cfg.test_size = 64;
  cfg.shares_removed = {0, 1};
  cfg.num_seeds = 2;
  cfg.base_seed = 105;
  cfg.probe.epochs = 6;

  std::size_t progress_calls = 0;
  const SweepReport rep =
      ablation_sweep(cfg, [&](const SweepRow&) { ++progress_calls; });

  REQUIRE(rep.rows.size() == 4);
  REQUIRE(progress_calls == 4);
  REQUIRE(rep.aggregates.size() == 2);

  for (const auto& row : rep.rows) {
    REQUIRE_FALSE(row.diverged);
    REQUIRE(row.difference ==
            row.classifier_accuracy - row.discriminator_accuracy);
    REQUIRE(row.discriminator_accuracy >= 0.0);
    REQUIRE(row.discriminator_accuracy <= 1.0);
    if (row.shares_removed == 0) {
      // identical trunks, identical probe seed: the difference is exact zero
      REQUIRE(row.discriminator_accuracy == row.classifier_accuracy);
      REQUIRE(row.difference == 0.0);
    }
  }

  // aggregates are the medians of their rows
  for (const auto& agg : rep.aggregates) {
    std::vector<double> diff;
    for (const auto& row : rep.rows) {
      if (row.shares_removed == agg.shares_removed) {
        diff.push_back(row.difference);
      }
    }
    REQUIRE(agg.median_difference == median(diff));
    REQUIRE(agg.diverged_rows == 0);
  }

  SweepConfig bad = cfg;
  bad.shares_removed = {5};  // trunk depth is 2
  REQUIRE_THROWS_AS(ablation_sweep(bad), std::invalid_argument);
}

TEST_CASE("sweep tables match the published layout", "[transfer]") {
  SweepReport rep;
  SweepRow row;
  row.shares_removed = 1;
  row.seed_index = 3;
  row.discriminator_accuracy = 0.5;
  row.classifier_accuracy = 0.75;
  row.difference = 0.25;
  rep.rows.push_back(row);
  SweepRow dead;
  dead.shares_removed = 2;
  dead.seed_index = 0;
  dead.diverged = true;
  dead.discriminator_accuracy = std::numeric_limits<double>::quiet_NaN();
  dead.classifier_accuracy = std::numeric_limits<double>::quiet_NaN();
  dead.difference = std::numeric_limits<double>::quiet_NaN();
  rep.rows.push_back(dead);
  SweepAggregate agg;
  agg.shares_removed = 1;
  agg.median_discriminator = 0.5;
  agg.median_classifier = 0.75;
  agg.median_difference = 0.25;
  rep.aggregates.push_back(agg);

  std::ostringstream rows_csv;
  write_sweep_csv(rep, rows_csv);
  const std::string rows_text = rows_csv.str();
  REQUIRE(rows_text ==
          "shares_removed,discriminator_extractor_accuracy,"
          "classifier_extractor_accuracy,accuracy_difference,seed\n"
          "1,0.500000,0.750000,0.250000,3\n"
          "2,nan,nan,nan,0\n");

  std::ostringstream summary_csv;
  write_sweep_summary_csv(rep, summary_csv);
  REQUIRE(summary_csv.str() ==
          "shares_removed,median_discriminator_accuracy,"
          "median_classifier_accuracy,median_accuracy_difference,diverged_rows\n"
          "1,0.500000,0.750000,0.250000,0\n");

  // diverged rows keep their flag in the json record too
  REQUIRE(dead.to_json().at("diverged") == true);
}
