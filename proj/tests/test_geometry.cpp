#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "ganlab/geometry.hpp"
#include "ganlab/models.hpp"
#include "ganlab/rng.hpp"

using namespace ganlab;

namespace {

// Classifier whose logits equal its input rows: identity extractor and
// identity softmax head, so tests can prescribe logits exactly.
DecomposedNet identity_classifier(std::size_t k) {
  MlpSpec spec;
  spec.in_dim = k;
  spec.hidden = {};
  spec.out_dim = k;
  spec.bias = false;
  SeededRng rng(1);
  DecomposedNet net;
  net.extractor = Mlp(spec, rng);
  auto& w = net.extractor.layer(0).w.data();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) w[i * k + j] = (i == j) ? 1.0 : 0.0;
  }
  net.head_w = Tensor({k, k}, w);
  net.head_b = Tensor::zeros({k}, true);
  net.head = DecomposedNet::Head::softmax_head;
  return net;
}

}  // namespace

TEST_CASE("axis head splits a feature vector exactly", "[geometry]") {
  Matrix head(1, 3, {1.0, 0.0, 0.0});
  Matrix feats(1, 3, {2.0, 5.0, 7.0});
  const SubspaceDecomposition d = decompose_features(head, feats);
  REQUIRE(d.bases.rank == 1);
  REQUIRE(d.row_component.at(0, 0) == Catch::Approx(2.0).margin(1e-12));
  REQUIRE(d.row_component.at(0, 1) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(d.row_component.at(0, 2) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(d.null_component.at(0, 0) == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(d.null_component.at(0, 1) == Catch::Approx(5.0).margin(1e-12));
  REQUIRE(d.null_component.at(0, 2) == Catch::Approx(7.0).margin(1e-12));
  REQUIRE(d.row_mean[0] == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("decomposition reconstructs and separates random features",
          "[geometry]") {
  SeededRng rng(71);
  Matrix head(2, 6);
  for (auto& v : head.data) v = rng.normal();
  Matrix feats(40, 6);
  for (auto& v : feats.data) v = rng.normal();
  const SubspaceDecomposition d = decompose_features(head, feats);
  REQUIRE(d.bases.rank == 2);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 6; ++j) {
      REQUIRE(d.row_component.at(i, j) + d.null_component.at(i, j) ==
              Catch::Approx(feats.at(i, j)).margin(1e-9));
    }
    // the null component is invisible to the head
    std::vector<double> yn(d.null_component.row(i),
                           d.null_component.row(i) + 6);
    for (const double hv : matvec(head, yn)) {
      REQUIRE(std::abs(hv) <= 1e-8);
    }
    // the row component has no null coordinates
    std::vector<double> yr(d.row_component.row(i), d.row_component.row(i) + 6);
    for (const double nv : basis_coordinates(d.bases.null_basis, yr)) {
      REQUIRE(std::abs(nv) <= 1e-8);
    }
  }

  Matrix wrong(2, 5);
  REQUIRE_THROWS_AS(decompose_features(wrong, feats), std::invalid_argument);
}

TEST_CASE("one-output heads leave all but one direction unused", "[geometry]") {
  MganConfig cfg;
  cfg.k_generators = 2;
  cfg.gen_hidden = {8};
  cfg.trunk_hidden = {8};
  cfg.feature_dim = 5;
  const MganModel m = build_mgan(cfg, 72);
  SeededRng rng(73);
  Tensor data({30, 2}, rng.normal_vector(60, 0.0, 0.4));

  const GeometryReport rep = analyze_head_geometry(m.discriminator, data);
  REQUIRE(rep.feature_dim == 5);
  REQUIRE(rep.head_rank == 1);
  REQUIRE(rep.null_fraction == Catch::Approx(4.0 / 5.0));
}

TEST_CASE("row constancy is near zero for a shared row constant",
          "[geometry]") {
  Matrix head(1, 3, {1.0, 0.0, 0.0});
  SeededRng rng(74);
  Matrix feats(50, 3);
  for (std::size_t i = 0; i < 50; ++i) {
    feats.at(i, 0) = 5.0;  // constant along the head's row
    feats.at(i, 1) = rng.normal();
    feats.at(i, 2) = rng.normal();
  }
  const double metric = row_constancy_metric(decompose_features(head, feats));
  REQUIRE(metric < 1e-10);
}

TEST_CASE("row constancy is near one for isotropic features", "[geometry]") {
  SeededRng rng(75);
  Matrix head(1, 6);
  for (auto& v : head.data) v = rng.normal();
  Matrix feats(4000, 6);
  for (auto& v : feats.data) v = rng.normal();
  const double metric = row_constancy_metric(decompose_features(head, feats));
  REQUIRE(metric > 0.8);
  REQUIRE(metric < 1.2);
}

TEST_CASE("row constancy needs at least two samples", "[geometry]") {
  Matrix head(1, 3, {1.0, 0.0, 0.0});
  Matrix one(1, 3, {1.0, 2.0, 3.0});
  REQUIRE_THROWS_AS(row_constancy_metric(decompose_features(head, one)),
                    std::invalid_argument);
}

TEST_CASE("softmax ignores exactly the shifts along ones", "[geometry]") {
  const std::vector<double> z = {0.3, -1.2, 2.0};

  const ShiftCheck uniform = softmax_shift_check(z, {0.7, 0.7, 0.7});
  REQUIRE(uniform.invariant);
  REQUIRE(uniform.max_deviation <= kShiftInvariantTol);
  REQUIRE(in_span_of_ones({0.7, 0.7, 0.7}));

  const ShiftCheck skew = softmax_shift_check(z, {0.5, -0.5, 0.0});
  REQUIRE_FALSE(skew.invariant);
  REQUIRE(skew.max_deviation > 1e-6);
  REQUIRE_FALSE(in_span_of_ones({0.5, -0.5, 0.0}));

  REQUIRE_THROWS_AS(softmax_shift_check(z, {1.0}), std::invalid_argument);
  REQUIRE_THROWS_AS(softmax_shift_check({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("measured invariance agrees with the span predicate on random shifts",
          "[geometry]") {
  SeededRng rng(76);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t k = 2 + rng.index(5);
    const std::vector<double> z = rng.normal_vector(k);
    std::vector<double> c;
    if (rep % 2 == 0) {
      c.assign(k, rng.normal());
    } else {
      c = rng.normal_vector(k);
      double norm = norm2(c);
      for (auto& v : c) v /= norm;  // unit shift, far from the ones line a.s.
    }
    const ShiftCheck chk = softmax_shift_check(z, c);
    REQUIRE(chk.invariant == in_span_of_ones(c));
  }
}

TEST_CASE("exact affine classes produce zero residuals and gauge-fixed lambda",
          "[geometry]") {
  const std::size_t k = 3;
  const DecomposedNet net = identity_classifier(k);
  // two samples per class: class mean mu_c plus a per-sample multiple of ones
  const std::vector<std::vector<double>> mu = {
      {4.0, 0.0, 0.0}, {0.0, 4.0, 0.0}, {0.0, 0.0, 4.0}};
  const std::vector<double> lam = {0.3, -0.9, 1.5, 0.2, 0.0, -2.0};
  std::vector<double> rows;
  std::vector<std::size_t> labels;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t c = i / 2;
    labels.push_back(c);
    for (std::size_t j = 0; j < k; ++j) rows.push_back(mu[c][j] + lam[i]);
  }
  Tensor data({6, k}, rows);

  const ClasswiseAffineReport rep = classwise_affine_check(net, data, labels);
  REQUIRE(rep.accuracy == 1.0);
  REQUIRE(rep.num_classes == 3);
  REQUIRE(rep.max_residual <= 1e-10);
  // lambda is reported relative to the class mean: within-class differences
  // survive the gauge
  REQUIRE(rep.lambda[1] - rep.lambda[0] ==
          Catch::Approx(lam[1] - lam[0]).margin(1e-12));
  REQUIRE(rep.lambda[5] - rep.lambda[4] ==
          Catch::Approx(lam[5] - lam[4]).margin(1e-12));
  // mu differences are orthogonal-to-ones by symmetry: sqrt(32)
  REQUIRE(rep.between_class_separation ==
          Catch::Approx(std::sqrt(32.0)).margin(1e-12));
}

TEST_CASE("off-ones perturbations show up as residuals", "[geometry]") {
  const std::size_t k = 3;
  const DecomposedNet net = identity_classifier(k);
  std::vector<double> rows = {
      4.0, 0.0, 0.0,
      4.3, 0.3, 0.3,   // pure ones shift
      0.0, 4.0, 0.0,
      0.1, 3.9, 0.0,   // off-ones: (0.1, -0.1, 0) after centering
  };
  Tensor data({4, k}, rows);
  const std::vector<std::size_t> labels = {0, 0, 1, 1};
  const ClasswiseAffineReport rep = classwise_affine_check(net, data, labels);
  // the off-ones part is split evenly between the two class members
  REQUIRE(rep.max_residual == Catch::Approx(std::sqrt(0.005)).margin(1e-9));
  REQUIRE(rep.classwise_max_residual[0] <= 1e-10);
  REQUIRE(rep.classwise_max_residual[1] ==
          Catch::Approx(std::sqrt(0.005)).margin(1e-9));
}

TEST_CASE("affine check rejects unusable inputs", "[geometry]") {
  const std::size_t k = 3;
  const DecomposedNet net = identity_classifier(k);
  std::vector<double> rows = {4.0, 0.0, 0.0, 4.1, 0.0, 0.0,
                              0.0, 4.0, 0.0, 0.0, 4.1, 0.0};
  Tensor data({4, k}, rows);

  // label count mismatch
  REQUIRE_THROWS_AS(classwise_affine_check(net, data, {0, 0, 1}),
                    std::invalid_argument);
  // shuffled labels: predictions disagree, accuracy gate fires
  REQUIRE_THROWS_AS(classwise_affine_check(net, data, {1, 1, 0, 0}),
                    std::runtime_error);

  // perfectly predicted, but one class has a single sample; the accuracy
  // gate passes and the class-size check must fire
  std::vector<double> lone;
  std::vector<std::size_t> lone_labels;
  for (int i = 0; i < 3; ++i) {
    lone.insert(lone.end(), {4.0 + 0.1 * i, 0.1 * i, 0.1 * i});
    lone_labels.push_back(0);
  }
  lone.insert(lone.end(), {0.0, 4.0, 0.0});
  lone_labels.push_back(1);
  Tensor lone_data({4, k}, lone);
  REQUIRE_THROWS_AS(classwise_affine_check(net, lone_data, lone_labels),
                    std::invalid_argument);
}

TEST_CASE("ones preimage exists exactly when ones is reachable", "[geometry]") {
  Matrix eye(2, 2, {1.0, 0.0, 0.0, 1.0});
  const auto via_eye = ones_rowspace_component(eye);
  REQUIRE(via_eye.has_value());
  REQUIRE((*via_eye)[0] == Catch::Approx(1.0).margin(1e-10));
  REQUIRE((*via_eye)[1] == Catch::Approx(1.0).margin(1e-10));

  Matrix scaled(1, 3, {2.0, 0.0, 0.0});
  const auto via_scaled = ones_rowspace_component(scaled);
  REQUIRE(via_scaled.has_value());
  REQUIRE((*via_scaled)[0] == Catch::Approx(0.5).margin(1e-10));

  // rank-1 head whose column space misses the ones vector
  Matrix miss(2, 3, {1.0, 0.0, 0.0, 2.0, 0.0, 0.0});
  REQUIRE_FALSE(ones_rowspace_component(miss).has_value());
}

TEST_CASE("flat discriminators have zero output spread", "[geometry]") {
  MganConfig cfg;
  cfg.k_generators = 2;
  cfg.gen_hidden = {8};
  cfg.trunk_hidden = {8};
  cfg.feature_dim = 4;
  MganModel m = build_mgan(cfg, 77);
  for (auto& v : m.discriminator.head_w.data()) v = 0.0;
  SeededRng rng(78);
  Tensor data({25, 2}, rng.normal_vector(50, 0.0, 0.4));
  const InvarianceStats s = discriminator_invariance(m.discriminator, data);
  REQUIRE(s.mean == 0.5);
  REQUIRE(s.stddev == 0.0);
  REQUIRE(s.min == 0.5);
  REQUIRE(s.max == 0.5);
}

TEST_CASE("classifier geometry report carries the affine block", "[geometry]") {
  const std::size_t k = 3;
  const DecomposedNet net = identity_classifier(k);
  std::vector<double> rows;
  std::vector<std::size_t> labels;
  SeededRng rng(79);
  for (std::size_t i = 0; i < 12; ++i) {
    const std::size_t c = i % 3;
    labels.push_back(c);
    for (std::size_t j = 0; j < k; ++j) {
      rows.push_back((j == c ? 4.0 : 0.0) + 0.1 * rng.normal());
    }
  }
  Tensor data({12, k}, rows);
  const GeometryReport rep = analyze_classifier_geometry(net, data, labels);
  REQUIRE(rep.affine.has_value());
  REQUIRE(rep.affine->accuracy == 1.0);
  REQUIRE(rep.head_rank == 3);
  REQUIRE(rep.null_fraction == 0.0);
  const auto j = rep.to_json();
  REQUIRE(j.contains("affine_accuracy"));
  REQUIRE(j.contains("null_fraction"));
}
