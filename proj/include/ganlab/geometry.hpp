#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "ganlab/linalg.hpp"
#include "ganlab/models.hpp"
#include "ganlab/tensor.hpp"
#include "ganlab/training.hpp"

namespace ganlab {

inline Matrix to_matrix(const Tensor& t) {
  if (t.shape().size() != 2) {
    throw std::invalid_argument("to_matrix: tensor is not 2-d");
  }
  return Matrix(t.rows(), t.cols(), t.data());
}

inline Matrix feature_matrix(const DecomposedNet& net, const Tensor& data) {
  return to_matrix(net.features(data));
}

// Per-sample split of features across the head's row space and null space.
// Ambient components carry the reconstruction y = y_r + y_n; the coordinate
// matrices express the same vectors in the orthonormal bases, which is the
// representation the spread statistics are taken in.
struct SubspaceDecomposition {
  SubspaceBases bases;
  Matrix row_component;        // m x d, projection onto span(row basis)
  Matrix null_component;       // m x d, remainder
  Matrix row_coords;           // m x rank
  Matrix null_coords;          // m x (d - rank)
  std::vector<double> row_mean;  // c: mean of the row components
};

inline SubspaceDecomposition decompose_features(const SubspaceBases& bases,
                                                const Matrix& features) {
  const std::size_t d = features.cols;
  const std::size_t r = bases.rank;
  if (bases.row_basis.cols != d || bases.null_basis.cols != d) {
    throw std::invalid_argument(
        "decompose_features: feature width does not match the head");
  }
  const std::size_t m = features.rows;
  SubspaceDecomposition out;
  out.bases = bases;
  out.row_component = Matrix(m, d);
  out.null_component = Matrix(m, d);
  out.row_coords = Matrix(m, r);
  out.null_coords = Matrix(m, d - r);
  out.row_mean.assign(d, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::vector<double> y(features.row(i), features.row(i) + d);
    const auto rc = basis_coordinates(bases.row_basis, y);
    const auto nc = basis_coordinates(bases.null_basis, y);
    for (std::size_t j = 0; j < r; ++j) out.row_coords.at(i, j) = rc[j];
    for (std::size_t j = 0; j + r < d; ++j) out.null_coords.at(i, j) = nc[j];
    for (std::size_t j = 0; j < r; ++j) {
      const double* b = bases.row_basis.row(j);
      for (std::size_t t = 0; t < d; ++t) {
        out.row_component.at(i, t) += rc[j] * b[t];
      }
    }
    for (std::size_t t = 0; t < d; ++t) {
      out.null_component.at(i, t) = y[t] - out.row_component.at(i, t);
      out.row_mean[t] += out.row_component.at(i, t);
    }
  }
  if (m > 0) {
    for (auto& v : out.row_mean) v /= static_cast<double>(m);
  }
  return out;
}

inline SubspaceDecomposition decompose_features(const Matrix& head,
                                                const Matrix& features,
                                                double rel_tol = kRankTol) {
  return decompose_features(row_null_basis(head, rel_tol), features);
}

namespace detail {

// Mean across coordinates of the per-coordinate standard deviation across
// samples; an empty coordinate block contributes zero.
inline double mean_coordinate_std(const Matrix& coords) {
  if (coords.cols == 0 || coords.rows == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < coords.cols; ++j) {
    double mean = 0.0;
    for (std::size_t i = 0; i < coords.rows; ++i) mean += coords.at(i, j);
    mean /= static_cast<double>(coords.rows);
    double var = 0.0;
    for (std::size_t i = 0; i < coords.rows; ++i) {
      const double dlt = coords.at(i, j) - mean;
      var += dlt * dlt;
    }
    var /= static_cast<double>(coords.rows);
    acc += std::sqrt(var);
  }
  return acc / static_cast<double>(coords.cols);
}

}  // namespace detail

// How much the features move inside the head's row space relative to how
// much they move in its null space, each measured in that subspace's own
// orthonormal coordinates. Near zero when the row component is a shared
// constant; near one for isotropic variation.
inline double row_constancy_metric(const SubspaceDecomposition& d) {
  if (d.row_component.rows < 2) {
    throw std::invalid_argument("row_constancy_metric: needs >= 2 samples");
  }
  const double row_spread = detail::mean_coordinate_std(d.row_coords);
  const double null_spread = detail::mean_coordinate_std(d.null_coords);
  return row_spread / (null_spread + 1e-12);
}

struct InvarianceStats {
  double mean = 0.0;
  double stddev = 0.0;
  double min = 0.0;
  double max = 0.0;
};

// Spread of the discriminator's output over a sample set. A discriminator
// at the invariant state is flat here.
inline InvarianceStats discriminator_invariance(const DecomposedNet& disc,
                                                const Tensor& data) {
  Tensor out = disc.forward(data);
  const auto& v = out.data();
  if (v.empty()) throw std::invalid_argument("discriminator_invariance: empty");
  InvarianceStats s;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (const double x : v) {
    s.mean += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (const double x : v) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(v.size()));
  return s;
}

namespace detail {

inline std::vector<double> softmax_vec(const std::vector<double>& z) {
  double mx = z[0];
  for (const double v : z) mx = std::max(mx, v);
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  for (auto& v : out) v /= sum;
  return out;
}

}  // namespace detail

constexpr double kShiftInvariantTol = 1e-10;

struct ShiftCheck {
  bool invariant = false;      // measured: max_deviation <= 1e-10
  double max_deviation = 0.0;  // max_i |softmax(z + c)_i - softmax(z)_i|
};

// Does shifting the logits by c change the softmax? The flag is purely
// measured; the shift-invariance law says it must coincide with the
// span-of-ones predicate below.
inline ShiftCheck softmax_shift_check(const std::vector<double>& z,
                                      const std::vector<double>& c) {
  if (z.size() != c.size() || z.size() < 2) {
    throw std::invalid_argument(
        "softmax_shift_check: need matching lengths >= 2");
  }
  std::vector<double> zs(z);
  for (std::size_t i = 0; i < zs.size(); ++i) zs[i] += c[i];
  const auto a = detail::softmax_vec(z);
  const auto b = detail::softmax_vec(zs);
  ShiftCheck out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.max_deviation = std::max(out.max_deviation, std::abs(a[i] - b[i]));
  }
  out.invariant = out.max_deviation <= kShiftInvariantTol;
  return out;
}

// c = lambda * ones, up to tol in Euclidean norm of the residual.
inline bool in_span_of_ones(const std::vector<double>& c,
                            double tol = kShiftInvariantTol) {
  double mean = 0.0;
  for (const double v : c) mean += v;
  mean /= static_cast<double>(c.size());
  double n2 = 0.0;
  for (const double v : c) n2 += (v - mean) * (v - mean);
  return std::sqrt(n2) <= tol;
}

struct ClasswiseAffineReport {
  double accuracy = 0.0;
  std::size_t num_classes = 0;
  std::vector<double> lambda;     // per-sample ones-direction coefficient
  std::vector<double> residuals;  // per-sample off-ones residual norm
  std::vector<double> classwise_max_residual;
  double max_residual = 0.0;
  double between_class_separation = 0.0;  // min pairwise, orthogonal to ones
};

// Tests the per-class affine structure: within a class, outputs should
// differ from the class representative only along the ones direction,
// y_j = y_i + lambda(x_j) * 1 + r_j with small r_j. lambda is the mean
// coordinate of (y_j - class mean), the exact projection coefficient
// whenever the structure holds. Requires a trained classifier: below
// `min_accuracy` the class means are meaningless and the check throws.
inline ClasswiseAffineReport classwise_affine_check(
    const DecomposedNet& classifier, const Tensor& data,
    const std::vector<std::size_t>& labels, double min_accuracy = 0.9) {
  if (static_cast<std::size_t>(data.rows()) != labels.size()) {
    throw std::invalid_argument("classwise_affine_check: label count mismatch");
  }
  const ForwardDecomposed fwd = forward_classifier(classifier, data);
  const Matrix logits = to_matrix(fwd.logits);
  const std::size_t m = logits.rows, k = logits.cols;

  ClasswiseAffineReport rep;
  rep.accuracy = accuracy(fwd.probs, labels);
  if (rep.accuracy < min_accuracy) {
    throw std::runtime_error(
        "classwise_affine_check: classifier accuracy " +
        std::to_string(rep.accuracy) + " below required " +
        std::to_string(min_accuracy));
  }

  std::size_t num_classes = 0;
  for (const auto l : labels) num_classes = std::max(num_classes, l + 1);
  rep.num_classes = num_classes;

  Matrix class_mean(num_classes, k);
  std::vector<std::size_t> count(num_classes, 0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      class_mean.at(labels[i], j) += logits.at(i, j);
    }
    ++count[labels[i]];
  }
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (count[c] < 2) {
      throw std::invalid_argument("classwise_affine_check: class " +
                                  std::to_string(c) + " has fewer than 2 samples");
    }
    for (std::size_t j = 0; j < k; ++j) {
      class_mean.at(c, j) /= static_cast<double>(count[c]);
    }
  }

  rep.lambda.resize(m);
  rep.residuals.resize(m);
  rep.classwise_max_residual.assign(num_classes, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t c = labels[i];
    double lam = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      lam += logits.at(i, j) - class_mean.at(c, j);
    }
    lam /= static_cast<double>(k);
    rep.lambda[i] = lam;
    double r2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double r = logits.at(i, j) - class_mean.at(c, j) - lam;
      r2 += r * r;
    }
    rep.residuals[i] = std::sqrt(r2);
    rep.classwise_max_residual[c] =
        std::max(rep.classwise_max_residual[c], rep.residuals[i]);
    rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
  }

  rep.between_class_separation = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < num_classes; ++a) {
    for (std::size_t b = a + 1; b < num_classes; ++b) {
      double mean_d = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        mean_d += class_mean.at(a, j) - class_mean.at(b, j);
      }
      mean_d /= static_cast<double>(k);
      double s2 = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        const double r = class_mean.at(a, j) - class_mean.at(b, j) - mean_d;
        s2 += r * r;
      }
      rep.between_class_separation =
          std::min(rep.between_class_separation, std::sqrt(s2));
    }
  }
  if (num_classes < 2) rep.between_class_separation = 0.0;
  return rep;
}

// Minimum-norm preimage of the ones vector under the head matrix, when the
// ones vector lies in the head's column space; empty otherwise. The result
// lives in the head's row space by construction.
inline std::optional<std::vector<double>> ones_rowspace_component(
    const Matrix& head, double tol = 1e-8) {
  const std::vector<double> ones(head.rows, 1.0);
  std::vector<double> x = lstsq_min_norm(head, ones);
  const std::vector<double> back = matvec(head, x);
  double resid = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    resid = std::max(resid, std::abs(back[i] - 1.0));
  }
  if (resid > tol) return std::nullopt;
  return x;
}

struct GeometryReport {
  std::size_t feature_dim = 0;
  std::size_t head_rank = 0;
  double null_fraction = 0.0;  // (d - rank) / d
  double row_constancy = 0.0;
  InvarianceStats output_stats;
  bool ones_in_column_space = false;
  std::optional<ClasswiseAffineReport> affine;  // classifier heads with labels

  nlohmann::json to_json() const {
    nlohmann::json j{{"feature_dim", feature_dim},
                     {"head_rank", head_rank},
                     {"null_fraction", null_fraction},
                     {"row_constancy", row_constancy},
                     {"output_mean", output_stats.mean},
                     {"output_std", output_stats.stddev},
                     {"output_min", output_stats.min},
                     {"output_max", output_stats.max},
                     {"ones_in_column_space", ones_in_column_space}};
    if (affine) {
      j["affine_accuracy"] = affine->accuracy;
      j["affine_max_residual"] = affine->max_residual;
      j["affine_classwise_max_residual"] = affine->classwise_max_residual;
      j["affine_between_class_separation"] = affine->between_class_separation;
      j["affine_lambda"] = affine->lambda;
    }
    return j;
  }
};

inline GeometryReport analyze_head_geometry(const DecomposedNet& net,
                                            const Tensor& data) {
  const Matrix head = to_matrix(net.head_w);
  const Matrix feats = feature_matrix(net, data);
  const SubspaceDecomposition dec = decompose_features(head, feats);

  GeometryReport rep;
  rep.feature_dim = head.cols;
  rep.head_rank = dec.bases.rank;
  rep.null_fraction = static_cast<double>(head.cols - dec.bases.rank) /
                      static_cast<double>(head.cols);
  rep.row_constancy = row_constancy_metric(dec);
  rep.output_stats = discriminator_invariance(net, data);
  rep.ones_in_column_space = ones_rowspace_component(head).has_value();
  return rep;
}

inline GeometryReport analyze_classifier_geometry(
    const DecomposedNet& net, const Tensor& data,
    const std::vector<std::size_t>& labels, double min_accuracy = 0.9) {
  GeometryReport rep = analyze_head_geometry(net, data);
  rep.affine = classwise_affine_check(net, data, labels, min_accuracy);
  return rep;
}

}  // namespace ganlab
