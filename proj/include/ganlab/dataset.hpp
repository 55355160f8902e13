#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ganlab/rng.hpp"
#include "ganlab/tensor.hpp"

namespace ganlab {

// Two-dimensional Gaussian mixtures with a closed-form density. Default
// geometry keeps all appreciable mass inside (-1, 1)^2, the range a
// tanh-output generator can reach.
struct DatasetSpec {
  enum class Kind { gaussian_ring, gaussian_grid, labeled_clusters };

  Kind kind = Kind::gaussian_ring;
  std::size_t modes = 8;   // ring/cluster count; grid side length
  double radius = 0.7;     // ring radius; grid half-width; cluster ring radius
  double sigma = 0.05;

  static Kind parse_kind(const std::string& s) {
    if (s == "gaussian-ring") return Kind::gaussian_ring;
    if (s == "gaussian-grid") return Kind::gaussian_grid;
    if (s == "labeled-clusters") return Kind::labeled_clusters;
    throw std::invalid_argument("unknown dataset kind: " + s);
  }

  static std::string kind_name(Kind k) {
    switch (k) {
      case Kind::gaussian_ring: return "gaussian-ring";
      case Kind::gaussian_grid: return "gaussian-grid";
      case Kind::labeled_clusters: return "labeled-clusters";
    }
    throw std::logic_error("kind_name: bad enum");
  }

  nlohmann::json to_json() const {
    return nlohmann::json{{"kind", kind_name(kind)},
                          {"modes", modes},
                          {"radius", radius},
                          {"sigma", sigma}};
  }

  static DatasetSpec from_json(const nlohmann::json& j) {
    DatasetSpec s;
    s.kind = parse_kind(j.at("kind").get<std::string>());
    s.modes = j.at("modes").get<std::size_t>();
    s.radius = j.at("radius").get<double>();
    s.sigma = j.at("sigma").get<double>();
    return s;
  }
};

struct LabeledBatch {
  Tensor x;                         // n x 2
  std::vector<std::size_t> labels;  // mixture component per row
};

struct BoundingBox {
  double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
};

class SyntheticDataset {
 public:
  explicit SyntheticDataset(DatasetSpec spec) : spec_(spec) {
    if (spec.modes == 0) {
      throw std::invalid_argument("SyntheticDataset: modes must be positive");
    }
    if (spec.sigma <= 0.0) {
      throw std::invalid_argument("SyntheticDataset: sigma must be positive");
    }
    switch (spec.kind) {
      case DatasetSpec::Kind::gaussian_ring:
      case DatasetSpec::Kind::labeled_clusters: {
        const double step = 2.0 * 3.14159265358979323846 /
                            static_cast<double>(spec.modes);
        for (std::size_t k = 0; k < spec.modes; ++k) {
          const double a = step * static_cast<double>(k);
          centers_.push_back({spec.radius * std::cos(a),
                              spec.radius * std::sin(a)});
        }
        break;
      }
      case DatasetSpec::Kind::gaussian_grid: {
        const std::size_t side = spec.modes;
        for (std::size_t i = 0; i < side; ++i) {
          for (std::size_t j = 0; j < side; ++j) {
            const double fx =
                side == 1 ? 0.0
                          : -spec.radius + 2.0 * spec.radius *
                                               static_cast<double>(i) /
                                               static_cast<double>(side - 1);
            const double fy =
                side == 1 ? 0.0
                          : -spec.radius + 2.0 * spec.radius *
                                               static_cast<double>(j) /
                                               static_cast<double>(side - 1);
            centers_.push_back({fx, fy});
          }
        }
        break;
      }
    }
  }

  const DatasetSpec& spec() const { return spec_; }
  std::size_t num_components() const { return centers_.size(); }
  std::size_t num_classes() const {
    return spec_.kind == DatasetSpec::Kind::labeled_clusters ? centers_.size()
                                                             : 1;
  }
  const std::vector<std::pair<double, double>>& centers() const {
    return centers_;
  }

  // Mixture density at a point: equal-weight isotropic Gaussians.
  double density(double x, double y) const {
    const double s2 = spec_.sigma * spec_.sigma;
    const double norm = 1.0 / (2.0 * 3.14159265358979323846 * s2);
    double acc = 0.0;
    for (const auto& [cx, cy] : centers_) {
      const double dx = x - cx, dy = y - cy;
      acc += norm * std::exp(-(dx * dx + dy * dy) / (2.0 * s2));
    }
    return acc / static_cast<double>(centers_.size());
  }

  BoundingBox bounding_box(double margin_sigmas = 6.0) const {
    BoundingBox b;
    b.lo_x = b.hi_x = centers_.front().first;
    b.lo_y = b.hi_y = centers_.front().second;
    for (const auto& [cx, cy] : centers_) {
      b.lo_x = std::min(b.lo_x, cx);
      b.hi_x = std::max(b.hi_x, cx);
      b.lo_y = std::min(b.lo_y, cy);
      b.hi_y = std::max(b.hi_y, cy);
    }
    const double m = margin_sigmas * spec_.sigma;
    b.lo_x -= m;
    b.hi_x += m;
    b.lo_y -= m;
    b.hi_y += m;
    return b;
  }

  // Midpoint-rule mass of the density over the bounding box; should be 1 up
  // to truncation and quadrature error.
  double quadrature_mass(std::size_t grid = 400) const {
    const BoundingBox b = bounding_box();
    const double hx = (b.hi_x - b.lo_x) / static_cast<double>(grid);
    const double hy = (b.hi_y - b.lo_y) / static_cast<double>(grid);
    double acc = 0.0;
    for (std::size_t i = 0; i < grid; ++i) {
      const double x = b.lo_x + (static_cast<double>(i) + 0.5) * hx;
      for (std::size_t j = 0; j < grid; ++j) {
        const double y = b.lo_y + (static_cast<double>(j) + 0.5) * hy;
        acc += density(x, y);
      }
    }
    return acc * hx * hy;
  }

  void validate_normalization(double tol = 1e-3) const {
    const double mass = quadrature_mass();
    if (std::abs(mass - 1.0) > tol) {
      throw std::runtime_error("dataset density integrates to " +
                               std::to_string(mass) + ", expected 1");
    }
  }

  // Independent mixture draws: uniform component, Gaussian offset.
  LabeledBatch sample(std::size_t n, SeededRng& rng) const {
    LabeledBatch out;
    out.labels.resize(n);
    std::vector<double> data(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = rng.index(centers_.size());
      out.labels[i] = k;
      data[2 * i] = centers_[k].first + rng.normal(0.0, spec_.sigma);
      data[2 * i + 1] = centers_[k].second + rng.normal(0.0, spec_.sigma);
    }
    out.x = Tensor({n, 2}, std::move(data));
    return out;
  }

  // Class-balanced fixed dataset: component i % modes for row i.
  LabeledBatch materialize(std::size_t n, SeededRng& rng) const {
    LabeledBatch out;
    out.labels.resize(n);
    std::vector<double> data(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t k = i % centers_.size();
      out.labels[i] = k;
      data[2 * i] = centers_[k].first + rng.normal(0.0, spec_.sigma);
      data[2 * i + 1] = centers_[k].second + rng.normal(0.0, spec_.sigma);
    }
    out.x = Tensor({n, 2}, std::move(data));
    return out;
  }

 private:
  DatasetSpec spec_;
  std::vector<std::pair<double, double>> centers_;
};

// Batch-by-index view over a fixed dataset, sampling rows with replacement.
inline std::function<Tensor(std::size_t, SeededRng&)> index_sampler(
    const LabeledBatch& dataset) {
  const Tensor x = dataset.x;
  return [x](std::size_t n, SeededRng& rng) {
    const std::size_t total = x.rows(), cols = x.cols();
    std::vector<double> data(n * cols);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t r = rng.index(total);
      for (std::size_t j = 0; j < cols; ++j) data[i * cols + j] = x.at(r, j);
    }
    return Tensor({n, cols}, std::move(data));
  };
}

}  // namespace ganlab
