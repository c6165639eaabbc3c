#include "prt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prt/container.hpp"
#include "prt/errors.hpp"
#include "prt/kernels.hpp"
#include "prt/rng.hpp"

namespace prt::clustering {

Matrix extract_projection(const nn::NetworkState& model, const Matrix& samples) {
  return nn::representation(model, samples);
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

Matrix plus_plus_seeds(const Matrix& x, std::size_t k, Rng& rng) {
  const std::size_t m = x.rows();
  Matrix centers(k, x.cols());
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::size_t first = std::min(m - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(m)));
  std::ranges::copy(x.row(first), centers.row(0).begin());

  Vector nearest(m);
  for (std::size_t i = 0; i < m; ++i) nearest[i] = squared_distance(x.row(i), centers.row(0));

  for (std::size_t c = 1; c < k; ++c) {
    const double total = std::accumulate(nearest.begin(), nearest.end(), 0.0);
    std::size_t pick = m - 1;
    if (total > 0.0) {
      const double target = unit(rng) * total;
      double running = 0.0;
      for (std::size_t i = 0; i < m; ++i) {
        running += nearest[i];
        if (running > target && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Rounding can leave `target` beyond the last partial sum.
      while (nearest[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = std::min(m - 1, static_cast<std::size_t>(unit(rng) * static_cast<double>(m)));
    }
    std::ranges::copy(x.row(pick), centers.row(c).begin());
    for (std::size_t i = 0; i < m; ++i)
      nearest[i] = std::min(nearest[i], squared_distance(x.row(i), centers.row(c)));
  }
  return centers;
}

// Moves the farthest remaining point into each empty cluster. Returns true if
// any cluster was repaired.
bool repair_empty(const Matrix& x, std::vector<int>& labels, Vector& dist, Matrix& centers) {
  const std::size_t k = centers.rows();
  std::vector<std::size_t> sizes(k, 0);
  for (int l : labels) ++sizes[static_cast<std::size_t>(l)];
  bool repaired = false;
  for (std::size_t j = 0; j < k; ++j) {
    if (sizes[j] > 0) continue;
    std::size_t far = x.rows();
    double best = -1.0;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      if (sizes[static_cast<std::size_t>(labels[i])] < 2) continue;
      if (dist[i] > best) {
        best = dist[i];
        far = i;
      }
    }
    if (far == x.rows()) break;  // fewer distinct donors than empty clusters
    --sizes[static_cast<std::size_t>(labels[far])];
    labels[far] = static_cast<int>(j);
    ++sizes[j];
    dist[far] = 0.0;
    std::ranges::copy(x.row(far), centers.row(j).begin());
    repaired = true;
  }
  return repaired;
}

Matrix cluster_means(const Matrix& x, const std::vector<int>& labels, const Matrix& previous) {
  const std::size_t k = previous.rows();
  Matrix sums(k, x.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto j = static_cast<std::size_t>(labels[i]);
    ++counts[j];
    auto row = sums.row(j);
    const auto xi = x.row(i);
    for (std::size_t p = 0; p < row.size(); ++p) row[p] += xi[p];
  }
  for (std::size_t j = 0; j < k; ++j) {
    auto row = sums.row(j);
    if (counts[j] == 0) {
      std::ranges::copy(previous.row(j), row.begin());
      continue;
    }
    for (double& v : row) v /= static_cast<double>(counts[j]);
  }
  return sums;
}

}  // namespace

ClusterModel kmeans_fit(const Matrix& features, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters, double tol) {
  if (k < 2) throw ValidationError("k-means needs at least two clusters");
  if (features.rows() < k)
    throw ValidationError("k-means needs at least k=" + std::to_string(k) + " samples, got " +
                          std::to_string(features.rows()));
  if (max_iters == 0) throw ValidationError("max_iters must be positive");
  if (tol < 0.0) throw ValidationError("tol must be non-negative");
  if (!all_finite(features.values())) throw ValidationError("features contain non-finite values");

  Rng rng(seed);
  ClusterModel model;
  model.k = k;
  model.seed = seed;
  Matrix centers = plus_plus_seeds(features, k, rng);

  std::vector<int> labels(features.rows());
  Vector dist(features.rows());
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    kernels::nearest_center(features, centers, labels, dist);
    const bool repaired = repair_empty(features, labels, dist, centers);
    model.inertia_history.push_back(std::accumulate(dist.begin(), dist.end(), 0.0));

    Matrix next = cluster_means(features, labels, centers);
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      shift = std::max(shift, std::sqrt(squared_distance(next.row(j), centers.row(j))));
    centers = std::move(next);
    if (shift < tol && !repaired) break;
  }

  kernels::nearest_center(features, centers, labels, dist);
  if (repair_empty(features, labels, dist, centers))
    centers = cluster_means(features, labels, centers);
  model.inertia = std::accumulate(dist.begin(), dist.end(), 0.0);
  model.inertia_history.push_back(model.inertia);
  model.centroids = std::move(centers);
  model.assignments = std::move(labels);
  return model;
}

std::vector<int> kmeans_assign(const ClusterModel& model, const Matrix& features) {
  if (features.cols() != model.centroids.cols())
    throw ValidationError("feature dimension " + std::to_string(features.cols()) +
                          " differs from centroid dimension " +
                          std::to_string(model.centroids.cols()));
  std::vector<int> labels(features.rows());
  Vector dist(features.rows());
  kernels::nearest_center(features, model.centroids, labels, dist);
  return labels;
}

PseudoLabelResult make_pseudo_labels(const nn::NetworkState& source, const Matrix& unlabeled,
                                     std::size_t k, std::uint64_t seed, std::size_t max_iters,
                                     double tol) {
  const Matrix projected = extract_projection(source, unlabeled);
  PseudoLabelResult out;
  out.model = kmeans_fit(projected, k, seed, max_iters, tol);
  out.pseudo = {unlabeled, out.model.assignments, k};
  return out;
}

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model) {
  io::Container c;
  c.manifest.set("kind", "cluster");
  c.manifest.set("k", model.k);
  c.manifest.set("dim", model.centroids.cols());
  c.manifest.set("seed", model.seed);
  c.manifest.set("history", model.inertia_history.size());
  c.reals.assign(model.centroids.values().begin(), model.centroids.values().end());
  c.reals.push_back(model.inertia);
  c.reals.insert(c.reals.end(), model.inertia_history.begin(), model.inertia_history.end());
  c.ints.assign(model.assignments.begin(), model.assignments.end());
  io::write_container(path, c);
}

ClusterModel load_cluster_model(const std::filesystem::path& path) {
  const io::Container c = io::read_container(path);
  if (c.manifest.get("kind") != "cluster")
    throw IoError("'" + path.string() + "' is not a cluster model");
  ClusterModel m;
  m.k = c.manifest.get_u64("k");
  m.seed = c.manifest.get_u64("seed");
  const std::size_t dim = c.manifest.get_u64("dim");
  const std::size_t history = c.manifest.get_u64("history");
  if (c.reals.size() != m.k * dim + 1 + history)
    throw IoError("'" + path.string() + "' cluster payload has the wrong length");
  m.centroids = Matrix(m.k, dim);
  std::copy_n(c.reals.begin(), m.k * dim, m.centroids.data());
  m.inertia = c.reals[m.k * dim];
  m.inertia_history.assign(c.reals.begin() + static_cast<std::ptrdiff_t>(m.k * dim + 1),
                           c.reals.end());
  m.assignments.assign(c.ints.begin(), c.ints.end());
  return m;
}

}  // namespace prt::clustering
