#pragma once

// Pseudo-label generation: unlabeled target samples are projected through the
// source model's representation layers and K-means clustered; the cluster
// indices become the labels of the pre-text task.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "prt/matrix.hpp"
#include "prt/nn.hpp"

namespace prt::clustering {

struct ClusterModel {
  Matrix centroids;  // k x p
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double inertia = 0.0;  // sum of squared distances of the final assignment
  /// Inertia after every assignment step; the last entry equals `inertia`.
  std::vector<double> inertia_history;
  /// Cluster index of every fitted point under the final centroids.
  std::vector<int> assignments;

  bool operator==(const ClusterModel&) const = default;
};

struct PseudoLabeledSet {
  Matrix features;  // original samples, not projections
  std::vector<int> labels;
  std::size_t cluster_count = 0;
};

/// Representation-layer output of `model` for every sample row.
Matrix extract_projection(const nn::NetworkState& model, const Matrix& samples);

/// Lloyd iterations from k-means++ seeds. Stops once no centroid moves by
/// `tol` or more (Euclidean) or after `max_iters` assignment steps. A cluster
/// that loses all its points is re-seeded with the point farthest from its
/// current centroid.
ClusterModel kmeans_fit(const Matrix& features, std::size_t k, std::uint64_t seed,
                        std::size_t max_iters = 100, double tol = 1e-6);

/// Nearest-centroid labels, lowest centroid index on ties.
std::vector<int> kmeans_assign(const ClusterModel& model, const Matrix& features);

struct PseudoLabelResult {
  ClusterModel model;
  PseudoLabeledSet pseudo;
};

/// Clusters the projections of `unlabeled` under `source` into `k` groups.
PseudoLabelResult make_pseudo_labels(const nn::NetworkState& source, const Matrix& unlabeled,
                                     std::size_t k, std::uint64_t seed,
                                     std::size_t max_iters = 100, double tol = 1e-6);

void save_cluster_model(const std::filesystem::path& path, const ClusterModel& model);
ClusterModel load_cluster_model(const std::filesystem::path& path);

}  // namespace prt::clustering
