#pragma once

#include <cstdint>
#include <vector>

#include "selflabel/matrix.hpp"
#include "selflabel/rng.hpp"

namespace selflabel::eval {

// Single linear layer + softmax cross-entropy trained with full-batch Adam
// on frozen features; returns test accuracy.
double linear_probe(const DenseMatrix& z_train, const std::vector<int>& y_train,
                    const DenseMatrix& z_test, const std::vector<int>& y_test,
                    std::size_t epochs = 200, double lr = 1e-3);

// Fraction of points whose own label wins the majority vote among their
// `neighbours` nearest neighbours (Euclidean, self excluded). Distance ties
// break by point index, vote ties toward the smallest label.
double graph_eval_knn(const DenseMatrix& z, const std::vector<int>& labels,
                      std::size_t neighbours = 21);

struct KmeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
};

// Lloyd's algorithm with k-means++ seeding; `restarts` independent rounds,
// lowest within-cluster sum of squares kept. Empty clusters re-seed at the
// point farthest from its centroid.
KmeansResult kmeans_cluster(const DenseMatrix& z, std::size_t k_clusters,
                            std::size_t restarts, std::uint64_t seed);

struct ClusteringMetrics {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

// ACC under the best label mapping (Hungarian on the contingency table);
// NMI with the geometric-mean normaliser; ARI by pair counting.
ClusteringMetrics clustering_metrics(const std::vector<int>& pred,
                                     const std::vector<int>& truth);

// Minimum-cost assignment for a square cost matrix; returns per-row column.
std::vector<int> hungarian(const DenseMatrix& cost);

// Closed-form least squares (with intercept, ridge 1e-8); sum of squared
// residuals of the fit from z to targets.
double linear_regression_rss(const DenseMatrix& z, const DenseMatrix& targets);

}  // namespace selflabel::eval
