#include "selflabel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>

#include "selflabel/kernels.hpp"
#include "selflabel/prob.hpp"

namespace selflabel::eval {

namespace {

int label_count(const std::vector<int>& labels) {
  int mx = -1;
  for (int l : labels) {
    if (l < 0) throw std::invalid_argument("labels must be non-negative");
    mx = std::max(mx, l);
  }
  return mx + 1;
}

double sq_dist(const DenseMatrix& z, std::size_t a, std::size_t b) {
  double s = 0.0;
  for (std::size_t j = 0; j < z.cols(); ++j) {
    const double d = z(a, j) - z(b, j);
    s += d * d;
  }
  return s;
}

}  // namespace

double linear_probe(const DenseMatrix& z_train, const std::vector<int>& y_train,
                    const DenseMatrix& z_test, const std::vector<int>& y_test,
                    std::size_t epochs, double lr) {
  if (z_train.rows() != y_train.size() || z_test.rows() != y_test.size())
    throw std::invalid_argument("linear_probe: feature/label length mismatch");
  const int c = std::max(label_count(y_train), label_count(y_test));
  if (c < 2) throw std::invalid_argument("linear_probe: need at least two classes");
  const std::size_t n = z_train.rows(), l = z_train.cols();

  DenseMatrix w(l, (std::size_t)c);
  std::vector<double> b((std::size_t)c, 0.0);
  std::vector<double> mw(w.size(), 0.0), vw(w.size(), 0.0);
  std::vector<double> mb(b.size(), 0.0), vb(b.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (std::size_t step = 1; step <= epochs; ++step) {
    DenseMatrix logits = kernels::gemm_nn(z_train, w);
    kernels::add_row_vector(logits, b);
    DenseMatrix p = softmax_rows(logits).mat();
    // d CE / d logits = (p - onehot)/n
    for (std::size_t i = 0; i < n; ++i) p(i, (std::size_t)y_train[i]) -= 1.0;
    for (double& x : p.values()) x /= static_cast<double>(n);
    DenseMatrix gw = kernels::gemm_tn(z_train, p);
    std::vector<double> gb((std::size_t)c, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < (std::size_t)c; ++j) gb[j] += p(i, j);

    const double bc1 = 1.0 - std::pow(beta1, (double)step);
    const double bc2 = 1.0 - std::pow(beta2, (double)step);
    auto adam = [&](std::vector<double>& t, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
      for (std::size_t i = 0; i < t.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        t[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      }
    };
    adam(w.values(), gw.values(), mw, vw);
    adam(b, gb, mb, vb);
  }

  DenseMatrix logits = kernels::gemm_nn(z_test, w);
  kernels::add_row_vector(logits, b);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < z_test.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < (std::size_t)c; ++j)
      if (logits(i, j) > logits(i, best)) best = j;
    if ((int)best == y_test[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(z_test.rows());
}

double graph_eval_knn(const DenseMatrix& z, const std::vector<int>& labels,
                      std::size_t neighbours) {
  const std::size_t n = z.rows();
  if (n != labels.size()) throw std::invalid_argument("graph_eval_knn: length mismatch");
  if (n <= neighbours)
    throw std::invalid_argument("graph_eval_knn: need more points than neighbours");
  const int c = label_count(labels);

  std::size_t positives = 0;
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < n; ++i) {
    dist.clear();
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) dist.emplace_back(sq_dist(z, i, j), j);
    std::partial_sort(dist.begin(), dist.begin() + (std::ptrdiff_t)neighbours,
                      dist.end());
    std::vector<std::size_t> votes((std::size_t)c, 0);
    for (std::size_t t = 0; t < neighbours; ++t)
      ++votes[(std::size_t)labels[dist[t].second]];
    std::size_t winner = 0;
    for (std::size_t j = 1; j < votes.size(); ++j)
      if (votes[j] > votes[winner]) winner = j;
    if ((int)winner == labels[i]) ++positives;
  }
  return static_cast<double>(positives) / static_cast<double>(n);
}

namespace {

double lloyd(const DenseMatrix& z, DenseMatrix& centers, std::vector<int>& assign) {
  const std::size_t n = z.rows(), d = z.cols(), k = centers.rows();
  double prev_inertia = std::numeric_limits<double>::infinity();
  double inertia = prev_inertia;
  for (std::size_t it = 0; it < 300; ++it) {
    inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t bj = 0;
      for (std::size_t cj = 0; cj < k; ++cj) {
        double s = 0.0;
        for (std::size_t f = 0; f < d; ++f) {
          const double diff = z(i, f) - centers(cj, f);
          s += diff * diff;
        }
        if (s < best) {
          best = s;
          bj = cj;
        }
      }
      assign[i] = (int)bj;
      inertia += best;
    }

    DenseMatrix sums(k, d);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[(std::size_t)assign[i]];
      for (std::size_t f = 0; f < d; ++f) sums((std::size_t)assign[i], f) += z(i, f);
    }
    for (std::size_t cj = 0; cj < k; ++cj) {
      if (counts[cj] == 0) {
        // Re-seed at the point farthest from its own centroid.
        double far = -1.0;
        std::size_t fi = 0;
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t f = 0; f < d; ++f) {
            const double diff = z(i, f) - centers((std::size_t)assign[i], f);
            s += diff * diff;
          }
          if (s > far) {
            far = s;
            fi = i;
          }
        }
        for (std::size_t f = 0; f < d; ++f) centers(cj, f) = z(fi, f);
      } else {
        for (std::size_t f = 0; f < d; ++f)
          centers(cj, f) = sums(cj, f) / static_cast<double>(counts[cj]);
      }
    }

    if (prev_inertia < std::numeric_limits<double>::infinity() &&
        std::fabs(prev_inertia - inertia) <= 1e-6 * std::max(prev_inertia, 1e-300))
      break;
    prev_inertia = inertia;
  }
  // Final assignment/inertia against the last centers.
  inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bj = 0;
    for (std::size_t cj = 0; cj < k; ++cj) {
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = z(i, f) - centers(cj, f);
        s += diff * diff;
      }
      if (s < best) {
        best = s;
        bj = cj;
      }
    }
    assign[i] = (int)bj;
    inertia += best;
  }
  return inertia;
}

DenseMatrix kmeanspp_seed(const DenseMatrix& z, std::size_t k, Rng& rng) {
  const std::size_t n = z.rows(), d = z.cols();
  DenseMatrix centers(k, d);
  std::size_t first = (std::size_t)rng.next_below(n);
  for (std::size_t f = 0; f < d; ++f) centers(0, f) = z(first, f);
  std::vector<double> best_d(n, std::numeric_limits<double>::infinity());
  for (std::size_t cj = 1; cj < k; ++cj) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t f = 0; f < d; ++f) {
        const double diff = z(i, f) - centers(cj - 1, f);
        s += diff * diff;
      }
      best_d[i] = std::min(best_d[i], s);
      total += best_d[i];
    }
    double target = rng.next_uniform() * total;
    std::size_t pick = n - 1;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += best_d[i];
      if (acc >= target) {
        pick = i;
        break;
      }
    }
    for (std::size_t f = 0; f < d; ++f) centers(cj, f) = z(pick, f);
  }
  return centers;
}

}  // namespace

KmeansResult kmeans_cluster(const DenseMatrix& z, std::size_t k_clusters,
                            std::size_t restarts, std::uint64_t seed) {
  if (z.rows() < k_clusters)
    throw std::invalid_argument("kmeans_cluster: fewer points than clusters");
  if (k_clusters == 0 || restarts == 0)
    throw std::invalid_argument("kmeans_cluster: k and restarts must be positive");
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  Rng root(seed);
  for (std::size_t r = 0; r < restarts; ++r) {
    Rng rng = root.split("kmeans/restart/" + std::to_string(r));
    DenseMatrix centers = kmeanspp_seed(z, k_clusters, rng);
    std::vector<int> assign(z.rows(), 0);
    const double inertia = lloyd(z, centers, assign);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.assignment = assign;
    }
  }
  return best;
}

std::vector<int> hungarian(const DenseMatrix& cost) {
  if (cost.rows() != cost.cols())
    throw std::invalid_argument("hungarian: cost matrix must be square");
  const std::size_t n = cost.rows();
  // Potentials-based O(n^3) assignment, 1-indexed internally.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = std::numeric_limits<double>::infinity();
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) assignment[p[j] - 1] = (int)(j - 1);
  return assignment;
}

ClusteringMetrics clustering_metrics(const std::vector<int>& pred,
                                     const std::vector<int>& truth) {
  if (pred.size() != truth.size())
    throw std::invalid_argument("clustering_metrics: length mismatch");
  const std::size_t n = pred.size();
  const int cp = label_count(pred), ct = label_count(truth);
  const std::size_t dim = (std::size_t)std::max(cp, ct);

  DenseMatrix table(dim, dim);  // pred x truth counts, zero-padded square
  for (std::size_t i = 0; i < n; ++i)
    table((std::size_t)pred[i], (std::size_t)truth[i]) += 1.0;

  ClusteringMetrics out;

  // ACC: maximise matches == minimise (n - matches).
  DenseMatrix costm(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) costm(i, j) = -table(i, j);
  std::vector<int> match = hungarian(costm);
  double matched = 0.0;
  for (std::size_t i = 0; i < dim; ++i) matched += table(i, (std::size_t)match[i]);
  out.acc = matched / static_cast<double>(n);

  // NMI with geometric-mean normaliser.
  std::vector<double> rp(dim, 0.0), rt(dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      rp[i] += table(i, j);
      rt[j] += table(i, j);
    }
  const double nd = static_cast<double>(n);
  double hp = 0.0, ht = 0.0, mi = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    if (rp[i] > 0) hp -= rp[i] / nd * std::log(rp[i] / nd);
  for (std::size_t j = 0; j < dim; ++j)
    if (rt[j] > 0) ht -= rt[j] / nd * std::log(rt[j] / nd);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j)
      if (table(i, j) > 0)
        mi += table(i, j) / nd *
              std::log(table(i, j) * nd / (rp[i] * rt[j]));
  out.nmi = (hp > 0.0 && ht > 0.0) ? mi / std::sqrt(hp * ht) : 0.0;

  // ARI by pair counting.
  auto comb2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) sum_ij += comb2(table(i, j));
  for (std::size_t i = 0; i < dim; ++i) sum_a += comb2(rp[i]);
  for (std::size_t j = 0; j < dim; ++j) sum_b += comb2(rt[j]);
  const double total = comb2(nd);
  const double expected = sum_a * sum_b / total;
  const double max_index = (sum_a + sum_b) / 2.0;
  out.ari = (max_index - expected) != 0.0
                ? (sum_ij - expected) / (max_index - expected)
                : 1.0;
  return out;
}

double linear_regression_rss(const DenseMatrix& z, const DenseMatrix& targets) {
  if (z.rows() != targets.rows())
    throw std::invalid_argument("linear_regression_rss: row mismatch");
  const std::size_t n = z.rows(), d = z.cols() + 1, t = targets.cols();
  DenseMatrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < z.cols(); ++j) x(i, j) = z(i, j);
    x(i, d - 1) = 1.0;  // intercept
  }
  DenseMatrix a = kernels::gemm_tn(x, x);
  for (std::size_t j = 0; j < d; ++j) a(j, j) += 1e-8;
  DenseMatrix rhs = kernels::gemm_tn(x, targets);

  // Gaussian elimination with partial pivoting on [A | rhs].
  for (std::size_t col = 0; col < d; ++col) {
    std::size_t piv = col;
    for (std::size_t i = col + 1; i < d; ++i)
      if (std::fabs(a(i, col)) > std::fabs(a(piv, col))) piv = i;
    if (piv != col) {
      for (std::size_t j = 0; j < d; ++j) std::swap(a(col, j), a(piv, j));
      for (std::size_t j = 0; j < t; ++j) std::swap(rhs(col, j), rhs(piv, j));
    }
    const double diag = a(col, col);
    for (std::size_t i = col + 1; i < d; ++i) {
      const double f = a(i, col) / diag;
      if (f == 0.0) continue;
      for (std::size_t j = col; j < d; ++j) a(i, j) -= f * a(col, j);
      for (std::size_t j = 0; j < t; ++j) rhs(i, j) -= f * rhs(col, j);
    }
  }
  DenseMatrix w(d, t);
  for (std::size_t i = d; i-- > 0;) {
    for (std::size_t j = 0; j < t; ++j) {
      double s = rhs(i, j);
      for (std::size_t c2 = i + 1; c2 < d; ++c2) s -= a(i, c2) * w(c2, j);
      w(i, j) = s / a(i, i);
    }
  }

  DenseMatrix fit = kernels::gemm_nn(x, w);
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < t; ++j) {
      const double r = fit(i, j) - targets(i, j);
      rss += r * r;
    }
  return rss;
}

}  // namespace selflabel::eval
