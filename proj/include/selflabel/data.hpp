#pragma once

#include <optional>
#include <string>
#include <vector>

#include "selflabel/matrix.hpp"
#include "selflabel/rng.hpp"

namespace selflabel {

struct Dataset {
  DenseMatrix x;                              // n x d
  std::optional<std::vector<int>> labels;     // length n
  std::optional<DenseMatrix> targets;         // n x t, for regression eval
  std::string name;
  std::string provenance;

  std::size_t n() const { return x.rows(); }
  std::size_t dim() const { return x.cols(); }
};

// Strict numeric CSV ('.' decimal, no quoting). Labels occupy the last
// column when flagged; regression targets the trailing `target_cols`
// columns before any label column.
Dataset load_csv(const std::string& path, bool has_labels = false,
                 std::size_t target_cols = 0);
void save_csv(const Dataset& ds, const std::string& path);

// Per-column map to [0,1]; constant columns map to 0. Idempotent.
Dataset minmax_normalize(const Dataset& ds);

// Gaussian blobs around centres drawn uniformly on the unit sphere. The
// noise has per-coordinate sigma = spread / sqrt(dim), so the expected
// within-class radius is `spread` regardless of dimension.
Dataset make_blobs(Rng& rng, std::size_t classes, std::size_t per_class,
                   std::size_t dim, double spread);

Dataset make_two_moons(Rng& rng, std::size_t n, double noise);

// epsilon = 0.2 * mean row l2-norm.
double suggest_epsilon(const Dataset& ds);

}  // namespace selflabel
