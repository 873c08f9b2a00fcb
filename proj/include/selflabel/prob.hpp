#pragma once

#include "selflabel/matrix.hpp"

namespace selflabel {

// Floor applied inside log arguments so sparse targets never produce -inf.
inline constexpr double kLogFloor = 1e-12;

// m x k matrix whose rows live on the probability simplex.
class DistributionBatch {
 public:
  DistributionBatch() = default;

  // Validates row sums (tolerance 1e-9) and entry range.
  explicit DistributionBatch(DenseMatrix m);

  // Skips validation; for internal construction where rows are normalised
  // by definition.
  static DistributionBatch unchecked(DenseMatrix m) {
    DistributionBatch d;
    d.mat_ = std::move(m);
    return d;
  }

  const DenseMatrix& mat() const { return mat_; }
  DenseMatrix& mat() { return mat_; }
  std::size_t rows() const { return mat_.rows(); }
  std::size_t cols() const { return mat_.cols(); }

 private:
  DenseMatrix mat_;
};

// Row-wise softmax(logits / temperature), max-subtracted for stability.
DistributionBatch softmax_rows(const DenseMatrix& logits, double temperature = 1.0);

// Per-row entropy: -(1/m) sum_ij p_ij log p_ij, with 0 log 0 := 0.
double entropy(const DistributionBatch& dist);

// (1/m) sum_ij pi_ij log(pi_ij / gamma_ij); gamma floored at kLogFloor.
double kl_divergence(const DistributionBatch& pi, const DistributionBatch& gamma);

}  // namespace selflabel
