#pragma once

#include <cstdint>
#include <vector>

#include "bop/ensemble/policy.hpp"

namespace bop::metrics {

struct DiversityReport {
  int heads = 0;
  std::vector<double> l1;      // K*K row-major, mean total-variation-style distance
  std::vector<double> cosine;  // K*K row-major, mean cosine similarity of prob vectors
  double mean_offdiag_l1 = 0.0;
  double mean_offdiag_cosine = 1.0;
};

// L1 entry (i,j): mean over probe states of sum_a |pi_i(a|s) - pi_j(a|s)|.
// Cosine entry: mean cosine similarity of the probability vectors.
DiversityReport policy_diversity(const std::vector<const ensemble::PolicyHead*>& heads,
                                 const std::vector<std::vector<double>>& probe_states);

struct MarginalCostReport {
  double slope = 0.0;      // ops per head
  double intercept = 0.0;  // shared ops
  std::vector<double> residuals;
  // Pairwise per-head increments (ops_j - ops_i) / (K_j - K_i) and their
  // worst relative deviation from the mean increment.
  std::vector<double> increments;
  double max_increment_rel_deviation = 0.0;
};

// Fits total per-iteration op counts against K and reports how constant the
// per-head marginal cost is.
MarginalCostReport marginal_head_cost(const std::vector<int>& head_counts,
                                      const std::vector<double>& op_counts);

}  // namespace bop::metrics
