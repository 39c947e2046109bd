#include "bop/metrics/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "bop/common/stats.hpp"

namespace bop::metrics {

DiversityReport policy_diversity(const std::vector<const ensemble::PolicyHead*>& heads,
                                 const std::vector<std::vector<double>>& probe_states) {
  if (probe_states.empty()) throw std::invalid_argument("policy_diversity: empty probe set");
  const int k = static_cast<int>(heads.size());
  DiversityReport rep;
  rep.heads = k;
  rep.l1.assign(static_cast<std::size_t>(k) * k, 0.0);
  rep.cosine.assign(static_cast<std::size_t>(k) * k, 0.0);

  // Probe probabilities once per (head, state).
  std::vector<std::vector<std::vector<double>>> probs(k);
  for (int i = 0; i < k; ++i) {
    probs[i].reserve(probe_states.size());
    for (const auto& s : probe_states) probs[i].push_back(heads[i]->action_probs(s));
  }

  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      double l1 = 0.0;
      double cos = 0.0;
      for (std::size_t si = 0; si < probe_states.size(); ++si) {
        const auto& pi = probs[i][si];
        const auto& pj = probs[j][si];
        double d = 0.0, dot = 0.0, ni = 0.0, nj = 0.0;
        for (std::size_t a = 0; a < pi.size(); ++a) {
          d += std::fabs(pi[a] - pj[a]);
          dot += pi[a] * pj[a];
          ni += pi[a] * pi[a];
          nj += pj[a] * pj[a];
        }
        l1 += d;
        cos += dot / (std::sqrt(ni) * std::sqrt(nj));
      }
      const double inv = 1.0 / static_cast<double>(probe_states.size());
      rep.l1[static_cast<std::size_t>(i) * k + j] = l1 * inv;
      rep.cosine[static_cast<std::size_t>(i) * k + j] = cos * inv;
    }
  }

  if (k > 1) {
    double sl1 = 0.0, scos = 0.0;
    int count = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) {
        if (i == j) continue;
        sl1 += rep.l1[static_cast<std::size_t>(i) * k + j];
        scos += rep.cosine[static_cast<std::size_t>(i) * k + j];
        ++count;
      }
    }
    rep.mean_offdiag_l1 = sl1 / count;
    rep.mean_offdiag_cosine = scos / count;
  } else {
    rep.mean_offdiag_l1 = 0.0;
    rep.mean_offdiag_cosine = 1.0;
  }
  return rep;
}

MarginalCostReport marginal_head_cost(const std::vector<int>& head_counts,
                                      const std::vector<double>& op_counts) {
  if (head_counts.size() != op_counts.size() || head_counts.size() < 2)
    throw std::invalid_argument("marginal_head_cost: need >= 2 aligned measurements");
  std::vector<double> ks(head_counts.begin(), head_counts.end());
  const auto fit = stats::least_squares(ks, op_counts);
  MarginalCostReport rep;
  rep.slope = fit.slope;
  rep.intercept = fit.intercept;
  rep.residuals = fit.residuals;
  for (std::size_t i = 0; i + 1 < head_counts.size(); ++i) {
    const double dk = static_cast<double>(head_counts[i + 1] - head_counts[i]);
    if (dk <= 0) throw std::invalid_argument("marginal_head_cost: head counts must increase");
    rep.increments.push_back((op_counts[i + 1] - op_counts[i]) / dk);
  }
  double mean_inc = 0.0;
  for (double v : rep.increments) mean_inc += v;
  mean_inc /= static_cast<double>(rep.increments.size());
  for (double v : rep.increments) {
    const double dev = std::fabs(v - mean_inc) / std::fabs(mean_inc);
    rep.max_increment_rel_deviation = std::max(rep.max_increment_rel_deviation, dev);
  }
  return rep;
}

}  // namespace bop::metrics
