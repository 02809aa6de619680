#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "daal/survival.hpp"

namespace daal {

/// Harrell's concordance index. A pair (i, j) is comparable when
/// t_i < t_j and patient i had an event; it scores 1 when r_i > r_j, 0.5 on
/// tied risks, 0 otherwise. Throws InputError when no pair is comparable.
double c_index(std::span<const double> risks, std::span<const SurvivalLabel> labels);

enum class RiskLevel : std::uint8_t { Low = 0, High = 1 };

struct RiskGroup {
  std::vector<RiskLevel> assignment;
  double threshold = 0.0;

  std::size_t high_count() const noexcept;
};

/// Median with the mean of the two central values for even counts.
double median(std::span<const double> values);

/// Threshold at the training-set median; a patient is high risk iff its risk
/// is strictly above the threshold.
RiskGroup median_split(std::span<const double> train_risks, std::span<const double> eval_risks);

/// Per-patient modal group across folds; ties go to High. The resulting
/// threshold is the mean of the fold thresholds and is informational only.
RiskGroup majority_vote(std::span<const RiskGroup> folds);

struct HazardRatioFit {
  double beta = 0.0;  // log hazard ratio, high vs. low
  double hr = 1.0;
  bool converged = false;
  int iterations = 0;
  std::string diagnostic;
  std::vector<double> log_likelihood_trace;  // value after each accepted step, starting at beta = 0
};

/// Log partial likelihood of the univariate Cox model r_i = beta * 1(high).
double group_log_likelihood(double beta, const RiskGroup& groups,
                            std::span<const SurvivalLabel> labels);

/// Newton's method with step halving on the univariate Cox model. Stops when
/// |step| < 1e-10 or after 100 iterations. Monotone likelihoods (an empty
/// group, no events, or separation) return converged = false with a
/// diagnostic instead of throwing.
HazardRatioFit hazard_ratio(const RiskGroup& groups, std::span<const SurvivalLabel> labels);

}  // namespace daal
