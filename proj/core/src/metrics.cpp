#include "daal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "daal/error.hpp"

namespace daal {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // Number of inserted ranks < i.
  std::uint64_t prefix(std::size_t i) const {
    std::uint64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

// Per event: how many low/high patients are at risk (t_j >= t_i).
struct EventRiskSet {
  bool high;
  double n_low, n_high;
};

std::vector<EventRiskSet> event_risk_sets(const RiskGroup& groups,
                                          std::span<const SurvivalLabel> labels) {
  const std::size_t n = labels.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a].time > labels[b].time; });
  std::vector<EventRiskSet> out;
  double n_low = 0, n_high = 0;
  for (std::size_t g = 0; g < n;) {
    std::size_t end = g;
    while (end < n && labels[idx[end]].time == labels[idx[g]].time) {
      (groups.assignment[idx[end]] == RiskLevel::High ? n_high : n_low) += 1;
      ++end;
    }
    for (std::size_t i = g; i < end; ++i) {
      if (labels[idx[i]].event) {
        out.push_back({groups.assignment[idx[i]] == RiskLevel::High, n_low, n_high});
      }
    }
    g = end;
  }
  return out;
}

double log_likelihood(double beta, std::span<const EventRiskSet> events) {
  double ll = 0.0;
  for (const auto& e : events) {
    // log(n_low + n_high e^beta), evaluated without overflow.
    const double a = e.n_low > 0 ? std::log(e.n_low) : -INFINITY;
    const double b = e.n_high > 0 ? std::log(e.n_high) + beta : -INFINITY;
    const double m = std::max(a, b);
    ll += (e.high ? beta : 0.0) - (m + std::log(std::exp(a - m) + std::exp(b - m)));
  }
  return ll;
}

}  // namespace

double c_index(std::span<const double> risks, std::span<const SurvivalLabel> labels) {
  const std::size_t n = risks.size();
  if (n != labels.size()) throw InputError("c_index: risk/label count mismatch");
  if (n < 2) throw InputError("c_index: need at least two patients");
  for (double r : risks) {
    if (std::isnan(r)) throw NumericalError("c_index: NaN risk");
  }

  std::vector<double> sorted(risks.begin(), risks.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), risks[i]) -
                                       sorted.begin());
  }

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return labels[a].time > labels[b].time; });

  // Sweep from the latest time; the tree holds every patient with a strictly
  // later time than the current group.
  Fenwick tree(sorted.size());
  std::uint64_t inserted = 0, concordant = 0, tied = 0, comparable = 0;
  for (std::size_t g = 0; g < n;) {
    std::size_t end = g;
    while (end < n && labels[idx[end]].time == labels[idx[g]].time) ++end;
    for (std::size_t i = g; i < end; ++i) {
      const std::size_t k = idx[i];
      if (!labels[k].event) continue;
      const std::uint64_t below = tree.prefix(rank[k]);
      const std::uint64_t equal = tree.prefix(rank[k] + 1) - below;
      concordant += below;
      tied += equal;
      comparable += inserted;
    }
    for (std::size_t i = g; i < end; ++i) tree.add(rank[idx[i]]);
    inserted += end - g;
    g = end;
  }
  if (comparable == 0) throw InputError("c_index: no comparable pairs");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
         static_cast<double>(comparable);
}

std::size_t RiskGroup::high_count() const noexcept {
  return static_cast<std::size_t>(std::count(assignment.begin(), assignment.end(), RiskLevel::High));
}

double median(std::span<const double> values) {
  if (values.empty()) throw InputError("median: empty input");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

RiskGroup median_split(std::span<const double> train_risks, std::span<const double> eval_risks) {
  RiskGroup g;
  g.threshold = median(train_risks);
  if (!std::isfinite(g.threshold)) throw NumericalError("median_split: non-finite threshold");
  g.assignment.reserve(eval_risks.size());
  for (double r : eval_risks) g.assignment.push_back(r > g.threshold ? RiskLevel::High : RiskLevel::Low);
  return g;
}

RiskGroup majority_vote(std::span<const RiskGroup> folds) {
  if (folds.empty()) throw InputError("majority_vote: no folds");
  const std::size_t n = folds.front().assignment.size();
  RiskGroup out;
  out.assignment.resize(n);
  for (const auto& f : folds) {
    if (f.assignment.size() != n) throw InputError("majority_vote: folds cover different patients");
    out.threshold += f.threshold / static_cast<double>(folds.size());
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t high = 0;
    for (const auto& f : folds) high += f.assignment[i] == RiskLevel::High ? 1 : 0;
    out.assignment[i] = 2 * high >= folds.size() ? RiskLevel::High : RiskLevel::Low;
  }
  return out;
}

double group_log_likelihood(double beta, const RiskGroup& groups,
                            std::span<const SurvivalLabel> labels) {
  if (groups.assignment.size() != labels.size()) {
    throw InputError("hazard_ratio: group/label count mismatch");
  }
  const auto events = event_risk_sets(groups, labels);
  return log_likelihood(beta, events);
}

HazardRatioFit hazard_ratio(const RiskGroup& groups, std::span<const SurvivalLabel> labels) {
  if (groups.assignment.size() != labels.size()) {
    throw InputError("hazard_ratio: group/label count mismatch");
  }
  HazardRatioFit fit;
  const std::size_t n_high = groups.high_count();
  if (n_high == 0 || n_high == labels.size()) {
    fit.diagnostic = "one risk group is empty";
    return fit;
  }
  const auto events = event_risk_sets(groups, labels);
  if (events.empty()) {
    fit.diagnostic = "no events";
    return fit;
  }
  // The likelihood is monotone (infinite MLE) exactly when every event is
  // fully explained by group membership in the beta -> +/-inf limit.
  const bool diverges_up = std::all_of(events.begin(), events.end(),
                                       [](const auto& e) { return e.high == (e.n_high > 0); });
  const bool diverges_down = std::all_of(events.begin(), events.end(),
                                         [](const auto& e) { return e.high == (e.n_low == 0); });
  if (diverges_up || diverges_down) {
    fit.diagnostic = diverges_up ? "separation: likelihood increases without bound as beta -> +inf"
                                 : "separation: likelihood increases without bound as beta -> -inf";
    fit.beta = diverges_up ? INFINITY : -INFINITY;
    fit.hr = std::exp(fit.beta);
    return fit;
  }

  double beta = 0.0;
  double ll = log_likelihood(beta, events);
  fit.log_likelihood_trace.push_back(ll);
  constexpr int kMaxIterations = 100;
  constexpr double kTolerance = 1e-10;
  for (fit.iterations = 1; fit.iterations <= kMaxIterations; ++fit.iterations) {
    double score = 0.0, information = 0.0;
    for (const auto& e : events) {
      // p = n_high e^beta / (n_low + n_high e^beta)
      const double p = e.n_high == 0 ? 0.0
                       : e.n_low == 0 ? 1.0
                                      : 1.0 / (1.0 + e.n_low / e.n_high * std::exp(-beta));
      score += (e.high ? 1.0 : 0.0) - p;
      information += p * (1.0 - p);
    }
    if (!(information > 0.0)) {
      fit.diagnostic = "zero information";
      break;
    }
    double step = score / information;
    double next_ll = log_likelihood(beta + step, events);
    int halvings = 0;
    while (!(next_ll >= ll) && halvings < 60) {
      step *= 0.5;
      next_ll = log_likelihood(beta + step, events);
      ++halvings;
    }
    if (!(next_ll >= ll)) {
      // No ascent possible at double precision: we are at the maximum.
      fit.converged = std::abs(step) < 1e-6;
      if (!fit.converged) fit.diagnostic = "step halving failed";
      break;
    }
    beta += step;
    ll = next_ll;
    fit.log_likelihood_trace.push_back(ll);
    if (std::abs(step) < kTolerance) {
      fit.converged = true;
      break;
    }
  }
  if (fit.iterations > kMaxIterations) {
    fit.iterations = kMaxIterations;
    fit.diagnostic = "iteration limit reached";
  }
  fit.beta = beta;
  fit.hr = std::exp(beta);
  return fit;
}

}  // namespace daal
