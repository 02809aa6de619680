#include "daal/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "daal/binary_io.hpp"
#include "daal/error.hpp"
#include "daal/metrics.hpp"

namespace daal {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw InputError("cannot parse " + what + ": '" + s + "'");
  }
  return v;
}

}  // namespace

fs::path Manifest::resolve(const ManifestRow& row) const {
  return row.feature_path.is_absolute() ? row.feature_path : base_dir / row.feature_path;
}

Manifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  if (!std::getline(in, line) ||
      split_csv_line(line) != std::vector<std::string>{"patient_id", "time", "event", "feature_path"}) {
    throw InputError(path.string() + ": header must be patient_id,time,event,feature_path");
  }
  std::set<std::string> seen;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cols = split_csv_line(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cols.size() != 4) throw InputError(where + ": expected 4 columns");
    ManifestRow row;
    row.patient_id = cols[0];
    row.label.time = parse_double(cols[1], where + " time");
    if (!(row.label.time > 0.0) || !std::isfinite(row.label.time)) {
      throw InputError(where + ": time must be positive");
    }
    if (cols[2] != "0" && cols[2] != "1") throw InputError(where + ": event must be 0 or 1");
    row.label.event = cols[2] == "1";
    row.feature_path = cols[3];
    if (row.patient_id.empty()) throw InputError(where + ": empty patient_id");
    if (!seen.insert(row.patient_id).second) {
      throw InputError(where + ": duplicate patient_id " + row.patient_id);
    }
    m.rows.push_back(std::move(row));
  }
  if (m.rows.empty()) throw InputError(path.string() + ": no patients");
  return m;
}

void write_manifest(const fs::path& path, const Manifest& m) {
  std::ostringstream out;
  out << "patient_id,time,event,feature_path\n";
  for (const auto& r : m.rows) {
    out << r.patient_id << ',' << format_double(r.label.time) << ',' << (r.label.event ? 1 : 0)
        << ',' << r.feature_path.generic_string() << '\n';
  }
  io::write_text(path, out.str());
}

std::vector<std::string> Cohort::ids() const {
  std::vector<std::string> out;
  out.reserve(bags.size());
  for (const auto& b : bags) out.push_back(b.patient_id);
  return out;
}

Cohort load_cohort(const Manifest& m) {
  Cohort c;
  for (const auto& row : m.rows) {
    c.bags.push_back(read_fvec(m.resolve(row), row.patient_id));
    c.labels.push_back(row.label);
  }
  const std::size_t f = c.bags.front().feature_dim();
  for (const auto& b : c.bags) {
    if (b.feature_dim() != f) throw InputError("cohort: feature dims differ across patients");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

SplitPlan stratified_split(std::span<const std::string> ids, std::span<const SurvivalLabel> labels,
                           double test_fraction, std::size_t n_folds, std::uint64_t seed) {
  if (ids.size() != labels.size()) throw InputError("split: id/label count mismatch");
  if (n_folds == 0) throw InputError("split: need at least one fold");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InputError("split: test fraction must be in [0, 1)");
  }
  if (std::set<std::string>(ids.begin(), ids.end()).size() != ids.size()) {
    throw InputError("split: duplicate patient ids");
  }
  std::vector<std::size_t> events, censored;
  for (std::size_t i = 0; i < ids.size(); ++i) (labels[i].event ? events : censored).push_back(i);

  Rng rng(seed);
  shuffle(events, rng);
  shuffle(censored, rng);

  const std::size_t n = ids.size();
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::size_t test_events = n == 0 ? 0
                                   : static_cast<std::size_t>(std::llround(
                                         static_cast<double>(n_test) * events.size() / n));
  test_events = std::min(test_events, events.size());
  std::size_t test_censored = std::min(n_test - test_events, censored.size());
  test_events = std::min(n_test - test_censored, events.size());

  if (events.size() - test_events < n_folds) {
    throw InputError("split: " + std::to_string(events.size()) +
                     " events cannot give every fold an event");
  }

  SplitPlan plan;
  plan.seed = seed;
  plan.folds.resize(n_folds);
  for (std::size_t i = 0; i < test_events; ++i) plan.test_ids.push_back(ids[events[i]]);
  for (std::size_t i = 0; i < test_censored; ++i) plan.test_ids.push_back(ids[censored[i]]);
  std::size_t deal = 0;
  for (std::size_t i = test_events; i < events.size(); ++i) {
    plan.folds[deal++ % n_folds].push_back(ids[events[i]]);
  }
  for (std::size_t i = test_censored; i < censored.size(); ++i) {
    plan.folds[deal++ % n_folds].push_back(ids[censored[i]]);
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Synthetic cohorts
// ---------------------------------------------------------------------------

SynthCohort synth_generate(const SynthConfig& cfg) {
  if (cfg.n_patients == 0 || cfg.feature_dim == 0) throw InputError("synth: empty cohort");
  if (cfg.slices < 3) throw InputError("synth: need at least 3 slices");
  if (cfg.signal_dim >= cfg.feature_dim) throw InputError("synth: signal_dim out of range");
  if (!(cfg.censor_target >= 0.0 && cfg.censor_target < 1.0)) {
    throw InputError("synth: censor target must be in [0, 1)");
  }
  if (!(cfg.anchor_boost >= 0.0)) throw InputError("synth: anchor boost must be non-negative");

  // Three contiguous plane blocks; the anchor sits mid-block.
  std::array<std::size_t, 3> anchors{};
  std::size_t start = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    const std::size_t len = cfg.slices / 3 + (p < cfg.slices % 3 ? 1 : 0);
    anchors[p] = start + len / 2;
    start += len;
  }

  Rng rng(cfg.seed);
  SynthCohort out;
  const std::size_t n = cfg.n_patients;
  const std::size_t pad = std::max<std::size_t>(std::to_string(n - 1).size(), 4);
  Vec event_time(n), censor_draw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double rho = rng.normal();
    FeatureBag bag;
    std::string digits = std::to_string(i);
    if (digits.size() < pad) digits.insert(0, pad - digits.size(), '0');
    bag.patient_id = "P" + digits;
    bag.anchor_pos = anchors;
    bag.features = Mat(cfg.slices, cfg.feature_dim);
    for (std::size_t s = 0; s < cfg.slices; ++s) {
      auto row = bag.features.row(s);
      for (double& v : row) v = rng.normal();
      row[cfg.signal_dim] += rho;
      if (s == anchors[0] || s == anchors[1] || s == anchors[2]) {
        row[cfg.signal_dim] += cfg.anchor_boost * rho;
      }
      for (double& v : row) v = static_cast<double>(static_cast<float>(v));
    }
    event_time[i] = rng.exponential(std::exp(rho));
    censor_draw[i] = rng.exponential(1.0);
    out.latent_risk.push_back(rho);
    out.cohort.bags.push_back(std::move(bag));
  }

  // Censoring time C_i = censor_draw_i / rate; patient i is censored iff
  // rate > censor_draw_i / event_time_i. Pick the rate between the m-th and
  // (m+1)-th smallest ratio so exactly m patients are censored.
  const auto m = static_cast<std::size_t>(std::llround(cfg.censor_target * static_cast<double>(n)));
  double rate = 0.0;
  if (m > 0) {
    Vec ratio(n);
    for (std::size_t i = 0; i < n; ++i) ratio[i] = censor_draw[i] / event_time[i];
    std::sort(ratio.begin(), ratio.end());
    rate = m < n ? 0.5 * (ratio[m - 1] + ratio[m]) : 2.0 * ratio[n - 1];
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double censor_time = rate > 0.0 ? censor_draw[i] / rate : INFINITY;
    const bool event = event_time[i] <= censor_time;
    out.cohort.labels.push_back({event ? event_time[i] : censor_time, event});
  }
  return out;
}

Manifest write_cohort(const Cohort& cohort, const fs::path& out_dir) {
  fs::create_directories(out_dir / "features");
  Manifest m;
  m.base_dir = out_dir;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& bag = cohort.bags[i];
    const fs::path rel = fs::path("features") / (bag.patient_id + ".fvec");
    write_fvec(out_dir / rel, bag);
    m.rows.push_back({bag.patient_id, cohort.labels[i], rel});
  }
  write_manifest(out_dir / "manifest.csv", m);
  return m;
}

FeatureBag select_slices(const FeatureBag& bag, std::size_t k) {
  const std::size_t total = bag.slice_count();
  if (k < 3) throw InputError("select_slices: k must be at least 3");
  if (k > total) {
    throw InputError("select_slices: bag " + bag.patient_id + " has " + std::to_string(total) +
                     " slices, " + std::to_string(k) + " requested");
  }
  if (k == total) return bag;
  std::vector<bool> keep(total, false);
  std::size_t kept = 0;
  for (auto a : bag.anchor_pos) {
    keep[a] = true;
    ++kept;
  }
  for (std::size_t d = 1; kept < k && d < total; ++d) {
    for (auto a : bag.anchor_pos) {
      for (int side : {-1, 1}) {
        if (kept == k) break;
        if (side < 0 && a < d) continue;
        const std::size_t pos = side < 0 ? a - d : a + d;
        if (pos >= total || keep[pos]) continue;
        keep[pos] = true;
        ++kept;
      }
    }
  }
  FeatureBag out;
  out.patient_id = bag.patient_id;
  out.features = Mat(k, bag.feature_dim());
  std::size_t row = 0;
  for (std::size_t s = 0; s < total; ++s) {
    if (!keep[s]) continue;
    std::copy(bag.features.row(s).begin(), bag.features.row(s).end(), out.features.row(row).begin());
    for (std::size_t p = 0; p < 3; ++p) {
      if (bag.anchor_pos[p] == s) out.anchor_pos[p] = row;
    }
    ++row;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

const CellSummary* ExperimentResult::cell(MethodKind m, std::size_t k) const {
  for (const auto& c : cells) {
    if (c.method == m && c.k == k) return &c;
  }
  return nullptr;
}

std::uint64_t cell_seed(std::uint64_t master, MethodKind m, std::size_t k, std::size_t fold) {
  std::uint64_t s = derive_seed(master, static_cast<std::uint64_t>(m) + 1);
  s = derive_seed(s, k);
  return derive_seed(s, fold);
}

NullDistribution permutation_null(std::span<const double> risks,
                                  std::span<const SurvivalLabel> labels, std::size_t permutations,
                                  std::uint64_t seed) {
  Rng rng(seed);
  std::vector<SurvivalLabel> shuffled(labels.begin(), labels.end());
  Vec values;
  values.reserve(permutations);
  for (std::size_t i = 0; i < permutations; ++i) {
    shuffle(shuffled, rng);
    try {
      values.push_back(c_index(risks, shuffled));
    } catch (const InputError&) {
      // no comparable pair under this permutation
    }
  }
  if (values.size() < 2) throw NumericalError("permutation_null: too few valid permutations");
  NullDistribution d;
  d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - d.mean) * (v - d.mean);
  d.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return d;
}

namespace {

struct Job {
  std::size_t method_idx, k_idx, fold;
};

struct JobOutput {
  FoldRecord record;
  Vec test_risks;
  RiskGroup groups;
};

template <class T>
std::vector<T> gather(const std::vector<T>& all, const std::vector<std::size_t>& idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(all[i]);
  return out;
}

}  // namespace

ExperimentResult run_cv(const Cohort& cohort, const SplitPlan& split, const CvConfig& cfg) {
  if (cohort.size() == 0) throw InputError("cv: empty cohort");
  if (split.folds.size() < 2) throw InputError("cv: need at least two folds");
  if (split.test_ids.empty()) throw InputError("cv: empty test set");
  if (cfg.methods.empty() || cfg.k_values.empty()) throw InputError("cv: nothing to run");

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cohort.size(); ++i) index.emplace(cohort.bags[i].patient_id, i);
  auto lookup = [&](const std::vector<std::string>& ids) {
    std::vector<std::size_t> out;
    for (const auto& id : ids) {
      auto it = index.find(id);
      if (it == index.end()) throw InputError("cv: split references unknown patient " + id);
      out.push_back(it->second);
    }
    return out;
  };
  const auto test_idx = lookup(split.test_ids);
  std::vector<std::vector<std::size_t>> fold_idx;
  for (const auto& f : split.folds) fold_idx.push_back(lookup(f));

  {
    const std::set<std::size_t> test_set(test_idx.begin(), test_idx.end());
    std::set<std::size_t> seen;
    for (const auto& f : fold_idx) {
      for (auto i : f) {
        if (test_set.count(i) != 0) {
          throw InputError("cv: test patient " + cohort.bags[i].patient_id + " appears in a fold");
        }
        if (!seen.insert(i).second) {
          throw InputError("cv: patient " + cohort.bags[i].patient_id + " is in two folds");
        }
      }
    }
  }

  // Slice subsets per K are shared read-only by every job.
  std::vector<std::vector<FeatureBag>> bags_by_k(cfg.k_values.size());
  std::vector<std::string> k_error(cfg.k_values.size());
  for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
    try {
      for (const auto& b : cohort.bags) bags_by_k[ki].push_back(select_slices(b, cfg.k_values[ki]));
    } catch (const std::exception& e) {
      bags_by_k[ki].clear();
      k_error[ki] = e.what();
    }
  }
  const auto test_labels = gather(cohort.labels, test_idx);

  const std::size_t n_folds = split.folds.size();
  std::vector<Job> jobs;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
      for (std::size_t f = 0; f < n_folds; ++f) jobs.push_back({mi, ki, f});
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  auto run_job = [&](std::size_t j) {
    const Job& job = jobs[j];
    JobOutput& out = outputs[j];
    FoldRecord& rec = out.record;
    rec.method = cfg.methods[job.method_idx];
    rec.k = cfg.k_values[job.k_idx];
    rec.fold = job.fold;
    rec.seed = cell_seed(cfg.seed, rec.method, rec.k, rec.fold);
    rec.n_test = test_idx.size();
    try {
      if (!k_error[job.k_idx].empty()) throw InputError(k_error[job.k_idx]);
      const auto& bags = bags_by_k[job.k_idx];
      std::vector<std::size_t> train_idx;
      for (std::size_t f = 0; f < n_folds; ++f) {
        if (f != job.fold) train_idx.insert(train_idx.end(), fold_idx[f].begin(), fold_idx[f].end());
      }
      const auto train_bags = gather(bags, train_idx);
      const auto train_labels = gather(cohort.labels, train_idx);
      const auto val_bags = gather(bags, fold_idx[job.fold]);
      const auto val_labels = gather(cohort.labels, fold_idx[job.fold]);
      const auto test_bags = gather(bags, test_idx);

      ModelDims dims = cfg.dims;
      dims.feature_dim = bags.front().feature_dim();
      TrainConfig tc = cfg.train;
      tc.seed = rec.seed;
      const auto trained = train(rec.method, dims, train_bags, train_labels, tc,
                                 ValidationSet{val_bags, val_labels});
      rec.selected_epoch = trained.selected_epoch;

      out.test_risks = predict_risks(trained.model, test_bags);
      rec.c_index = c_index(out.test_risks, test_labels);
      out.groups = median_split(predict_risks(trained.model, train_bags), out.test_risks);
      rec.threshold = out.groups.threshold;
      const auto fit = hazard_ratio(out.groups, test_labels);
      if (fit.converged) {
        rec.hr = fit.hr;
        rec.beta = fit.beta;
      }
    } catch (const std::exception& e) {
      rec.error = e.what();
      rec.c_index.reset();
      out.test_risks.clear();
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(cfg.threads, jobs.size()));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run_job(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) run_job(j);
      });
    }
  }

  ExperimentResult result;
  result.seed = cfg.seed;
  result.methods = cfg.methods;
  result.k_values = cfg.k_values;
  result.n_folds = n_folds;
  for (const auto& o : outputs) result.folds.push_back(o.record);

  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
      CellSummary cell;
      cell.method = cfg.methods[mi];
      cell.k = cfg.k_values[ki];
      Vec scores;
      std::vector<RiskGroup> groups;
      Vec avg_risk(test_idx.size(), 0.0);
      for (std::size_t f = 0; f < n_folds; ++f) {
        const auto& o = outputs[(mi * cfg.k_values.size() + ki) * n_folds + f];
        if (!o.record.error.empty() || !o.record.c_index) continue;
        scores.push_back(*o.record.c_index);
        groups.push_back(o.groups);
        axpy(1.0, o.test_risks, avg_risk);
      }
      cell.folds_ok = scores.size();
      if (!scores.empty()) {
        const double mean =
            std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
        double ss = 0.0;
        for (double s : scores) ss += (s - mean) * (s - mean);
        cell.mean_c_index = mean;
        cell.std_c_index =
            scores.size() > 1 ? std::sqrt(ss / static_cast<double>(scores.size() - 1)) : 0.0;

        const auto voted = majority_vote(groups);
        cell.n_high = voted.high_count();
        const auto fit = hazard_ratio(voted, test_labels);
        if (fit.converged) {
          cell.hr = fit.hr;
          cell.beta = fit.beta;
        } else {
          cell.hr_diagnostic = fit.diagnostic;
        }
        if (cfg.null_permutations >= 2) {
          for (double& r : avg_risk) r /= static_cast<double>(scores.size());
          try {
            const auto null = permutation_null(avg_risk, test_labels, cfg.null_permutations,
                                               cell_seed(cfg.seed, cell.method, cell.k, n_folds));
            cell.null_mean = null.mean;
            cell.null_std = null.stddev;
          } catch (const std::exception&) {
            // left unset; reported as NA
          }
        }
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> opt_double(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

std::string fixed4(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

json fold_json(const FoldRecord& f) {
  return {{"method", method_name(f.method)}, {"k", f.k},
          {"fold", f.fold},                  {"seed", f.seed},
          {"c_index", opt(f.c_index)},       {"hr", opt(f.hr)},
          {"beta", opt(f.beta)},             {"n_test", f.n_test},
          {"threshold", opt(f.threshold)},   {"selected_epoch", f.selected_epoch},
          {"error", f.error}};
}

}  // namespace

std::string table_csv(const ExperimentResult& r, TableStat stat) {
  std::ostringstream out;
  out << "method";
  for (auto k : r.k_values) out << ",K=" << k;
  out << '\n';
  for (auto m : r.methods) {
    out << method_name(m);
    for (auto k : r.k_values) {
      const auto* c = r.cell(m, k);
      out << ',' << (c ? fixed4(stat == TableStat::Mean ? c->mean_c_index : c->std_c_index) : "NA");
    }
    out << '\n';
  }
  return out.str();
}

std::string fold_records_json(const ExperimentResult& r) {
  json arr = json::array();
  for (const auto& f : r.folds) {
    arr.push_back({{"method", method_name(f.method)},
                   {"k", f.k},
                   {"fold", f.fold},
                   {"c_index", opt(f.c_index)},
                   {"hr", opt(f.hr)},
                   {"beta", opt(f.beta)},
                   {"n_test", f.n_test},
                   {"threshold", opt(f.threshold)}});
  }
  return arr.dump(2) + "\n";
}

std::string result_to_json(const ExperimentResult& r) {
  json j;
  j["seed"] = r.seed;
  j["n_folds"] = r.n_folds;
  j["methods"] = json::array();
  for (auto m : r.methods) j["methods"].push_back(method_name(m));
  j["k_values"] = r.k_values;
  j["folds"] = json::array();
  for (const auto& f : r.folds) j["folds"].push_back(fold_json(f));
  j["cells"] = json::array();
  for (const auto& c : r.cells) {
    j["cells"].push_back({{"method", method_name(c.method)},
                          {"k", c.k},
                          {"folds_ok", c.folds_ok},
                          {"mean_c_index", opt(c.mean_c_index)},
                          {"std_c_index", opt(c.std_c_index)},
                          {"hr", opt(c.hr)},
                          {"beta", opt(c.beta)},
                          {"n_high", c.n_high},
                          {"hr_diagnostic", c.hr_diagnostic},
                          {"null_mean", opt(c.null_mean)},
                          {"null_std", opt(c.null_std)}});
  }
  return j.dump(2) + "\n";
}

ExperimentResult result_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ExperimentResult r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.n_folds = j.at("n_folds");
    for (const auto& m : j.at("methods")) r.methods.push_back(parse_method(m.get<std::string>()));
    r.k_values = j.at("k_values").get<std::vector<std::size_t>>();
    for (const auto& f : j.at("folds")) {
      FoldRecord rec;
      rec.method = parse_method(f.at("method").get<std::string>());
      rec.k = f.at("k");
      rec.fold = f.at("fold");
      rec.seed = f.at("seed").get<std::uint64_t>();
      rec.c_index = opt_double(f.at("c_index"));
      rec.hr = opt_double(f.at("hr"));
      rec.beta = opt_double(f.at("beta"));
      rec.n_test = f.at("n_test");
      rec.threshold = opt_double(f.at("threshold"));
      rec.selected_epoch = f.at("selected_epoch");
      rec.error = f.at("error");
      r.folds.push_back(std::move(rec));
    }
    for (const auto& c : j.at("cells")) {
      CellSummary cell;
      cell.method = parse_method(c.at("method").get<std::string>());
      cell.k = c.at("k");
      cell.folds_ok = c.at("folds_ok");
      cell.mean_c_index = opt_double(c.at("mean_c_index"));
      cell.std_c_index = opt_double(c.at("std_c_index"));
      cell.hr = opt_double(c.at("hr"));
      cell.beta = opt_double(c.at("beta"));
      cell.n_high = c.at("n_high");
      cell.hr_diagnostic = c.at("hr_diagnostic");
      cell.null_mean = opt_double(c.at("null_mean"));
      cell.null_std = opt_double(c.at("null_std"));
      r.cells.push_back(std::move(cell));
    }
    return r;
  } catch (const json::exception& e) {
    throw InputError("results JSON: " + std::string(e.what()));
  }
}

void write_report(const ExperimentResult& r, const fs::path& out_csv) {
  if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
  const fs::path stem = out_csv.parent_path() / out_csv.stem();
  io::write_text(out_csv, table_csv(r, TableStat::Mean));
  io::write_text(stem.string() + "_std.csv", table_csv(r, TableStat::Std));
  io::write_text(stem.string() + "_folds.json", fold_records_json(r));
}

}  // namespace daal
