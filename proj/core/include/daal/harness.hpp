#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daal/aggregation.hpp"
#include "daal/optim.hpp"
#include "daal/survival.hpp"

namespace daal {

// ---------------------------------------------------------------------------
// Cohort files
// ---------------------------------------------------------------------------

struct ManifestRow {
  std::string patient_id;
  SurvivalLabel label;
  std::filesystem::path feature_path;  // as written; relative to the manifest
};

/// CSV with header `patient_id,time,event,feature_path`.
struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestRow& row) const;
};

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

struct Cohort {
  std::vector<FeatureBag> bags;
  std::vector<SurvivalLabel> labels;

  std::size_t size() const noexcept { return bags.size(); }
  std::vector<std::string> ids() const;
};

/// Loads every FVEC listed in the manifest; ids come from the manifest.
Cohort load_cohort(const Manifest& m);

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitPlan {
  std::vector<std::string> test_ids;
  std::vector<std::vector<std::string>> folds;
  std::uint64_t seed = 0;
};

/// Events and censored patients are shuffled separately, then the test set
/// takes round(test_fraction * N) patients in the cohort's event ratio and
/// the rest are dealt round-robin into the folds (events first). Throws
/// InputError when some fold would get no event.
SplitPlan stratified_split(std::span<const std::string> ids, std::span<const SurvivalLabel> labels,
                           double test_fraction, std::size_t n_folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Synthetic planted-signal cohorts
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::size_t n_patients = 300;
  std::size_t slices = 9;        // K, split into three contiguous plane blocks
  std::size_t feature_dim = 16;  // F
  std::size_t signal_dim = 0;
  double censor_target = 0.3;
  double anchor_boost = 1.0;
  std::uint64_t seed = 0;
};

struct SynthCohort {
  Cohort cohort;
  Vec latent_risk;  // rho per patient
};

/// Per patient: rho ~ N(0, 1); features are N(0, 1) noise with rho added at
/// signal_dim and anchor_boost * rho more on the three anchors; event time
/// ~ Exp(exp(rho)); censoring times are Exp(1) draws scaled by a common rate
/// chosen so exactly round(censor_target * N) patients are censored.
/// Features are rounded to f32 so the in-memory cohort equals its files.
SynthCohort synth_generate(const SynthConfig& cfg);

/// Writes manifest.csv and features/<id>.fvec under out_dir.
Manifest write_cohort(const Cohort& cohort, const std::filesystem::path& out_dir);

/// Keeps the three anchors and then the slices nearest to them in list
/// order, round-robin over anchors, until k slices remain (list order is
/// preserved). Throws InputError for k < 3 or k > K.
FeatureBag select_slices(const FeatureBag& bag, std::size_t k);

// ---------------------------------------------------------------------------
// Cross validation
// ---------------------------------------------------------------------------

struct CvConfig {
  std::vector<MethodKind> methods{kAllMethods.begin(), kAllMethods.end()};
  std::vector<std::size_t> k_values{8, 16, 24, 32, 40, 48, 64, 72, 80, 96};
  TrainConfig train;  // train.seed is ignored; each cell derives its own
  ModelDims dims;     // feature_dim is taken from the cohort
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t null_permutations = 1000;
};

struct FoldRecord {
  MethodKind method = MethodKind::DaalSingle;
  std::size_t k = 0;
  std::size_t fold = 0;
  std::uint64_t seed = 0;
  std::optional<double> c_index;
  std::optional<double> hr;
  std::optional<double> beta;
  std::size_t n_test = 0;
  std::optional<double> threshold;
  std::size_t selected_epoch = 0;
  std::string error;  // empty on success

  friend bool operator==(const FoldRecord&, const FoldRecord&) = default;
};

struct CellSummary {
  MethodKind method = MethodKind::DaalSingle;
  std::size_t k = 0;
  std::size_t folds_ok = 0;
  std::optional<double> mean_c_index;
  std::optional<double> std_c_index;
  // Majority-vote groups on the test set.
  std::optional<double> hr;
  std::optional<double> beta;
  std::size_t n_high = 0;
  std::string hr_diagnostic;
  // C-index of the fold-averaged test risks under shuffled labels.
  std::optional<double> null_mean;
  std::optional<double> null_std;

  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

struct ExperimentResult {
  std::uint64_t seed = 0;
  std::vector<MethodKind> methods;
  std::vector<std::size_t> k_values;
  std::size_t n_folds = 0;
  std::vector<FoldRecord> folds;   // method-major, then k, then fold
  std::vector<CellSummary> cells;  // method-major, then k

  const CellSummary* cell(MethodKind m, std::size_t k) const;
  friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

/// Seed of one (method, k, fold) cell, derived from the master seed only.
std::uint64_t cell_seed(std::uint64_t master, MethodKind m, std::size_t k, std::size_t fold);

/// For every (method, k, fold): train on the other folds, select by C-index
/// on this fold, score the held-out test set. Failed cells keep their error
/// message and do not abort the sweep. Serial and threaded runs are
/// identical.
ExperimentResult run_cv(const Cohort& cohort, const SplitPlan& split, const CvConfig& cfg);

/// Mean and standard deviation of the C-index under label permutation.
struct NullDistribution {
  double mean = 0.0;
  double stddev = 0.0;
};
NullDistribution permutation_null(std::span<const double> risks,
                                  std::span<const SurvivalLabel> labels, std::size_t permutations,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Reporting
// ---------------------------------------------------------------------------

enum class TableStat { Mean, Std };

/// Methods-by-K table; failed cells render as NA.
std::string table_csv(const ExperimentResult& r, TableStat stat);

/// Per-fold records {method, k, fold, c_index, hr, beta, n_test, threshold}.
std::string fold_records_json(const ExperimentResult& r);

std::string result_to_json(const ExperimentResult& r);
ExperimentResult result_from_json(const std::string& text);

/// Writes `out_csv` (means), `<stem>_std.csv` and `<stem>_folds.json`.
void write_report(const ExperimentResult& r, const std::filesystem::path& out_csv);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace daal
