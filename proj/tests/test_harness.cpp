#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

#include "daal/binary_io.hpp"
#include "daal/error.hpp"
#include "daal/harness.hpp"
#include "daal/metrics.hpp"
#include "oracles.hpp"

using namespace daal;

// Seed 2024, n = 1000; recorded from the pairwise oracle.
constexpr double kSynthLatentCIndex = 0.74026708948271769;
namespace fs = std::filesystem;

namespace {

struct SplitInput {
  std::vector<std::string> ids;
  std::vector<SurvivalLabel> labels;
};

SplitInput split_input(std::size_t n, std::size_t n_events) {
  SplitInput in;
  for (std::size_t i = 0; i < n; ++i) {
    in.ids.push_back("id" + std::to_string(i));
    in.labels.push_back({1.0 + static_cast<double>(i), i < n_events});
  }
  return in;
}

CvConfig tiny_cv(std::vector<MethodKind> methods, std::vector<std::size_t> ks) {
  CvConfig cfg;
  cfg.methods = std::move(methods);
  cfg.k_values = std::move(ks);
  cfg.train = {8, 1e-2, 0};
  cfg.dims.query_dim = 4;
  cfg.dims.info_dim = 4;
  cfg.dims.attn_dim = 4;
  cfg.dims.hidden_dim = 4;
  cfg.seed = 17;
  cfg.null_permutations = 50;
  return cfg;
}

SynthCohort tiny_synth(std::size_t n = 60) {
  SynthConfig s;
  s.n_patients = n;
  s.slices = 6;
  s.feature_dim = 4;
  s.seed = 5;
  return synth_generate(s);
}

}  // namespace

TEST(StratifiedSplit, CohortOf326SetsAside49) {
  const auto in = split_input(326, 230);
  const auto plan = stratified_split(in.ids, in.labels, 0.15, 5, 1);
  EXPECT_EQ(plan.test_ids.size(), 49u);
  std::size_t in_folds = 0;
  for (const auto& f : plan.folds) in_folds += f.size();
  EXPECT_EQ(in_folds, 277u);
  EXPECT_EQ(plan.folds.size(), 5u);
}

TEST(StratifiedSplit, PartitionsCohortAndBalancesEvents) {
  std::mt19937_64 gen(61);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 20 + gen() % 400;
    const std::size_t n_events = 10 + gen() % (n - 9);
    const double frac = 0.05 + 0.3 * static_cast<double>(gen() % 100) / 100.0;
    auto in = split_input(n, std::min(n, n_events));
    std::shuffle(in.labels.begin(), in.labels.end(), gen);
    SplitPlan plan;
    try {
      plan = stratified_split(in.ids, in.labels, frac, 5, trial);
    } catch (const InputError&) {
      continue;
    }
    std::map<std::string, bool> event_of;
    std::size_t total_events = 0;
    for (std::size_t i = 0; i < n; ++i) {
      event_of[in.ids[i]] = in.labels[i].event;
      total_events += in.labels[i].event;
    }
    const double global = static_cast<double>(total_events) / static_cast<double>(n);

    std::vector<std::vector<std::string>> buckets{plan.test_ids};
    buckets.insert(buckets.end(), plan.folds.begin(), plan.folds.end());
    std::set<std::string> seen;
    for (const auto& b : buckets) {
      std::size_t events = 0;
      for (const auto& id : b) {
        EXPECT_TRUE(seen.insert(id).second) << id << " twice";
        events += event_of.at(id);
      }
      EXPECT_LE(std::abs(static_cast<double>(events) - global * static_cast<double>(b.size())), 1.0)
          << "n=" << n << " events=" << total_events << " bucket=" << b.size();
    }
    EXPECT_EQ(seen.size(), n);
  }
}

TEST(StratifiedSplit, DeterministicAndSeedDependent) {
  const auto in = split_input(100, 60);
  const auto a = stratified_split(in.ids, in.labels, 0.15, 5, 3);
  const auto b = stratified_split(in.ids, in.labels, 0.15, 5, 3);
  const auto c = stratified_split(in.ids, in.labels, 0.15, 5, 4);
  EXPECT_EQ(a.test_ids, b.test_ids);
  EXPECT_EQ(a.folds, b.folds);
  EXPECT_NE(a.test_ids, c.test_ids);
}

TEST(StratifiedSplit, InfeasibleSplitRejected) {
  const auto in = split_input(50, 4);
  EXPECT_THROW(stratified_split(in.ids, in.labels, 0.15, 5, 0), InputError);
  auto dup = split_input(10, 8);
  dup.ids[1] = dup.ids[0];
  EXPECT_THROW(stratified_split(dup.ids, dup.labels, 0.2, 2, 0), InputError);
}

TEST(Synth, LatentRiskIsPredictive) {
  SynthConfig cfg;
  cfg.n_patients = 1000;
  cfg.seed = 2024;
  const auto s = synth_generate(cfg);
  const double c = c_index(s.latent_risk, s.cohort.labels);
  EXPECT_GE(c, 0.70);
  EXPECT_NEAR(c, kSynthLatentCIndex, 1e-12);
  std::vector<double> t;
  std::vector<int> d;
  for (const auto& l : s.cohort.labels) {
    t.push_back(l.time);
    d.push_back(l.event);
  }
  EXPECT_NEAR(oracle::c_index(s.latent_risk, t, d), kSynthLatentCIndex, 1e-12);
}

TEST(Synth, CensoredFractionCalibrated) {
  for (double target : {0.0, 0.3, 0.5}) {
    SynthConfig cfg;
    cfg.n_patients = 1000;
    cfg.censor_target = target;
    cfg.seed = 7;
    const auto s = synth_generate(cfg);
    std::size_t censored = 0;
    for (const auto& l : s.cohort.labels) censored += !l.event;
    EXPECT_NEAR(static_cast<double>(censored) / 1000.0, target, 0.05);
  }
}

TEST(Synth, AnchorsCarryBoostedSignal) {
  SynthConfig cfg;
  cfg.n_patients = 400;
  cfg.anchor_boost = 2.0;
  cfg.signal_dim = 3;
  cfg.seed = 8;
  const auto s = synth_generate(cfg);
  // Regressing the signal coordinate on rho gives slope 1 + boost on anchors, 1 elsewhere.
  const auto& bag0 = s.cohort.bags[0];
  for (std::size_t slot = 0; slot < cfg.slices; ++slot) {
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < 400; ++i) {
      sxy += s.latent_risk[i] * s.cohort.bags[i].features(slot, 3);
      sxx += s.latent_risk[i] * s.latent_risk[i];
    }
    const bool anchor = std::find(bag0.anchor_pos.begin(), bag0.anchor_pos.end(), slot) != bag0.anchor_pos.end();
    EXPECT_NEAR(sxy / sxx, anchor ? 3.0 : 1.0, 0.15) << slot;
  }
  EXPECT_EQ(bag0.anchor_pos, (std::array<std::size_t, 3>{1, 4, 7}));
}

TEST(Synth, FilesAreByteIdenticalAcrossRuns) {
  const auto root = fs::temp_directory_path() / "daal_test_synth";
  fs::remove_all(root);
  const auto a = tiny_synth(), b = tiny_synth();
  write_cohort(a.cohort, root / "a");
  write_cohort(b.cohort, root / "b");
  for (const auto& e : fs::recursive_directory_iterator(root / "a")) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root / "a");
    EXPECT_EQ(io::read_file(e.path()), io::read_file(root / "b" / rel)) << rel;
  }
  const auto loaded = load_cohort(read_manifest(root / "a" / "manifest.csv"));
  ASSERT_EQ(loaded.size(), a.cohort.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    EXPECT_EQ(loaded.bags[i].features, a.cohort.bags[i].features);
    EXPECT_EQ(loaded.bags[i].patient_id, a.cohort.bags[i].patient_id);
    EXPECT_EQ(loaded.labels[i].event, a.cohort.labels[i].event);
    EXPECT_EQ(loaded.labels[i].time, a.cohort.labels[i].time);
  }
}

TEST(Manifest, RejectsMalformedRows) {
  const auto dir = fs::temp_directory_path() / "daal_test_manifest";
  fs::create_directories(dir);
  auto check = [&](const std::string& text) {
    io::write_text(dir / "m.csv", text);
    EXPECT_THROW(read_manifest(dir / "m.csv"), InputError) << text;
  };
  check("id,time,event,path\nA,1,1,a.fvec\n");
  check("patient_id,time,event,feature_path\nA,0,1,a.fvec\n");
  check("patient_id,time,event,feature_path\nA,1,2,a.fvec\n");
  check("patient_id,time,event,feature_path\nA,1,1,a.fvec\nA,2,0,b.fvec\n");
  check("patient_id,time,event,feature_path\nA,x,1,a.fvec\n");
  check("patient_id,time,event,feature_path\n");
  EXPECT_THROW(read_manifest(dir / "absent.csv"), InputError);
}

TEST(SelectSlices, KeepsAnchorsAndNearestNeighbours) {
  FeatureBag bag;
  bag.patient_id = "s";
  bag.features = Mat(12, 1);
  for (std::size_t s = 0; s < 12; ++s) bag.features(s, 0) = static_cast<double>(s);
  bag.anchor_pos = {1, 6, 10};
  const auto three = select_slices(bag, 3);
  EXPECT_EQ(std::vector<double>(three.features.values().begin(), three.features.values().end()), (std::vector<double>{1, 6, 10}));
  EXPECT_EQ(three.anchor_pos, (std::array<std::size_t, 3>{0, 1, 2}));
  const auto six = select_slices(bag, 6);
  EXPECT_EQ(std::vector<double>(six.features.values().begin(), six.features.values().end()), (std::vector<double>{0, 1, 2, 5, 6, 10}));
  const auto nine = select_slices(bag, 9);
  EXPECT_EQ(std::vector<double>(nine.features.values().begin(), nine.features.values().end()), (std::vector<double>{0, 1, 2, 5, 6, 7, 9, 10, 11}));
  EXPECT_EQ(nine.anchor_pos, (std::array<std::size_t, 3>{1, 4, 7}));
  EXPECT_EQ(select_slices(bag, 12).features, bag.features);
  EXPECT_THROW(select_slices(bag, 2), InputError);
  EXPECT_THROW(select_slices(bag, 13), InputError);
}

TEST(PermutationNull, CentredOnHalf) {
  std::mt19937_64 gen(62);
  std::normal_distribution<double> nd;
  std::vector<double> risks(200);
  std::vector<SurvivalLabel> labels;
  for (std::size_t i = 0; i < 200; ++i) {
    risks[i] = nd(gen);
    labels.push_back({1.0 + static_cast<double>(i % 37), i % 3 != 0});
  }
  const auto null = permutation_null(risks, labels, 500, 1);
  EXPECT_NEAR(null.mean, 0.5, 0.01);
  EXPECT_GT(null.stddev, 0.01);
  EXPECT_LT(null.stddev, 0.06);
  const auto again = permutation_null(risks, labels, 500, 1);
  EXPECT_EQ(null.mean, again.mean);
}

TEST(CellSeed, DistinctPerCell) {
  std::set<std::uint64_t> seeds;
  for (auto m : kAllMethods)
    for (std::size_t k : {8u, 16u, 24u})
      for (std::size_t f = 0; f < 5; ++f) seeds.insert(cell_seed(1, m, k, f));
  EXPECT_EQ(seeds.size(), 7u * 3u * 5u);
  EXPECT_EQ(cell_seed(1, MethodKind::MaxCox, 8, 2), cell_seed(1, MethodKind::MaxCox, 8, 2));
}

TEST(RunCv, SerialAndThreadedRunsAgree) {
  const auto s = tiny_synth();
  const auto ids = s.cohort.ids();
  const auto plan = stratified_split(ids, s.cohort.labels, 0.2, 3, 1);
  auto cfg = tiny_cv({MethodKind::DaalSingle, MethodKind::MeanCox, MethodKind::AttnMil}, {4, 6, 8});
  const auto serial = run_cv(s.cohort, plan, cfg);
  cfg.threads = 4;
  const auto threaded = run_cv(s.cohort, plan, cfg);
  EXPECT_EQ(serial, threaded);
  EXPECT_EQ(table_csv(serial, TableStat::Mean), table_csv(threaded, TableStat::Mean));
  EXPECT_EQ(fold_records_json(serial), fold_records_json(threaded));

  ASSERT_EQ(serial.folds.size(), 3u * 3u * 3u);
  ASSERT_EQ(serial.cells.size(), 9u);
  // K = 8 exceeds the six stored slices: every such cell fails and renders NA.
  for (auto m : serial.methods) {
    const auto* bad = serial.cell(m, 8);
    ASSERT_NE(bad, nullptr);
    EXPECT_EQ(bad->folds_ok, 0u);
    EXPECT_FALSE(bad->mean_c_index);
    const auto* ok = serial.cell(m, 6);
    EXPECT_EQ(ok->folds_ok, 3u);
    EXPECT_TRUE(ok->mean_c_index);
  }
  for (const auto& f : serial.folds) {
    if (f.k == 8) {
      EXPECT_FALSE(f.error.empty());
    } else {
      EXPECT_TRUE(f.error.empty()) << f.error;
      EXPECT_EQ(f.n_test, plan.test_ids.size());
    }
  }
  const auto table = table_csv(serial, TableStat::Mean);
  EXPECT_EQ(table.substr(0, table.find('\n')), "method,K=4,K=6,K=8");
  EXPECT_NE(table.find("daal-single,"), std::string::npos);
  EXPECT_NE(table.find(",NA\n"), std::string::npos);
}

TEST(RunCv, CellReproducibleInIsolation) {
  const auto s = tiny_synth();
  const auto ids = s.cohort.ids();
  const auto plan = stratified_split(ids, s.cohort.labels, 0.2, 3, 1);
  const auto full = run_cv(s.cohort, plan, tiny_cv({MethodKind::MaxCox, MethodKind::DaalMultiple}, {5, 6}));
  const auto alone = run_cv(s.cohort, plan, tiny_cv({MethodKind::DaalMultiple}, {6}));
  for (const auto& f : alone.folds) {
    const auto it = std::find_if(full.folds.begin(), full.folds.end(), [&](const FoldRecord& g) {
      return g.method == f.method && g.k == f.k && g.fold == f.fold;
    });
    ASSERT_NE(it, full.folds.end());
    EXPECT_EQ(*it, f);
  }
}

TEST(RunCv, RejectsLeakingSplit) {
  const auto s = tiny_synth();
  const auto ids = s.cohort.ids();
  auto plan = stratified_split(ids, s.cohort.labels, 0.2, 3, 1);
  plan.folds[1].push_back(plan.test_ids.front());
  EXPECT_THROW(run_cv(s.cohort, plan, tiny_cv({MethodKind::MeanCox}, {6})), InputError);
}

TEST(Report, SingleCellTableAndJsonRoundTrip) {
  ExperimentResult r;
  r.seed = 3;
  r.methods = {MethodKind::MeanCox};
  r.k_values = {8};
  r.n_folds = 1;
  FoldRecord f;
  f.method = MethodKind::MeanCox;
  f.k = 8;
  f.c_index = 0.61234;
  f.hr = 1.75;
  f.beta = std::log(1.75);
  f.n_test = 49;
  f.threshold = -0.125;
  f.seed = 99;
  r.folds = {f};
  CellSummary c;
  c.method = MethodKind::MeanCox;
  c.k = 8;
  c.folds_ok = 1;
  c.mean_c_index = 0.61234;
  c.std_c_index = 0.0;
  c.null_mean = 0.5;
  c.null_std = 0.04;
  r.cells = {c};
  EXPECT_EQ(table_csv(r, TableStat::Mean), "method,K=8\nmean-cox,0.6123\n");
  EXPECT_EQ(table_csv(r, TableStat::Std), "method,K=8\nmean-cox,0.0000\n");
  EXPECT_EQ(result_from_json(result_to_json(r)), r);

  r.cells[0].mean_c_index.reset();
  r.cells[0].std_c_index.reset();
  r.folds[0].error = "diverged";
  r.folds[0].c_index.reset();
  EXPECT_EQ(table_csv(r, TableStat::Mean), "method,K=8\nmean-cox,NA\n");
  EXPECT_EQ(result_from_json(result_to_json(r)), r);
  EXPECT_THROW(result_from_json("{}"), InputError);
}

TEST(Report, WritesCompanionFiles) {
  const auto s = tiny_synth();
  const auto plan = stratified_split(s.cohort.ids(), s.cohort.labels, 0.2, 3, 1);
  const auto r = run_cv(s.cohort, plan, tiny_cv({MethodKind::MeanCox}, {6}));
  const auto dir = fs::temp_directory_path() / "daal_test_report";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write_report(r, dir / "table.csv");
  EXPECT_EQ(io::read_text(dir / "table.csv"), table_csv(r, TableStat::Mean));
  EXPECT_EQ(io::read_text(dir / "table_std.csv"), table_csv(r, TableStat::Std));
  EXPECT_EQ(io::read_text(dir / "table_folds.json"), fold_records_json(r));
}
