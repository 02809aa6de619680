// daal: command line front end for slice selection, synthetic cohorts,
// training, evaluation and cross validation.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "daal/binary_io.hpp"
#include "daal/checkpoint.hpp"
#include "daal/error.hpp"
#include "daal/harness.hpp"
#include "daal/metrics.hpp"
#include "daal/optim.hpp"
#include "daal/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNumericalError = 2;

struct DimOptions {
  std::size_t query_dim = 64;
  std::size_t info_dim = 64;
  std::size_t attn_dim = 64;
  std::size_t hidden_dim = 32;

  void attach(CLI::App* app) {
    app->add_option("--query-dim", query_dim, "DAAL query dimension D");
    app->add_option("--info-dim", info_dim, "DAAL information dimension L");
    app->add_option("--attn-dim", attn_dim, "attention-MIL hidden dimension");
    app->add_option("--hidden-dim", hidden_dim, "DeepSurv hidden width");
  }

  daal::ModelDims dims(std::size_t feature_dim) const {
    daal::ModelDims d;
    d.feature_dim = feature_dim;
    d.query_dim = query_dim;
    d.info_dim = info_dim;
    d.attn_dim = attn_dim;
    d.hidden_dim = hidden_dim;
    return d;
  }
};

std::vector<daal::MethodKind> parse_methods(const std::string& spec) {
  if (spec == "all") return {daal::kAllMethods.begin(), daal::kAllMethods.end()};
  std::vector<daal::MethodKind> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(daal::parse_method(item));
  }
  if (out.empty()) throw daal::InputError("no methods given");
  return out;
}

daal::MultiPlaneTraining parse_multi_plane(const std::string& s) {
  if (s == "max") return daal::MultiPlaneTraining::ThroughMax;
  if (s == "per-plane") return daal::MultiPlaneTraining::PerPlane;
  throw daal::InputError("--multi-plane must be 'max' or 'per-plane', got '" + s + "'");
}

// ---------------------------------------------------------------------------

struct SelectSlicesCmd {
  std::string intensities, mask, patient_id, out;
  daal::WindowConfig window;
  std::size_t tile_size = 224;

  int run() const {
    const auto volume = daal::load_labeled_volume(intensities, mask);
    const std::string id = patient_id.empty() ? fs::path(intensities).stem().string() : patient_id;
    const auto summary = daal::export_slices(volume, id, window, tile_size, out);
    std::cout << id << ": anchors (" << summary.anchors.x << ", " << summary.anchors.y << ", "
              << summary.anchors.z << "), " << summary.entries.size() << " slices, "
              << summary.skipped << " without tumor, coverage " << summary.coverage << '\n';
    return kOk;
  }
};

struct SynthCmd {
  daal::SynthConfig cfg;
  std::string out;

  int run() const {
    const auto s = daal::synth_generate(cfg);
    daal::write_cohort(s.cohort, out);
    std::size_t events = 0;
    for (const auto& l : s.cohort.labels) events += l.event;
    std::cout << "wrote " << s.cohort.size() << " patients (" << events << " events) to " << out
              << '\n';
    return kOk;
  }
};

struct TrainCmd {
  std::string manifest, method = "daal-single", out, val_manifest, multi_plane = "max";
  std::size_t epochs = 300;
  double lr = 1e-4;
  double val_fraction = 0.0;
  std::uint64_t seed = 0;
  DimOptions dims;

  int run() const {
    const auto kind = daal::parse_method(method);
    auto cohort = daal::load_cohort(daal::read_manifest(manifest));
    daal::Cohort val;
    if (!val_manifest.empty()) {
      val = daal::load_cohort(daal::read_manifest(val_manifest));
    } else if (val_fraction > 0.0) {
      const auto ids = cohort.ids();
      const auto plan = daal::stratified_split(ids, cohort.labels, val_fraction, 1, seed);
      std::set<std::string> held(plan.test_ids.begin(), plan.test_ids.end());
      daal::Cohort rest;
      for (std::size_t i = 0; i < cohort.size(); ++i) {
        auto& dst = held.count(cohort.bags[i].patient_id) ? val : rest;
        dst.bags.push_back(std::move(cohort.bags[i]));
        dst.labels.push_back(cohort.labels[i]);
      }
      cohort = std::move(rest);
    }

    auto model = daal::Model::create(kind, dims.dims(cohort.bags.front().feature_dim()), seed);
    model.multi_plane = parse_multi_plane(multi_plane);
    const daal::TrainConfig tc{epochs, lr, seed};
    std::optional<daal::ValidationSet> vs;
    if (val.size() > 0) vs = daal::ValidationSet{val.bags, val.labels};
    const auto result = daal::train(std::move(model), cohort.bags, cohort.labels, tc, vs);

    const auto train_risks = daal::predict_risks(result.model, cohort.bags);
    daal::save_checkpoint(out, {result.model, seed, daal::median(train_risks)});
    daal::io::write_text(fs::path(out) / "loss_curve.csv", daal::loss_curve_csv(result.curve));
    const auto& first = result.curve.front();
    const auto& last = result.curve.back();
    std::cout << method << ": loss " << first.train_loss << " -> " << last.train_loss
              << ", selected epoch " << result.selected_epoch << '\n';
    return kOk;
  }
};

struct EvalCmd {
  std::string model_dir, manifest, out;

  int run() const {
    const auto ckpt = daal::load_checkpoint(model_dir);
    const auto cohort = daal::load_cohort(daal::read_manifest(manifest));
    if (cohort.bags.front().feature_dim() != ckpt.model.dims.feature_dim) {
      throw daal::InputError("feature dimension " + std::to_string(cohort.bags.front().feature_dim()) +
                             " does not match the model's " +
                             std::to_string(ckpt.model.dims.feature_dim));
    }
    const auto risks = daal::predict_risks(ckpt.model, cohort.bags);
    const double cidx = daal::c_index(risks, cohort.labels);

    json j;
    j["method"] = daal::method_name(ckpt.model.kind);
    j["n_patients"] = cohort.size();
    j["c_index"] = cidx;
    int code = kOk;
    if (ckpt.risk_threshold) {
      const double t = *ckpt.risk_threshold;
      daal::RiskGroup groups;
      groups.threshold = t;
      for (double r : risks) groups.assignment.push_back(r > t ? daal::RiskLevel::High : daal::RiskLevel::Low);
      const auto fit = daal::hazard_ratio(groups, cohort.labels);
      j["threshold"] = t;
      j["n_high"] = groups.high_count();
      j["hr"] = fit.converged ? json(fit.hr) : json(nullptr);
      j["beta"] = fit.converged ? json(fit.beta) : json(nullptr);
      j["hr_converged"] = fit.converged;
      j["hr_diagnostic"] = fit.diagnostic;
      if (!fit.converged) {
        std::cerr << "warning: hazard ratio did not converge: " << fit.diagnostic << '\n';
        code = kNumericalError;
      }
    } else {
      j["threshold"] = nullptr;
    }
    json pts = json::array();
    for (std::size_t i = 0; i < cohort.size(); ++i) {
      pts.push_back({{"patient_id", cohort.bags[i].patient_id}, {"risk", risks[i]}});
    }
    j["risks"] = std::move(pts);
    daal::io::write_text(out, j.dump(2) + "\n");
    std::cout << "c-index " << cidx << '\n';
    return code;
  }
};

struct CvCmd {
  std::string manifest, methods = "all", out;
  std::vector<std::size_t> k_values{8, 16, 24, 32, 40, 48, 64, 72, 80, 96};
  std::size_t folds = 5;
  double test_fraction = 0.15;
  std::uint64_t seed = 0;
  std::size_t epochs = 300;
  double lr = 1e-4;
  std::size_t threads = 1;
  std::size_t null_permutations = 1000;
  DimOptions dims;

  int run() const {
    const auto cohort = daal::load_cohort(daal::read_manifest(manifest));
    const auto ids = cohort.ids();
    const auto plan = daal::stratified_split(ids, cohort.labels, test_fraction, folds, seed);

    daal::CvConfig cfg;
    cfg.methods = parse_methods(methods);
    cfg.k_values = k_values;
    cfg.train.epochs = epochs;
    cfg.train.lr = lr;
    cfg.dims = dims.dims(0);
    cfg.seed = seed;
    cfg.threads = threads;
    cfg.null_permutations = null_permutations;
    const auto result = daal::run_cv(cohort, plan, cfg);

    fs::create_directories(out);
    daal::io::write_text(fs::path(out) / "results.json", daal::result_to_json(result));
    json split{{"seed", plan.seed}, {"test_ids", plan.test_ids}, {"folds", plan.folds}};
    daal::io::write_text(fs::path(out) / "split.json", split.dump(2) + "\n");
    daal::write_report(result, fs::path(out) / "table.csv");

    std::size_t failed = 0;
    for (const auto& f : result.folds) {
      if (!f.error.empty()) {
        ++failed;
        std::cerr << "warning: " << daal::method_name(f.method) << " K=" << f.k << " fold " << f.fold
                  << ": " << f.error << '\n';
      }
    }
    std::cout << daal::table_csv(result, daal::TableStat::Mean);
    if (failed == result.folds.size()) return kNumericalError;
    return kOk;
  }
};

struct GradcheckCmd {
  std::uint64_t seed = 0;
  double tolerance = 1e-4;
  std::string methods = "all";

  int run() const {
    bool ok = true;
    for (auto kind : parse_methods(methods)) {
      const auto inst = daal::make_gradcheck_instance(kind, seed);
      const auto rep = daal::gradcheck(inst.model, inst.bags, inst.labels, tolerance);
      std::cout << (rep.passed ? "ok   " : "FAIL ") << daal::method_name(kind) << "  max rel error "
                << rep.max_rel_error << '\n';
      for (const auto& b : rep.blocks) {
        std::cout << "       " << b.name << "  " << b.max_rel_error << " at " << b.worst_index
                  << " (analytic " << b.analytic << ", numeric " << b.numeric << ")\n";
      }
      ok = ok && rep.passed;
    }
    return ok ? kOk : kNumericalError;
  }
};

struct ReportCmd {
  std::string results, out;

  int run() const {
    fs::path in = results;
    if (fs::is_directory(in)) in /= "results.json";
    const auto r = daal::result_from_json(daal::io::read_text(in));
    if (r.cells.empty()) throw daal::InputError("results contain no cells");
    daal::write_report(r, out);
    std::cout << daal::table_csv(r, daal::TableStat::Mean);
    return kOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DAAL survival pipeline"};
  app.require_subcommand(1);
  int code = kOk;

  SelectSlicesCmd sel;
  auto* c_sel = app.add_subcommand("select-slices", "anchor slices, neighbour windows and tiles");
  c_sel->add_option("--intensities", sel.intensities, "MVOL f32 intensity volume")->required();
  c_sel->add_option("--mask", sel.mask, "MVOL u8 tumor mask")->required();
  c_sel->add_option("--kx1", sel.window.kx1);
  c_sel->add_option("--kx2", sel.window.kx2);
  c_sel->add_option("--ky1", sel.window.ky1);
  c_sel->add_option("--ky2", sel.window.ky2);
  c_sel->add_option("--kz1", sel.window.kz1);
  c_sel->add_option("--kz2", sel.window.kz2);
  c_sel->add_option("--tile-size", sel.tile_size, "output tile edge length");
  c_sel->add_option("--patient-id", sel.patient_id, "defaults to the intensity file stem");
  c_sel->add_option("--out", sel.out)->required();
  c_sel->callback([&] { code = sel.run(); });

  SynthCmd syn;
  auto* c_syn = app.add_subcommand("synth", "planted-signal synthetic cohort");
  c_syn->add_option("--patients", syn.cfg.n_patients);
  c_syn->add_option("--slices", syn.cfg.slices);
  c_syn->add_option("--dim", syn.cfg.feature_dim);
  c_syn->add_option("--signal-dim", syn.cfg.signal_dim);
  c_syn->add_option("--censor", syn.cfg.censor_target);
  c_syn->add_option("--anchor-boost", syn.cfg.anchor_boost);
  c_syn->add_option("--seed", syn.cfg.seed);
  c_syn->add_option("--out", syn.out)->required();
  c_syn->callback([&] { code = syn.run(); });

  TrainCmd tr;
  auto* c_tr = app.add_subcommand("train", "train one method on a cohort");
  c_tr->add_option("--manifest", tr.manifest)->required();
  c_tr->add_option("--method", tr.method);
  c_tr->add_option("--epochs", tr.epochs);
  c_tr->add_option("--lr", tr.lr);
  c_tr->add_option("--seed", tr.seed);
  c_tr->add_option("--val-manifest", tr.val_manifest, "validation cohort for snapshot selection");
  c_tr->add_option("--val-fraction", tr.val_fraction, "hold out a stratified validation share");
  c_tr->add_option("--multi-plane", tr.multi_plane, "daal-multiple training: max or per-plane");
  c_tr->add_option("--out", tr.out)->required();
  tr.dims.attach(c_tr);
  c_tr->callback([&] { code = tr.run(); });

  EvalCmd ev;
  auto* c_ev = app.add_subcommand("eval", "score a cohort with a saved model");
  c_ev->add_option("--model", ev.model_dir)->required();
  c_ev->add_option("--manifest", ev.manifest)->required();
  c_ev->add_option("--out", ev.out)->required();
  c_ev->callback([&] { code = ev.run(); });

  CvCmd cv;
  auto* c_cv = app.add_subcommand("cv", "test split plus k-fold cross validation sweep");
  c_cv->add_option("--manifest", cv.manifest)->required();
  c_cv->add_option("--folds", cv.folds);
  c_cv->add_option("--test-fraction", cv.test_fraction);
  c_cv->add_option("--methods", cv.methods, "comma separated, or 'all'");
  c_cv->add_option("--k-values", cv.k_values)->delimiter(',');
  c_cv->add_option("--seed", cv.seed);
  c_cv->add_option("--epochs", cv.epochs);
  c_cv->add_option("--lr", cv.lr);
  c_cv->add_option("--threads", cv.threads);
  c_cv->add_option("--null-permutations", cv.null_permutations);
  c_cv->add_option("--out", cv.out)->required();
  cv.dims.attach(c_cv);
  c_cv->callback([&] { code = cv.run(); });

  GradcheckCmd gc;
  auto* c_gc = app.add_subcommand("gradcheck", "finite-difference check of every method");
  c_gc->add_option("--seed", gc.seed);
  c_gc->add_option("--tolerance", gc.tolerance);
  c_gc->add_option("--methods", gc.methods);
  c_gc->callback([&] { code = gc.run(); });

  ReportCmd rep;
  auto* c_rep = app.add_subcommand("report", "tables from a cv results directory");
  c_rep->add_option("--results", rep.results)->required();
  c_rep->add_option("--out", rep.out)->required();
  c_rep->callback([&] { code = rep.run(); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  } catch (const daal::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const daal::InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return code;
}
