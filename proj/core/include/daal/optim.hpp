#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "daal/aggregation.hpp"
#include "daal/survival.hpp"

namespace daal {

struct AdamState {
  Vec m, v;
  std::uint64_t t = 0;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros(std::size_t n, double lr = 1e-4);
};

/// One bias-corrected Adam update, in place. Throws InputError on shape
/// mismatch.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

struct TrainConfig {
  std::size_t epochs = 300;
  double lr = 1e-4;
  std::uint64_t seed = 0;  // model initialisation seed
};

struct EpochRecord {
  std::size_t epoch = 0;  // number of Adam steps taken
  double train_loss = 0.0;
  double val_cindex = 0.0;  // NaN without a validation set
};

struct ValidationSet {
  std::span<const FeatureBag> bags;
  std::span<const SurvivalLabel> labels;
};

struct TrainResult {
  Model model;                     // selected snapshot
  std::vector<EpochRecord> curve;  // epochs 0..cfg.epochs
  std::size_t selected_epoch = 0;
};

/// Full-cohort Adam on the Cox objective. With a validation set the snapshot
/// with the best validation C-index is returned (earliest on ties),
/// otherwise the final one. Needs >= 2 patients (InputError) and >= 1 event
/// (NumericalError).
TrainResult train(Model model, std::span<const FeatureBag> bags,
                  std::span<const SurvivalLabel> labels, const TrainConfig& cfg,
                  std::optional<ValidationSet> validation = std::nullopt);

/// Convenience: initialises Model::create(kind, dims, cfg.seed) first.
TrainResult train(MethodKind kind, const ModelDims& dims, std::span<const FeatureBag> bags,
                  std::span<const SurvivalLabel> labels, const TrainConfig& cfg,
                  std::optional<ValidationSet> validation = std::nullopt);

/// Epoch,train_loss,val_cindex CSV.
std::string loss_curve_csv(std::span<const EpochRecord> curve);

struct GradcheckBlock {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradcheckReport {
  MethodKind kind = MethodKind::DaalSingle;
  std::vector<GradcheckBlock> blocks;
  double max_rel_error = 0.0;
  double tolerance = 1e-4;
  bool passed = false;
};

inline constexpr double kGradcheckStep = 1e-5;

/// Compares `analytic` with central differences of the Cox objective.
/// Relative error is |a - n| / max(|a|, |n|, 1e-8).
GradcheckReport gradcheck_against(const Model& model, std::span<const FeatureBag> bags,
                                  std::span<const SurvivalLabel> labels,
                                  std::span<const double> analytic, double tolerance = 1e-4,
                                  double step = kGradcheckStep);

/// gradcheck_against with the model's own analytic gradient.
GradcheckReport gradcheck(const Model& model, std::span<const FeatureBag> bags,
                          std::span<const SurvivalLabel> labels, double tolerance = 1e-4,
                          double step = kGradcheckStep);

/// A small random cohort and model (K <= 8, F <= 8) for gradient checks.
struct GradcheckInstance {
  Model model;
  std::vector<FeatureBag> bags;
  std::vector<SurvivalLabel> labels;
};

GradcheckInstance make_gradcheck_instance(MethodKind kind, std::uint64_t seed);

}  // namespace daal
