#include "daal/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "daal/error.hpp"
#include "daal/metrics.hpp"

namespace daal {

AdamState AdamState::zeros(std::size_t n, double lr) {
  AdamState s;
  s.m.assign(n, 0.0);
  s.v.assign(n, 0.0);
  s.lr = lr;
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size() ||
      params.size() != state.v.size()) {
    throw InputError("adam_step: parameter, gradient and moment sizes differ");
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

namespace {

double validation_cindex(const Model& m, const ValidationSet& val) {
  try {
    return c_index(predict_risks(m, val.bags), val.labels);
  } catch (const InputError&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace

TrainResult train(Model model, std::span<const FeatureBag> bags,
                  std::span<const SurvivalLabel> labels, const TrainConfig& cfg,
                  std::optional<ValidationSet> validation) {
  if (bags.size() != labels.size()) throw InputError("train: bag/label count mismatch");
  if (bags.size() < 2) throw InputError("train: need at least two patients");
  if (std::none_of(labels.begin(), labels.end(), [](const auto& l) { return l.event; })) {
    throw NumericalError("train: no events, the Cox objective is degenerate");
  }
  if (cfg.epochs == 0) throw InputError("train: epochs must be positive");
  if (!(cfg.lr >= 0.0)) throw InputError("train: learning rate must be non-negative");

  Vec params = model.flatten();
  AdamState adam = AdamState::zeros(params.size(), cfg.lr);

  TrainResult result;
  result.curve.reserve(cfg.epochs + 1);
  Vec best = params;
  double best_val = -std::numeric_limits<double>::infinity();

  auto record = [&](std::size_t epoch, double loss) {
    if (!std::isfinite(loss)) {
      throw NumericalError("train: loss diverged at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, loss, std::numeric_limits<double>::quiet_NaN()};
    if (validation) {
      rec.val_cindex = validation_cindex(model, *validation);
      if (rec.val_cindex > best_val) {
        best_val = rec.val_cindex;
        best = params;
        result.selected_epoch = epoch;
      }
    }
    result.curve.push_back(rec);
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const Objective obj = cox_objective(model, bags, labels);
    record(epoch, obj.loss);
    adam_step(params, obj.gradient, adam);
    model.assign(params);
  }
  record(cfg.epochs, cox_objective_loss(model, bags, labels));

  if (validation && std::isfinite(best_val)) {
    model.assign(best);
  } else {
    result.selected_epoch = cfg.epochs;
  }
  result.model = std::move(model);
  return result;
}

TrainResult train(MethodKind kind, const ModelDims& dims, std::span<const FeatureBag> bags,
                  std::span<const SurvivalLabel> labels, const TrainConfig& cfg,
                  std::optional<ValidationSet> validation) {
  return train(Model::create(kind, dims, cfg.seed), bags, labels, cfg, validation);
}

std::string loss_curve_csv(std::span<const EpochRecord> curve) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch,train_loss,val_cindex\n";
  for (const auto& r : curve) {
    out << r.epoch << ',' << r.train_loss << ',';
    if (std::isnan(r.val_cindex)) {
      out << "NA";
    } else {
      out << r.val_cindex;
    }
    out << '\n';
  }
  return out.str();
}

GradcheckReport gradcheck_against(const Model& model, std::span<const FeatureBag> bags,
                                  std::span<const SurvivalLabel> labels,
                                  std::span<const double> analytic, double tolerance,
                                  double step) {
  const Vec base = model.flatten();
  if (analytic.size() != base.size()) throw InputError("gradcheck: gradient has wrong length");

  GradcheckReport report;
  report.kind = model.kind;
  report.tolerance = tolerance;
  Model probe = model;
  Vec x = base;
  std::size_t offset = 0;
  for (const auto& block : model.blocks()) {
    GradcheckBlock out{block.name, 0.0, 0, 0.0, 0.0};
    for (std::size_t i = 0; i < block.values.size(); ++i) {
      const std::size_t at = offset + i;
      x[at] = base[at] + step;
      probe.assign(x);
      const double up = cox_objective_loss(probe, bags, labels);
      x[at] = base[at] - step;
      probe.assign(x);
      const double down = cox_objective_loss(probe, bags, labels);
      x[at] = base[at];

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[at];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double rel = std::abs(a - numeric) / denom;
      if (!(rel <= out.max_rel_error)) {
        out.max_rel_error = std::isnan(rel) ? INFINITY : rel;
        out.worst_index = i;
        out.analytic = a;
        out.numeric = numeric;
      }
    }
    offset += block.values.size();
    report.max_rel_error = std::max(report.max_rel_error, out.max_rel_error);
    report.blocks.push_back(std::move(out));
  }
  report.passed = report.max_rel_error < tolerance;
  return report;
}

GradcheckReport gradcheck(const Model& model, std::span<const FeatureBag> bags,
                          std::span<const SurvivalLabel> labels, double tolerance, double step) {
  const Objective obj = cox_objective(model, bags, labels);
  return gradcheck_against(model, bags, labels, obj.gradient, tolerance, step);
}

GradcheckInstance make_gradcheck_instance(MethodKind kind, std::uint64_t seed) {
  constexpr std::size_t kPatients = 6, kSlices = 6, kFeatures = 5;
  Rng rng(derive_seed(seed, 0x6772616463686bULL));
  GradcheckInstance inst;
  for (std::size_t i = 0; i < kPatients; ++i) {
    FeatureBag bag;
    bag.patient_id = "g" + std::to_string(i);
    bag.features = Mat(kSlices, kFeatures);
    for (double& v : bag.features.values()) v = rng.normal();
    bag.anchor_pos = {0, 2, 4};
    inst.bags.push_back(std::move(bag));
    inst.labels.push_back({0.5 + 10.0 * rng.uniform(), rng.uniform() < 0.7});
  }
  inst.labels[0].event = true;
  if (kind == MethodKind::DeepSurvMean || kind == MethodKind::DeepSurvMax) {
    // Centre the pooled inputs over patients so that no hidden unit (zero
    // bias at init) is active for every patient. Such a unit's bias has an
    // exactly zero gradient, since the Cox loss is shift invariant, and
    // central differences only see round-off there.
    const PoolMode mode = kind == MethodKind::DeepSurvMean ? PoolMode::Mean : PoolMode::Max;
    Vec centre(kFeatures, 0.0);
    for (const auto& bag : inst.bags) axpy(1.0 / kPatients, pool(bag, mode), centre);
    for (auto& bag : inst.bags) {
      for (std::size_t s = 0; s < kSlices; ++s) axpy(-1.0, centre, bag.features.row(s));
    }
  }
  ModelDims dims;
  dims.feature_dim = kFeatures;
  dims.query_dim = 4;
  dims.info_dim = 3;
  dims.attn_dim = 4;
  dims.hidden_dim = 6;
  inst.model = Model::create(kind, dims, seed);
  if (inst.model.daal) {
    // Larger queries make the softmax weights visibly non-uniform.
    for (double& w : inst.model.daal->wq.values()) w *= 2.0;
  }
  return inst;
}

}  // namespace daal
