#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "daal/aggregation.hpp"
#include "daal/numerics.hpp"

namespace daal {

struct SurvivalLabel {
  double time = 1.0;   // days; > 0
  bool event = false;  // true = death observed, false = censored

  friend bool operator==(const SurvivalLabel&, const SurvivalLabel&) = default;
};

/// Negative log partial likelihood
///   L = sum_i delta_i (-r_i + log sum_{j : t_j >= t_i} exp(r_j)).
/// The risk set includes tied times (Breslow). Throws InputError on an empty
/// cohort, length mismatch or non-positive time.
double cox_loss(std::span<const double> risks, std::span<const SurvivalLabel> labels);

/// dL/dr_k = -delta_k + sum_i delta_i [t_k >= t_i] exp(r_k) / sum_{j : t_j >= t_i} exp(r_j)
Vec cox_grad(std::span<const double> risks, std::span<const SurvivalLabel> labels);

/// Dense layer; an empty bias means the layer has none.
struct DenseLayer {
  Mat weight;
  Vec bias;
};

/// Fully connected risk head with rectifiers between layers and a scalar
/// linear output.
struct RiskHead {
  std::vector<DenseLayer> layers;

  /// in -> 1, no bias (a bias is unidentifiable under the Cox loss).
  static RiskHead linear(std::size_t in, Rng& rng);
  /// in -> hidden (bias, ReLU) -> 1 (no bias).
  static RiskHead mlp(std::size_t in, std::size_t hidden, Rng& rng);
  static RiskHead zeros_like(const RiskHead& h);

  std::size_t input_dim() const noexcept { return layers.empty() ? 0 : layers.front().weight.cols(); }
};

double head_forward(const RiskHead& head, std::span<const double> x);

struct HeadGradients {
  RiskHead params;
  Vec input;
};

HeadGradients head_backward(const RiskHead& head, std::span<const double> x, double upstream);

enum class MethodKind : std::uint8_t {
  DaalSingle,
  DaalMultiple,
  AttnMil,
  MeanCox,
  MaxCox,
  DeepSurvMean,
  DeepSurvMax,
};

inline constexpr std::array<MethodKind, 7> kAllMethods{
    MethodKind::DaalSingle,  MethodKind::DaalMultiple, MethodKind::AttnMil,
    MethodKind::MeanCox,     MethodKind::MaxCox,       MethodKind::DeepSurvMean,
    MethodKind::DeepSurvMax,
};

std::string_view method_name(MethodKind k) noexcept;
MethodKind parse_method(std::string_view name);

/// How daal-multiple is trained. Inference always scores max over planes.
enum class MultiPlaneTraining : std::uint8_t {
  ThroughMax,  // loss on max_p r_p; gradient flows to the argmax plane
  PerPlane,    // loss = sum_p cox_loss(r_p)
};

struct ModelDims {
  std::size_t feature_dim = 0;
  std::size_t query_dim = 64;
  std::size_t info_dim = 64;
  std::size_t attn_dim = 64;
  std::size_t hidden_dim = 32;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ParamBlock {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::span<double> values;
};

struct ConstParamBlock {
  std::string name;
  std::size_t rows = 0, cols = 0;
  std::span<const double> values;
};

/// A trainable method: its aggregation parameters (if any) plus a risk head.
struct Model {
  MethodKind kind = MethodKind::DaalSingle;
  ModelDims dims;
  MultiPlaneTraining multi_plane = MultiPlaneTraining::ThroughMax;
  std::optional<DaalParams> daal;
  std::optional<AttnMilParams> attn;
  RiskHead head;

  /// Glorot-initialised parameters, zero biases; fully determined by seed.
  static Model create(MethodKind kind, const ModelDims& dims, std::uint64_t seed);
  static Model zeros_like(const Model& m);

  /// Blocks in checkpoint order: daal.wq, daal.wv, attn.v, attn.w, then
  /// head.<i>.weight / head.<i>.bias per layer.
  std::vector<ParamBlock> blocks();
  std::vector<ConstParamBlock> blocks() const;
  std::size_t parameter_count() const;
  Vec flatten() const;
  void assign(std::span<const double> flat);
};

struct RiskOutput {
  double risk = 0.0;
  std::array<double, 3> plane_risks{};  // DAAL kinds only
  std::size_t argmax_plane = 0;         // lowest plane on ties
};

RiskOutput forward_risk(const Model& m, const FeatureBag& bag);

/// Adds d(sum_p d_plane[p] * r_p)/dtheta into grads. For non-DAAL kinds only
/// d_plane[0] is used and refers to the scalar risk.
void accumulate_risk_gradient(const Model& m, const FeatureBag& bag,
                              const std::array<double, 3>& d_plane, Model& grads);

struct Objective {
  double loss = 0.0;
  Vec gradient;  // flattened in Model::blocks() order
};

/// Cox loss of the model's risks over the cohort and its exact gradient.
Objective cox_objective(const Model& m, std::span<const FeatureBag> bags,
                        std::span<const SurvivalLabel> labels);
/// Loss only.
double cox_objective_loss(const Model& m, std::span<const FeatureBag> bags,
                          std::span<const SurvivalLabel> labels);

Vec predict_risks(const Model& m, std::span<const FeatureBag> bags);

}  // namespace daal
