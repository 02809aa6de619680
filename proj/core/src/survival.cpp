#include "daal/survival.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "daal/error.hpp"

namespace daal {

namespace {

void check_cohort(std::span<const double> risks, std::span<const SurvivalLabel> labels) {
  if (risks.empty()) throw InputError("cox: empty cohort");
  if (risks.size() != labels.size()) {
    throw InputError("cox: " + std::to_string(risks.size()) + " risks for " +
                     std::to_string(labels.size()) + " labels");
  }
  for (const auto& l : labels) {
    if (!(l.time > 0.0) || !std::isfinite(l.time)) throw InputError("cox: times must be positive");
  }
  for (double r : risks) {
    if (!std::isfinite(r)) throw NumericalError("cox: non-finite risk");
  }
}

std::vector<std::size_t> order_by_time(std::span<const SurvivalLabel> labels, bool descending) {
  std::vector<std::size_t> idx(labels.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? labels[a].time > labels[b].time : labels[a].time < labels[b].time;
  });
  return idx;
}

// Shifted risk-set sums sum_{j : t_j >= t_i} exp(r_j - shift), per patient.
Vec risk_set_sums(std::span<const double> risks, std::span<const SurvivalLabel> labels,
                  double shift) {
  const auto idx = order_by_time(labels, /*descending=*/true);
  Vec sums(risks.size());
  double running = 0.0;
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t end = g;
    while (end < idx.size() && labels[idx[end]].time == labels[idx[g]].time) {
      running += std::exp(risks[idx[end]] - shift);
      ++end;
    }
    for (std::size_t i = g; i < end; ++i) sums[idx[i]] = running;
    g = end;
  }
  return sums;
}

bool is_daal(MethodKind k) { return k == MethodKind::DaalSingle || k == MethodKind::DaalMultiple; }

PoolMode pool_mode(MethodKind k) {
  return (k == MethodKind::MaxCox || k == MethodKind::DeepSurvMax) ? PoolMode::Max : PoolMode::Mean;
}

void add_into(Mat& dst, const Mat& src) { axpy(1.0, src.values(), dst.values()); }

void add_into(RiskHead& dst, const RiskHead& src) {
  for (std::size_t l = 0; l < dst.layers.size(); ++l) {
    add_into(dst.layers[l].weight, src.layers[l].weight);
    axpy(1.0, src.layers[l].bias, dst.layers[l].bias);
  }
}

}  // namespace

double cox_loss(std::span<const double> risks, std::span<const SurvivalLabel> labels) {
  check_cohort(risks, labels);
  const double shift = *std::max_element(risks.begin(), risks.end());
  const Vec sums = risk_set_sums(risks, labels, shift);
  double loss = 0.0;
  for (std::size_t i = 0; i < risks.size(); ++i) {
    if (labels[i].event) loss += -risks[i] + shift + std::log(sums[i]);
  }
  return loss;
}

Vec cox_grad(std::span<const double> risks, std::span<const SurvivalLabel> labels) {
  check_cohort(risks, labels);
  const double shift = *std::max_element(risks.begin(), risks.end());
  const Vec sums = risk_set_sums(risks, labels, shift);

  // Ascending sweep: acc holds sum over events i with t_i <= t of 1 / S_i.
  const auto idx = order_by_time(labels, /*descending=*/false);
  Vec grad(risks.size());
  double acc = 0.0;
  for (std::size_t g = 0; g < idx.size();) {
    std::size_t end = g;
    while (end < idx.size() && labels[idx[end]].time == labels[idx[g]].time) {
      if (labels[idx[end]].event) acc += 1.0 / sums[idx[end]];
      ++end;
    }
    for (std::size_t i = g; i < end; ++i) {
      const std::size_t k = idx[i];
      grad[k] = std::exp(risks[k] - shift) * acc - (labels[k].event ? 1.0 : 0.0);
    }
    g = end;
  }
  return grad;
}

RiskHead RiskHead::linear(std::size_t in, Rng& rng) {
  RiskHead h;
  h.layers.push_back({glorot_init(1, in, rng), {}});
  return h;
}

RiskHead RiskHead::mlp(std::size_t in, std::size_t hidden, Rng& rng) {
  RiskHead h;
  h.layers.push_back({glorot_init(hidden, in, rng), Vec(hidden, 0.0)});
  h.layers.push_back({glorot_init(1, hidden, rng), {}});
  return h;
}

RiskHead RiskHead::zeros_like(const RiskHead& h) {
  RiskHead z;
  for (const auto& l : h.layers) {
    z.layers.push_back({Mat(l.weight.rows(), l.weight.cols()), Vec(l.bias.size(), 0.0)});
  }
  return z;
}

double head_forward(const RiskHead& head, std::span<const double> x) {
  if (head.layers.empty()) throw InputError("risk head has no layers");
  Vec a(x.begin(), x.end());
  for (std::size_t l = 0; l < head.layers.size(); ++l) {
    const auto& layer = head.layers[l];
    Vec pre = matvec(layer.weight, a);
    if (!layer.bias.empty()) axpy(1.0, layer.bias, pre);
    if (l + 1 < head.layers.size()) {
      for (double& v : pre) v = std::max(v, 0.0);
    }
    a = std::move(pre);
  }
  if (a.size() != 1) throw InputError("risk head output is not scalar");
  return a[0];
}

HeadGradients head_backward(const RiskHead& head, std::span<const double> x, double upstream) {
  if (head.layers.empty()) throw InputError("risk head has no layers");
  const std::size_t n = head.layers.size();
  // acts[l] is the input to layer l.
  std::vector<Vec> acts{Vec(x.begin(), x.end())};
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Vec pre = matvec(head.layers[l].weight, acts.back());
    if (!head.layers[l].bias.empty()) axpy(1.0, head.layers[l].bias, pre);
    for (double& v : pre) v = std::max(v, 0.0);
    acts.push_back(std::move(pre));
  }

  HeadGradients out{RiskHead::zeros_like(head), {}};
  Vec g{upstream};
  for (std::size_t l = n; l-- > 0;) {
    const auto& layer = head.layers[l];
    add_outer(out.params.layers[l].weight, g, acts[l]);
    if (!layer.bias.empty()) axpy(1.0, g, out.params.layers[l].bias);
    Vec back = matvec_transposed(layer.weight, g);
    if (l > 0) {
      // acts[l] = relu(pre); its derivative is 1 where the activation is positive.
      for (std::size_t i = 0; i < back.size(); ++i) {
        if (!(acts[l][i] > 0.0)) back[i] = 0.0;
      }
    }
    g = std::move(back);
  }
  out.input = std::move(g);
  return out;
}

std::string_view method_name(MethodKind k) noexcept {
  switch (k) {
    case MethodKind::DaalSingle: return "daal-single";
    case MethodKind::DaalMultiple: return "daal-multiple";
    case MethodKind::AttnMil: return "attn-mil";
    case MethodKind::MeanCox: return "mean-cox";
    case MethodKind::MaxCox: return "max-cox";
    case MethodKind::DeepSurvMean: return "deepsurv-mean";
    case MethodKind::DeepSurvMax: return "deepsurv-max";
  }
  return "?";
}

MethodKind parse_method(std::string_view name) {
  for (auto k : kAllMethods) {
    if (method_name(k) == name) return k;
  }
  throw InputError("unknown method: " + std::string(name));
}

Model Model::create(MethodKind kind, const ModelDims& dims, std::uint64_t seed) {
  if (dims.feature_dim == 0) throw InputError("model: feature_dim must be positive");
  Rng rng(seed);
  Model m;
  m.kind = kind;
  m.dims = dims;
  switch (kind) {
    case MethodKind::DaalSingle:
    case MethodKind::DaalMultiple:
      m.daal = DaalParams::glorot(dims.feature_dim, dims.query_dim, dims.info_dim, rng);
      m.head = RiskHead::linear(dims.info_dim, rng);
      break;
    case MethodKind::AttnMil:
      m.attn = AttnMilParams::glorot(dims.feature_dim, dims.attn_dim, rng);
      m.head = RiskHead::linear(dims.feature_dim, rng);
      break;
    case MethodKind::MeanCox:
    case MethodKind::MaxCox:
      m.head = RiskHead::linear(dims.feature_dim, rng);
      break;
    case MethodKind::DeepSurvMean:
    case MethodKind::DeepSurvMax:
      m.head = RiskHead::mlp(dims.feature_dim, dims.hidden_dim, rng);
      break;
  }
  return m;
}

Model Model::zeros_like(const Model& m) {
  Model z;
  z.kind = m.kind;
  z.dims = m.dims;
  z.multi_plane = m.multi_plane;
  if (m.daal) z.daal = DaalParams::zeros_like(*m.daal);
  if (m.attn) z.attn = AttnMilParams::zeros_like(*m.attn);
  z.head = RiskHead::zeros_like(m.head);
  return z;
}

namespace {

template <class Block, class Self>
std::vector<Block> collect_blocks(Self& m) {
  std::vector<Block> out;
  if (m.daal) {
    out.push_back({"daal.wq", m.daal->wq.rows(), m.daal->wq.cols(), m.daal->wq.values()});
    out.push_back({"daal.wv", m.daal->wv.rows(), m.daal->wv.cols(), m.daal->wv.values()});
  }
  if (m.attn) {
    out.push_back({"attn.v", m.attn->v.rows(), m.attn->v.cols(), m.attn->v.values()});
    out.push_back({"attn.w", m.attn->w.size(), 1, m.attn->w});
  }
  for (std::size_t l = 0; l < m.head.layers.size(); ++l) {
    auto& layer = m.head.layers[l];
    const std::string prefix = "head." + std::to_string(l);
    out.push_back({prefix + ".weight", layer.weight.rows(), layer.weight.cols(), layer.weight.values()});
    if (!layer.bias.empty()) out.push_back({prefix + ".bias", layer.bias.size(), 1, layer.bias});
  }
  return out;
}

}  // namespace

std::vector<ParamBlock> Model::blocks() { return collect_blocks<ParamBlock>(*this); }

std::vector<ConstParamBlock> Model::blocks() const { return collect_blocks<ConstParamBlock>(*this); }

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks()) n += b.values.size();
  return n;
}

Vec Model::flatten() const {
  Vec flat;
  flat.reserve(parameter_count());
  for (const auto& b : blocks()) flat.insert(flat.end(), b.values.begin(), b.values.end());
  return flat;
}

void Model::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count()) {
    throw InputError("model: expected " + std::to_string(parameter_count()) + " parameters, got " +
                     std::to_string(flat.size()));
  }
  std::size_t at = 0;
  for (auto& b : blocks()) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(at), b.values.size(), b.values.begin());
    at += b.values.size();
  }
}

RiskOutput forward_risk(const Model& m, const FeatureBag& bag) {
  RiskOutput out;
  if (is_daal(m.kind)) {
    if (!m.daal) throw InputError("model: missing DAAL parameters");
    const auto rep = daal_forward(bag, *m.daal);
    for (std::size_t p = 0; p < 3; ++p) out.plane_risks[p] = head_forward(m.head, rep.plane_reps[p]);
    if (m.kind == MethodKind::DaalSingle) {
      out.risk = out.plane_risks[0];
    } else {
      out.argmax_plane = static_cast<std::size_t>(
          std::max_element(out.plane_risks.begin(), out.plane_risks.end()) -
          out.plane_risks.begin());
      out.risk = out.plane_risks[out.argmax_plane];
    }
    return out;
  }
  if (m.kind == MethodKind::AttnMil) {
    if (!m.attn) throw InputError("model: missing attention-MIL parameters");
    out.risk = head_forward(m.head, attnmil_forward(bag, *m.attn).pooled);
  } else {
    out.risk = head_forward(m.head, pool(bag, pool_mode(m.kind)));
  }
  out.plane_risks = {out.risk, out.risk, out.risk};
  return out;
}

void accumulate_risk_gradient(const Model& m, const FeatureBag& bag,
                              const std::array<double, 3>& d_plane, Model& grads) {
  if (is_daal(m.kind)) {
    const auto rep = daal_forward(bag, *m.daal);
    std::array<Vec, 3> upstream;
    for (std::size_t p = 0; p < 3; ++p) {
      if (d_plane[p] == 0.0) continue;
      auto hg = head_backward(m.head, rep.plane_reps[p], d_plane[p]);
      add_into(grads.head, hg.params);
      upstream[p] = std::move(hg.input);
    }
    const auto dg = daal_backward(bag, *m.daal, upstream);
    add_into(grads.daal->wq, dg.params.wq);
    add_into(grads.daal->wv, dg.params.wv);
    return;
  }
  const double d = d_plane[0];
  if (d == 0.0) return;
  if (m.kind == MethodKind::AttnMil) {
    const auto fwd = attnmil_forward(bag, *m.attn);
    auto hg = head_backward(m.head, fwd.pooled, d);
    add_into(grads.head, hg.params);
    const auto ag = attnmil_backward(bag, *m.attn, hg.input);
    add_into(grads.attn->v, ag.params.v);
    axpy(1.0, ag.params.w, grads.attn->w);
  } else {
    auto hg = head_backward(m.head, pool(bag, pool_mode(m.kind)), d);
    add_into(grads.head, hg.params);
  }
}

namespace {

bool trains_per_plane(const Model& m) {
  return m.kind == MethodKind::DaalMultiple && m.multi_plane == MultiPlaneTraining::PerPlane;
}

void check_objective_inputs(std::span<const FeatureBag> bags, std::span<const SurvivalLabel> labels) {
  if (bags.empty()) throw InputError("objective: empty cohort");
  if (bags.size() != labels.size()) throw InputError("objective: bag/label count mismatch");
}

}  // namespace

Objective cox_objective(const Model& m, std::span<const FeatureBag> bags,
                        std::span<const SurvivalLabel> labels) {
  check_objective_inputs(bags, labels);
  const std::size_t n = bags.size();
  std::vector<RiskOutput> outs;
  outs.reserve(n);
  for (const auto& b : bags) outs.push_back(forward_risk(m, b));

  Model grads = Model::zeros_like(m);
  Objective obj;
  if (trains_per_plane(m)) {
    std::array<Vec, 3> dr;
    for (std::size_t p = 0; p < 3; ++p) {
      Vec r(n);
      for (std::size_t i = 0; i < n; ++i) r[i] = outs[i].plane_risks[p];
      obj.loss += cox_loss(r, labels);
      dr[p] = cox_grad(r, labels);
    }
    for (std::size_t i = 0; i < n; ++i) {
      accumulate_risk_gradient(m, bags[i], {dr[0][i], dr[1][i], dr[2][i]}, grads);
    }
  } else {
    Vec r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = outs[i].risk;
    obj.loss = cox_loss(r, labels);
    const Vec dr = cox_grad(r, labels);
    for (std::size_t i = 0; i < n; ++i) {
      std::array<double, 3> d{};
      d[m.kind == MethodKind::DaalMultiple ? outs[i].argmax_plane : 0] = dr[i];
      accumulate_risk_gradient(m, bags[i], d, grads);
    }
  }
  obj.gradient = grads.flatten();
  return obj;
}

double cox_objective_loss(const Model& m, std::span<const FeatureBag> bags,
                          std::span<const SurvivalLabel> labels) {
  check_objective_inputs(bags, labels);
  const std::size_t n = bags.size();
  if (trains_per_plane(m)) {
    std::array<Vec, 3> r{Vec(n), Vec(n), Vec(n)};
    for (std::size_t i = 0; i < n; ++i) {
      const auto o = forward_risk(m, bags[i]);
      for (std::size_t p = 0; p < 3; ++p) r[p][i] = o.plane_risks[p];
    }
    return cox_loss(r[0], labels) + cox_loss(r[1], labels) + cox_loss(r[2], labels);
  }
  return cox_loss(predict_risks(m, bags), labels);
}

Vec predict_risks(const Model& m, std::span<const FeatureBag> bags) {
  Vec r;
  r.reserve(bags.size());
  for (const auto& b : bags) r.push_back(forward_risk(m, b).risk);
  return r;
}

}  // namespace daal
