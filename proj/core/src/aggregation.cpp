#include "daal/aggregation.hpp"

#include <algorithm>
#include <cmath>

#include "daal/binary_io.hpp"
#include "daal/error.hpp"

namespace daal {

namespace {

constexpr std::uint32_t kFvecVersion = 1;

void check_daal_dims(const FeatureBag& bag, const DaalParams& p) {
  bag.validate();
  if (p.wq.cols() != bag.feature_dim() || p.wv.cols() != bag.feature_dim()) {
    throw InputError("daal: projection width does not match feature dim " +
                     std::to_string(bag.feature_dim()));
  }
  if (p.wq.rows() == 0 || p.wv.rows() == 0) throw InputError("daal: empty projection");
}

void check_attn_dims(const FeatureBag& bag, const AttnMilParams& p) {
  if (bag.slice_count() == 0) throw InputError("attnmil: empty bag");
  if (p.v.cols() != bag.feature_dim() || p.v.rows() != p.w.size() || p.w.empty()) {
    throw InputError("attnmil: parameter shapes do not match feature dim " +
                     std::to_string(bag.feature_dim()));
  }
}

// Row s of the result is m h_s.
Mat project_rows(const Mat& h, const Mat& m) {
  Mat out(h.rows(), m.rows());
  for (std::size_t s = 0; s < h.rows(); ++s) {
    auto row = out.row(s);
    for (std::size_t i = 0; i < m.rows(); ++i) row[i] = dot(m.row(i), h.row(s));
  }
  return out;
}

}  // namespace

void FeatureBag::validate() const {
  const std::size_t k = slice_count();
  if (k < 3) throw InputError("bag " + patient_id + ": needs at least 3 slices");
  if (feature_dim() == 0) throw InputError("bag " + patient_id + ": zero feature dim");
  for (std::size_t i = 0; i < 3; ++i) {
    if (anchor_pos[i] >= k) throw InputError("bag " + patient_id + ": anchor position out of range");
    for (std::size_t j = 0; j < i; ++j) {
      if (anchor_pos[i] == anchor_pos[j]) {
        throw InputError("bag " + patient_id + ": anchor positions must be distinct");
      }
    }
  }
  for (double v : features.values()) {
    if (!std::isfinite(v)) throw InputError("bag " + patient_id + ": non-finite feature");
  }
}

DaalParams DaalParams::glorot(std::size_t feature_dim, std::size_t query_dim,
                              std::size_t info_dim, Rng& rng) {
  DaalParams p;
  p.wq = glorot_init(query_dim, feature_dim, rng);
  p.wv = glorot_init(info_dim, feature_dim, rng);
  return p;
}

DaalParams DaalParams::zeros_like(const DaalParams& p) {
  return {Mat(p.wq.rows(), p.wq.cols()), Mat(p.wv.rows(), p.wv.cols())};
}

DaalOutput daal_forward(const FeatureBag& bag, const DaalParams& p) {
  check_daal_dims(bag, p);
  const Mat q = project_rows(bag.features, p.wq);
  const Mat v = project_rows(bag.features, p.wv);
  const std::size_t k = bag.slice_count();

  DaalOutput out;
  Vec scores(k);
  for (std::size_t plane = 0; plane < 3; ++plane) {
    const auto qa = q.row(bag.anchor_pos[plane]);
    for (std::size_t s = 0; s < k; ++s) scores[s] = dot(q.row(s), qa);
    out.plane_weights[plane] = softmax(scores);
    Vec b(p.wv.rows(), 0.0);
    for (std::size_t s = 0; s < k; ++s) axpy(out.plane_weights[plane][s], v.row(s), b);
    out.plane_reps[plane] = std::move(b);
  }
  return out;
}

DaalGradients daal_backward(const FeatureBag& bag, const DaalParams& p,
                            const std::array<Vec, 3>& upstream) {
  check_daal_dims(bag, p);
  const std::size_t k = bag.slice_count();
  const std::size_t info_dim = p.wv.rows();
  const Mat q = project_rows(bag.features, p.wq);
  const Mat v = project_rows(bag.features, p.wv);

  Mat dq(k, p.wq.rows());
  Mat dv(k, info_dim);
  Vec scores(k), dweight(k);
  for (std::size_t plane = 0; plane < 3; ++plane) {
    const Vec& g = upstream[plane];
    if (g.empty()) continue;
    if (g.size() != info_dim) throw InputError("daal_backward: upstream gradient has wrong length");
    const std::size_t a = bag.anchor_pos[plane];
    const auto qa = q.row(a);
    for (std::size_t s = 0; s < k; ++s) scores[s] = dot(q.row(s), qa);
    const Vec u = softmax(scores);

    // b = sum_s u_s v_s
    double mean_dweight = 0.0;
    for (std::size_t s = 0; s < k; ++s) {
      axpy(u[s], g, dv.row(s));
      dweight[s] = dot(g, v.row(s));
      mean_dweight += u[s] * dweight[s];
    }
    // softmax Jacobian, then score_s = <q_s, q_a> feeds both q_s and q_a.
    for (std::size_t s = 0; s < k; ++s) {
      const double dscore = u[s] * (dweight[s] - mean_dweight);
      axpy(dscore, qa, dq.row(s));
      axpy(dscore, q.row(s), dq.row(a));
    }
  }

  DaalGradients out{DaalParams::zeros_like(p), Mat(k, bag.feature_dim())};
  for (std::size_t s = 0; s < k; ++s) {
    const auto h = bag.features.row(s);
    add_outer(out.params.wq, dq.row(s), h);
    add_outer(out.params.wv, dv.row(s), h);
    auto dh = out.features.row(s);
    const Vec from_q = matvec_transposed(p.wq, dq.row(s));
    const Vec from_v = matvec_transposed(p.wv, dv.row(s));
    for (std::size_t f = 0; f < dh.size(); ++f) dh[f] = from_q[f] + from_v[f];
  }
  return out;
}

AttnMilParams AttnMilParams::glorot(std::size_t feature_dim, std::size_t attn_dim, Rng& rng) {
  AttnMilParams p;
  p.v = glorot_init(attn_dim, feature_dim, rng);
  const Mat w = glorot_init(1, attn_dim, rng);
  p.w.assign(w.values().begin(), w.values().end());
  return p;
}

AttnMilParams AttnMilParams::zeros_like(const AttnMilParams& p) {
  return {Mat(p.v.rows(), p.v.cols()), Vec(p.w.size(), 0.0)};
}

AttnMilOutput attnmil_forward(const FeatureBag& bag, const AttnMilParams& p) {
  check_attn_dims(bag, p);
  const std::size_t k = bag.slice_count();
  Vec scores(k);
  for (std::size_t s = 0; s < k; ++s) {
    Vec z = matvec(p.v, bag.features.row(s));
    for (double& zi : z) zi = std::tanh(zi);
    scores[s] = dot(p.w, z);
  }
  AttnMilOutput out{Vec(bag.feature_dim(), 0.0), softmax(scores)};
  for (std::size_t s = 0; s < k; ++s) axpy(out.weights[s], bag.features.row(s), out.pooled);
  return out;
}

AttnMilGradients attnmil_backward(const FeatureBag& bag, const AttnMilParams& p,
                                  std::span<const double> upstream) {
  check_attn_dims(bag, p);
  if (upstream.size() != bag.feature_dim()) {
    throw InputError("attnmil_backward: upstream gradient has wrong length");
  }
  const std::size_t k = bag.slice_count();
  Mat z(k, p.w.size());
  Vec scores(k);
  for (std::size_t s = 0; s < k; ++s) {
    auto zs = z.row(s);
    const Vec pre = matvec(p.v, bag.features.row(s));
    for (std::size_t i = 0; i < pre.size(); ++i) zs[i] = std::tanh(pre[i]);
    scores[s] = dot(p.w, zs);
  }
  const Vec a = softmax(scores);

  Vec dweight(k);
  double mean_dweight = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    dweight[s] = dot(upstream, bag.features.row(s));
    mean_dweight += a[s] * dweight[s];
  }

  AttnMilGradients out{AttnMilParams::zeros_like(p), Mat(k, bag.feature_dim())};
  Vec dpre(p.w.size());
  for (std::size_t s = 0; s < k; ++s) {
    const double dscore = a[s] * (dweight[s] - mean_dweight);
    const auto zs = z.row(s);
    axpy(dscore, zs, out.params.w);
    for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] = dscore * p.w[i] * (1.0 - zs[i] * zs[i]);
    add_outer(out.params.v, dpre, bag.features.row(s));
    auto dh = out.features.row(s);
    axpy(a[s], upstream, dh);
    const Vec back = matvec_transposed(p.v, dpre);
    axpy(1.0, back, dh);
  }
  return out;
}

Vec pool(const FeatureBag& bag, PoolMode mode) {
  const std::size_t k = bag.slice_count();
  if (k == 0) throw InputError("pool: empty bag");
  Vec out(bag.features.row(0).begin(), bag.features.row(0).end());
  for (std::size_t s = 1; s < k; ++s) {
    const auto h = bag.features.row(s);
    for (std::size_t f = 0; f < out.size(); ++f) {
      out[f] = mode == PoolMode::Mean ? out[f] + h[f] : std::max(out[f], h[f]);
    }
  }
  if (mode == PoolMode::Mean) {
    for (double& x : out) x /= static_cast<double>(k);
  }
  return out;
}

void write_fvec(const std::filesystem::path& path, const FeatureBag& bag) {
  bag.validate();
  io::ByteWriter w;
  w.magic("FVEC");
  w.u32(kFvecVersion);
  w.u32(static_cast<std::uint32_t>(bag.slice_count()));
  w.u32(static_cast<std::uint32_t>(bag.feature_dim()));
  for (auto a : bag.anchor_pos) w.u32(static_cast<std::uint32_t>(a));
  for (double x : bag.features.values()) w.f32(static_cast<float>(x));
  io::write_file(path, w.bytes());
}

FeatureBag read_fvec(const std::filesystem::path& path, std::string patient_id) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, path.string());
  r.expect_magic("FVEC");
  if (const auto version = r.u32(); version != kFvecVersion) {
    throw InputError(path.string() + ": unsupported FVEC version " + std::to_string(version));
  }
  const std::size_t k = r.u32();
  const std::size_t f = r.u32();
  FeatureBag bag;
  bag.patient_id = patient_id.empty() ? path.stem().string() : std::move(patient_id);
  for (auto& a : bag.anchor_pos) a = r.u32();
  const auto values = r.f32s(k * f);
  if (r.remaining() != 0) throw InputError(path.string() + ": trailing bytes after features");
  bag.features = Mat(k, f, std::vector<double>(values.begin(), values.end()));
  bag.validate();
  return bag;
}

}  // namespace daal
