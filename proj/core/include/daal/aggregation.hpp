#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>

#include "daal/numerics.hpp"

namespace daal {

/// One patient's slice-level representations: K rows of dimension F, plus the
/// positions of the sagittal, coronal and axial anchor slices within the list.
struct FeatureBag {
  std::string patient_id;
  Mat features;                         // K x F
  std::array<std::size_t, 3> anchor_pos{};  // (x, y, z) anchors

  std::size_t slice_count() const noexcept { return features.rows(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  /// K >= 3, anchors distinct and in range, all entries finite.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Anchor attention
//
// q_s = Wq h_s, v_s = Wv h_s. For each anchor p the slice weights are
// U_p = softmax_s <q_s, q_anchor_p> (the anchor takes part in its own
// softmax), and the plane representation is b_p = sum_s U_p(s) v_s. One
// (Wq, Wv) pair is shared by all slices and all three anchors. Inner products
// are not temperature-scaled.
// ---------------------------------------------------------------------------

struct DaalParams {
  Mat wq;  // D x F
  Mat wv;  // L x F

  static DaalParams glorot(std::size_t feature_dim, std::size_t query_dim, std::size_t info_dim,
                           Rng& rng);
  static DaalParams zeros_like(const DaalParams& p);
};

struct DaalOutput {
  std::array<Vec, 3> plane_reps;     // b_x, b_y, b_z, each of length L
  std::array<Vec, 3> plane_weights;  // U_x, U_y, U_z, each of length K
};

DaalOutput daal_forward(const FeatureBag& bag, const DaalParams& p);

struct DaalGradients {
  DaalParams params;  // dWq, dWv
  Mat features;       // d/dh_s, K x F
};

/// Exact gradients of sum_p <upstream[p], b_p>. An empty upstream vector
/// means that plane does not contribute.
DaalGradients daal_backward(const FeatureBag& bag, const DaalParams& p,
                            const std::array<Vec, 3>& upstream);

// ---------------------------------------------------------------------------
// Attention-MIL baseline: a_s = softmax_s(w . tanh(V h_s)),
// pooled = sum_s a_s h_s.
// ---------------------------------------------------------------------------

struct AttnMilParams {
  Mat v;  // A x F
  Vec w;  // A

  static AttnMilParams glorot(std::size_t feature_dim, std::size_t attn_dim, Rng& rng);
  static AttnMilParams zeros_like(const AttnMilParams& p);
};

struct AttnMilOutput {
  Vec pooled;   // F
  Vec weights;  // K
};

AttnMilOutput attnmil_forward(const FeatureBag& bag, const AttnMilParams& p);

struct AttnMilGradients {
  AttnMilParams params;
  Mat features;
};

AttnMilGradients attnmil_backward(const FeatureBag& bag, const AttnMilParams& p,
                                  std::span<const double> upstream);

enum class PoolMode { Mean, Max };

/// Coordinatewise mean or max over the K slice vectors.
Vec pool(const FeatureBag& bag, PoolMode mode);

// FVEC: "FVEC", u32 version=1, u32 K, u32 F, u32 ax, u32 ay, u32 az,
// then K*F f32 row-major. Little-endian.
void write_fvec(const std::filesystem::path& path, const FeatureBag& bag);
FeatureBag read_fvec(const std::filesystem::path& path, std::string patient_id = {});

}  // namespace daal
