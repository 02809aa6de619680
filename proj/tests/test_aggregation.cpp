#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <numeric>
#include <random>

#include "daal/aggregation.hpp"
#include "daal/binary_io.hpp"
#include "daal/error.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace daal;
using testutil::random_bag;
using testutil::random_mat;
using testutil::to_rows;

namespace {

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

// Central difference of f with respect to every entry of `target`.
std::vector<double> numeric_grad(std::span<double> target, const std::function<double()>& f,
                                 double h = 1e-5) {
  std::vector<double> g(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double x = target[i];
    target[i] = x + h;
    const double up = f();
    target[i] = x - h;
    const double down = f();
    target[i] = x;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

double daal_probe(const FeatureBag& bag, const DaalParams& p, const std::array<Vec, 3>& g) {
  const auto out = daal_forward(bag, p);
  double s = 0;
  for (int q = 0; q < 3; ++q) {
    if (!g[q].empty()) s += dot(out.plane_reps[q], g[q]);
  }
  return s;
}

}  // namespace

TEST(DaalForward, AllAnchorsIdenticalSlices) {
  std::mt19937_64 gen(1);
  FeatureBag bag;
  const auto h = random_mat(1, 4, gen);
  bag.features = Mat(3, 4);
  for (std::size_t s = 0; s < 3; ++s) std::copy(h.values().begin(), h.values().end(), bag.features.row(s).begin());
  bag.anchor_pos = {0, 1, 2};
  const DaalParams p{random_mat(3, 4, gen), random_mat(2, 4, gen)};
  const auto out = daal_forward(bag, p);
  const auto wvh = matvec(p.wv, h.values());
  for (int q = 0; q < 3; ++q) {
    for (double u : out.plane_weights[q]) EXPECT_NEAR(u, 1.0 / 3.0, 1e-15);
    for (std::size_t l = 0; l < 2; ++l) EXPECT_NEAR(out.plane_reps[q][l], wvh[l], 1e-12);
  }
}

TEST(DaalForward, ZeroQueriesGiveUniformWeights) {
  std::mt19937_64 gen(2);
  const auto bag = random_bag(7, 5, gen);
  const DaalParams p{Mat(4, 5), random_mat(3, 5, gen)};
  const auto out = daal_forward(bag, p);
  Vec mean_v(3, 0.0);
  for (std::size_t s = 0; s < 7; ++s) axpy(1.0 / 7.0, matvec(p.wv, bag.features.row(s)), mean_v);
  for (int q = 0; q < 3; ++q) {
    for (double u : out.plane_weights[q]) EXPECT_NEAR(u, 1.0 / 7.0, 1e-15);
    for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(out.plane_reps[q][l], mean_v[l], 1e-12);
  }
}

TEST(DaalForward, MatchesStraightLineOracle) {
  std::mt19937_64 gen(3);
  {
    const auto bag = random_bag(5, 4, gen);
    const DaalParams p{random_mat(3, 4, gen), random_mat(2, 4, gen)};
    const auto out = daal_forward(bag, p);
    const auto ref = oracle::daal(to_rows(bag.features), to_rows(p.wq), to_rows(p.wv), bag.anchor_pos);
    for (int q = 0; q < 3; ++q) {
      for (std::size_t l = 0; l < 2; ++l) EXPECT_NEAR(out.plane_reps[q][l], ref.b[q][l], 1e-10);
      for (std::size_t s = 0; s < 5; ++s) EXPECT_NEAR(out.plane_weights[q][s], ref.u[q][s], 1e-10);
    }
  }
  std::uniform_int_distribution<std::size_t> kd(3, 8), fd(1, 8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = kd(gen), f = fd(gen), d = fd(gen), l = fd(gen);
    const auto bag = random_bag(k, f, gen);
    const DaalParams p{random_mat(d, f, gen, 0.5), random_mat(l, f, gen, 0.5)};
    const auto out = daal_forward(bag, p);
    const auto ref = oracle::daal(to_rows(bag.features), to_rows(p.wq), to_rows(p.wv), bag.anchor_pos);
    for (int q = 0; q < 3; ++q)
      for (std::size_t i = 0; i < l; ++i) EXPECT_NEAR(out.plane_reps[q][i], ref.b[q][i], 1e-10);
  }
}

TEST(DaalForward, WeightsSumToOne) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 50; ++trial) {
    const auto bag = random_bag(9, 6, gen);
    const DaalParams p{random_mat(5, 6, gen), random_mat(4, 6, gen)};
    const auto out = daal_forward(bag, p);
    for (const auto& u : out.plane_weights) {
      EXPECT_NEAR(std::accumulate(u.begin(), u.end(), 0.0), 1.0, 1e-9);
      for (double x : u) {
        EXPECT_GT(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
    }
  }
}

TEST(DaalForward, PermutationEquivariant) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 50; ++trial) {
    const auto bag = random_bag(8, 5, gen);
    const DaalParams p{random_mat(4, 5, gen), random_mat(3, 5, gen)};
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    FeatureBag shuffled = bag;
    for (std::size_t s = 0; s < 8; ++s) {
      std::copy(bag.features.row(perm[s]).begin(), bag.features.row(perm[s]).end(),
                shuffled.features.row(s).begin());
      for (int q = 0; q < 3; ++q) {
        if (bag.anchor_pos[q] == perm[s]) shuffled.anchor_pos[q] = s;
      }
    }
    const auto a = daal_forward(bag, p), b = daal_forward(shuffled, p);
    for (int q = 0; q < 3; ++q)
      for (std::size_t l = 0; l < 3; ++l) EXPECT_NEAR(a.plane_reps[q][l], b.plane_reps[q][l], 1e-9);
  }
}

TEST(DaalForward, DimensionMismatchRejected) {
  std::mt19937_64 gen(6);
  const auto bag = random_bag(4, 5, gen);
  EXPECT_THROW(daal_forward(bag, {random_mat(3, 4, gen), random_mat(2, 5, gen)}), InputError);
  FeatureBag bad = bag;
  bad.anchor_pos = {0, 0, 1};
  EXPECT_THROW(daal_forward(bad, {random_mat(3, 5, gen), random_mat(2, 5, gen)}), InputError);
}

TEST(DaalBackward, ZeroUpstreamGivesZeroGradient) {
  std::mt19937_64 gen(7);
  const auto bag = random_bag(5, 4, gen);
  const DaalParams p{random_mat(3, 4, gen), random_mat(2, 4, gen)};
  const auto g = daal_backward(bag, p, {Vec(2, 0.0), Vec(2, 0.0), Vec(2, 0.0)});
  for (double v : g.params.wq.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.params.wv.values()) EXPECT_EQ(v, 0.0);
  for (double v : g.features.values()) EXPECT_EQ(v, 0.0);
}

TEST(DaalBackward, MatchesFiniteDifferences) {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto bag = random_bag(6, 5, gen);
    DaalParams p{random_mat(4, 5, gen, 0.7), random_mat(3, 5, gen, 0.7)};
    std::array<Vec, 3> up;
    for (auto& u : up) {
      const auto m = random_mat(1, 3, gen);
      u.assign(m.values().begin(), m.values().end());
    }
    const auto g = daal_backward(bag, p, up);
    auto probe = [&] { return daal_probe(bag, p, up); };
    const auto nq = numeric_grad(p.wq.values(), probe);
    const auto nv = numeric_grad(p.wv.values(), probe);
    const auto nh = numeric_grad(bag.features.values(), probe);
    for (std::size_t i = 0; i < nq.size(); ++i) EXPECT_LT(rel_err(g.params.wq.values()[i], nq[i]), 1e-4);
    for (std::size_t i = 0; i < nv.size(); ++i) EXPECT_LT(rel_err(g.params.wv.values()[i], nv[i]), 1e-4);
    for (std::size_t i = 0; i < nh.size(); ++i) EXPECT_LT(rel_err(g.features.values()[i], nh[i]), 1e-4);
  }
}

TEST(DaalBackward, NonAnchorSliceGradientUsesOnlyItsOwnTerms) {
  std::mt19937_64 gen(9);
  auto bag = random_bag(6, 4, gen);
  bag.anchor_pos = {0, 2, 4};
  const std::size_t s = 3;
  const DaalParams p{random_mat(3, 4, gen, 0.7), random_mat(2, 4, gen, 0.7)};
  std::array<Vec, 3> up{Vec{0.3, -1.2}, Vec{}, Vec{}};  // only b_x flows back

  // A non-anchor slice enters b_x through q_s (its own score) and v_s only:
  // dh_s = Wq^T (dscore_s q_anchor) + Wv^T (U_s g).
  const auto fwd = daal_forward(bag, p);
  const auto qa = matvec(p.wq, bag.features.row(0));
  const auto& u = fwd.plane_weights[0];
  double mean = 0;
  std::vector<double> dw(6);
  for (std::size_t t = 0; t < 6; ++t) {
    dw[t] = dot(up[0], matvec(p.wv, bag.features.row(t)));
    mean += u[t] * dw[t];
  }
  Vec dq = qa;
  for (double& x : dq) x *= u[s] * (dw[s] - mean);
  Vec dv = up[0];
  for (double& x : dv) x *= u[s];
  Vec expect = matvec_transposed(p.wq, dq);
  axpy(1.0, matvec_transposed(p.wv, dv), expect);

  const auto g = daal_backward(bag, p, up);
  auto row = bag.features.row(s);
  const auto numeric = numeric_grad(row, [&] { return daal_probe(bag, p, up); });
  for (std::size_t f = 0; f < 4; ++f) {
    EXPECT_NEAR(g.features(s, f), expect[f], 1e-12);
    EXPECT_LT(rel_err(g.features(s, f), numeric[f]), 1e-4);
  }
}

TEST(DaalForward, IdenticalFeaturesReduceToProjection) {
  std::mt19937_64 gen(10);
  const auto h = random_mat(1, 6, gen);
  FeatureBag bag;
  bag.features = Mat(7, 6);
  for (std::size_t s = 0; s < 7; ++s) std::copy(h.values().begin(), h.values().end(), bag.features.row(s).begin());
  bag.anchor_pos = {6, 1, 3};
  const DaalParams p{random_mat(5, 6, gen), random_mat(4, 6, gen)};
  const auto out = daal_forward(bag, p);
  const auto expect = matvec(p.wv, h.values());
  for (int q = 0; q < 3; ++q)
    for (std::size_t l = 0; l < 4; ++l) EXPECT_NEAR(out.plane_reps[q][l], expect[l], 1e-12);
}

TEST(AttnMil, IdenticalSlicesAndZeroScorer) {
  std::mt19937_64 gen(11);
  const auto h = random_mat(1, 4, gen);
  FeatureBag same;
  same.features = Mat(5, 4);
  for (std::size_t s = 0; s < 5; ++s) std::copy(h.values().begin(), h.values().end(), same.features.row(s).begin());
  const AttnMilParams p{random_mat(3, 4, gen), Vec{0.5, -1.0, 2.0}};
  const auto out = attnmil_forward(same, p);
  for (double a : out.weights) EXPECT_NEAR(a, 0.2, 1e-15);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_NEAR(out.pooled[f], h.values()[f], 1e-12);

  const auto bag = random_bag(5, 4, gen);
  const auto zero = attnmil_forward(bag, {random_mat(3, 4, gen), Vec(3, 0.0)});
  const auto mean = pool(bag, PoolMode::Mean);
  for (std::size_t f = 0; f < 4; ++f) EXPECT_NEAR(zero.pooled[f], mean[f], 1e-12);
}

TEST(AttnMil, MatchesOracleAndFiniteDifferences) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 20; ++trial) {
    auto bag = random_bag(6, 5, gen);
    AttnMilParams p{random_mat(4, 5, gen), {}};
    const auto w = random_mat(1, 4, gen);
    p.w.assign(w.values().begin(), w.values().end());
    const auto out = attnmil_forward(bag, p);
    const auto ref = oracle::attnmil(to_rows(bag.features), to_rows(p.v), p.w);
    for (std::size_t f = 0; f < 5; ++f) EXPECT_NEAR(out.pooled[f], ref[f], 1e-10);

    const auto gm = random_mat(1, 5, gen);
    const Vec up(gm.values().begin(), gm.values().end());
    const auto g = attnmil_backward(bag, p, up);
    auto probe = [&] { return dot(attnmil_forward(bag, p).pooled, up); };
    const auto nv = numeric_grad(p.v.values(), probe);
    const auto nw = numeric_grad(p.w, probe);
    const auto nh = numeric_grad(bag.features.values(), probe);
    for (std::size_t i = 0; i < nv.size(); ++i) EXPECT_LT(rel_err(g.params.v.values()[i], nv[i]), 1e-4);
    for (std::size_t i = 0; i < nw.size(); ++i) EXPECT_LT(rel_err(g.params.w[i], nw[i]), 1e-4);
    for (std::size_t i = 0; i < nh.size(); ++i) EXPECT_LT(rel_err(g.features.values()[i], nh[i]), 1e-4);
  }
}

TEST(Pool, ClosedForms) {
  FeatureBag bag;
  bag.features = Mat(2, 2, {1, 0, 0, 1});
  EXPECT_EQ(pool(bag, PoolMode::Mean), (Vec{0.5, 0.5}));
  EXPECT_EQ(pool(bag, PoolMode::Max), (Vec{1, 1}));
  FeatureBag same;
  same.features = Mat(3, 2, {2, -1, 2, -1, 2, -1});
  EXPECT_EQ(pool(same, PoolMode::Mean), (Vec{2, -1}));
  EXPECT_EQ(pool(same, PoolMode::Max), (Vec{2, -1}));
}

TEST(Pool, MatchesLoopOracle) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto bag = random_bag(3 + gen() % 10, 1 + gen() % 8, gen);
    const auto rows = to_rows(bag.features);
    std::vector<double> sum(bag.feature_dim(), 0.0), mx(bag.feature_dim(), -INFINITY);
    for (const auto& r : rows)
      for (std::size_t f = 0; f < r.size(); ++f) {
        sum[f] += r[f];
        mx[f] = std::max(mx[f], r[f]);
      }
    const auto mean = pool(bag, PoolMode::Mean);
    EXPECT_EQ(pool(bag, PoolMode::Max), mx);
    for (std::size_t f = 0; f < sum.size(); ++f) EXPECT_NEAR(mean[f], sum[f] / rows.size(), 1e-15);
  }
}

TEST(Fvec, RoundTripAndLayout) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "daal_test_fvec";
  fs::create_directories(dir);
  std::mt19937_64 gen(14);
  auto bag = random_bag(5, 3, gen);
  bag.patient_id = "p7";
  for (double& v : bag.features.values()) v = static_cast<double>(static_cast<float>(v));
  write_fvec(dir / "p7.fvec", bag);
  const auto bytes = io::read_file(dir / "p7.fvec");
  ASSERT_EQ(bytes.size(), 4u + 24u + 4u * 15u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "FVEC");
  EXPECT_EQ(bytes[8], 5);   // K
  EXPECT_EQ(bytes[12], 3);  // F
  const auto back = read_fvec(dir / "p7.fvec");
  EXPECT_EQ(back.patient_id, "p7");
  EXPECT_EQ(back.anchor_pos, bag.anchor_pos);
  EXPECT_EQ(back.features, bag.features);

  auto bad = bytes;
  bad[16] = bad[20];  // ay = ax: duplicate anchors
  bad[17] = bad[21];
  io::write_file(dir / "bad.fvec", bad);
  EXPECT_THROW(read_fvec(dir / "bad.fvec"), InputError);
  bad = bytes;
  bad[0] = 'X';
  io::write_file(dir / "bad.fvec", bad);
  EXPECT_THROW(read_fvec(dir / "bad.fvec"), InputError);
}
