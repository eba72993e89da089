#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tnvault/decomp.hpp"
#include "tnvault/errors.hpp"
#include "tnvault/ops.hpp"

using namespace tnvault;

namespace {

TTRepresentation ones_tt(const Shape& modes) {
  TTRepresentation t;
  for (std::size_t n : modes) {
    DenseTensor c({1, n, 1});
    for (std::size_t i = 0; i < n; ++i) c[i] = 1.0;
    t.cores.push_back(c);
  }
  return t;
}

TTRepresentation zero_tt(const Shape& modes) {
  TTRepresentation t;
  for (std::size_t n : modes) t.cores.push_back(DenseTensor({1, n, 1}));
  return t;
}

DenseTensor tt_dense(const TTRepresentation& t) { return oracle::chain_dense(t.cores, false); }

DenseTensor tucker_of(const TuckerRepresentation& t) {
  return oracle::tucker_dense(t.core, t.factors);
}

}  // namespace

TEST(TuckerBinary, FourOpsMatchDenseOracles) {
  std::mt19937_64 g(1);
  const auto a = oracle::random_tucker({4, 4, 4}, {2, 3, 2}, g);
  const auto b = oracle::random_tucker({4, 4, 4}, {3, 1, 2}, g);
  const DenseTensor da = tucker_of(a), db = tucker_of(b);

  const auto add = tucker_binary(TuckerOp::kAdd, a, b);
  EXPECT_LE(oracle::rel_diff(tucker_of(add), oracle::add(da, db)), 1e-11);
  EXPECT_EQ(add.ranks(), (std::vector<std::size_t>{5, 4, 4}));

  const auto had = tucker_binary(TuckerOp::kHadamard, a, b);
  EXPECT_LE(oracle::rel_diff(tucker_of(had), oracle::hadamard(da, db)), 1e-11);
  EXPECT_EQ(had.ranks(), (std::vector<std::size_t>{6, 3, 4}));

  const auto ds = tucker_binary(TuckerOp::kDirectSum, a, b);
  EXPECT_LE(oracle::rel_diff(tucker_of(ds), oracle::direct_sum(da, db)), 1e-11);
  EXPECT_EQ(ds.ranks(), (std::vector<std::size_t>{5, 4, 4}));

  const auto kr = tucker_binary(TuckerOp::kKronecker, a, b);
  EXPECT_LE(oracle::rel_diff(tucker_of(kr), oracle::kronecker(da, db)), 1e-11);
  EXPECT_EQ(kr.ranks(), (std::vector<std::size_t>{6, 3, 4}));
}

TEST(TuckerBinary, HadamardWithOnesIsIdentity) {
  std::mt19937_64 g(2);
  const auto a = oracle::random_tucker({3, 4, 2}, {2, 2, 2}, g);
  TuckerRepresentation ones;
  ones.core = DenseTensor({1, 1, 1}, {1.0});
  for (std::size_t n : {3, 4, 2}) ones.factors.push_back(tnvault::Matrix::Ones(n, 1));
  EXPECT_LE(oracle::rel_diff(reconstruct(tucker_binary(TuckerOp::kHadamard, a, ones)), tucker_of(a)),
            1e-14);
}

TEST(TuckerBinary, ShapeMismatch) {
  std::mt19937_64 g(3);
  const auto a = oracle::random_tucker({3, 3, 3}, {2, 2, 2}, g);
  const auto b = oracle::random_tucker({3, 4, 3}, {2, 2, 2}, g);
  try {
    tucker_binary(TuckerOp::kAdd, a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(TtAdd, MatchesDenseAndRankSums) {
  std::mt19937_64 g(4);
  const auto a = oracle::random_tt({3, 4, 5}, {1, 2, 3, 1}, g);
  const auto b = oracle::random_tt({3, 4, 5}, {1, 4, 1, 1}, g);
  const auto s = tt_add(a, b);
  s.validate();
  EXPECT_LE(oracle::rel_diff(tt_dense(s), oracle::add(tt_dense(a), tt_dense(b))), 1e-11);
  EXPECT_EQ(s.ranks(), (std::vector<std::size_t>{1, 6, 4, 1}));
  EXPECT_LE(oracle::rel_diff(tt_dense(tt_add(a, zero_tt({3, 4, 5}))), tt_dense(a)), 1e-15);
}

TEST(TtHadamard, MatchesDenseAndRankProducts) {
  std::mt19937_64 g(5);
  const auto a = oracle::random_tt({3, 3, 3}, {1, 2, 3, 1}, g);
  const auto b = oracle::random_tt({3, 3, 3}, {1, 2, 2, 1}, g);
  const auto h = tt_hadamard(a, b);
  h.validate();
  EXPECT_LE(oracle::rel_diff(tt_dense(h), oracle::hadamard(tt_dense(a), tt_dense(b))), 1e-11);
  EXPECT_EQ(h.ranks(), (std::vector<std::size_t>{1, 4, 6, 1}));
  EXPECT_LE(oracle::rel_diff(tt_dense(tt_hadamard(a, ones_tt({3, 3, 3}))), tt_dense(a)), 1e-15);
}

TEST(TtMatvec, IdentityAndDenseOracle) {
  std::mt19937_64 g(6);
  const auto x = oracle::random_tt({2, 3, 2}, {1, 2, 2, 1}, g);
  const auto id = TTMatrixRepresentation::identity({2, 3, 2});
  EXPECT_LE(oracle::rel_diff(tt_dense(tt_matvec(id, x)), tt_dense(x)), 1e-12);

  TTMatrixRepresentation m;
  m.cores = {oracle::random_tensor({1, 2, 2, 2}, g), oracle::random_tensor({2, 2, 2, 2}, g),
             oracle::random_tensor({2, 2, 2, 1}, g)};
  m.validate();
  const auto v = oracle::random_tt({2, 2, 2}, {1, 3, 3, 1}, g);
  const auto y = tt_matvec(m, v);
  EXPECT_LE(oracle::rel_diff(tt_dense(y), oracle::tt_matvec_dense(m, tt_dense(v))), 1e-11);
  EXPECT_EQ(y.ranks(), (std::vector<std::size_t>{1, 6, 6, 1}));

  // Flattened operator times flattened vector.
  const tnvault::Matrix dense = to_dense(m);
  const DenseTensor dv = tt_dense(v);
  const tnvault::Vector flat =
      dense * Eigen::Map<const tnvault::Vector>(dv.data().data(), static_cast<Eigen::Index>(dv.size()));
  const DenseTensor dy = tt_dense(y);
  for (std::size_t i = 0; i < dy.size(); ++i) EXPECT_NEAR(dy[i], flat(static_cast<Eigen::Index>(i)), 1e-11);
}

TEST(TtInner, NormIdentityAndDotOracle) {
  std::mt19937_64 g(7);
  const auto a = oracle::random_tt({3, 4, 2}, {1, 2, 2, 1}, g);
  const auto b = oracle::random_tt({3, 4, 2}, {1, 3, 2, 1}, g);
  const double n = oracle::frob(tt_dense(a));
  EXPECT_NEAR(tt_inner(a, a), n * n, 1e-10 * n * n);
  const double dot = oracle::inner(tt_dense(a), tt_dense(b));
  EXPECT_NEAR(tt_inner(a, b), dot, 1e-11 * std::max(1.0, std::abs(dot)));
  EXPECT_EQ(tt_inner(a, zero_tt({3, 4, 2})), 0.0);
}

TEST(TtQuadraticForm, MatchesDense) {
  std::mt19937_64 g(8);
  TTMatrixRepresentation m;
  m.cores = {oracle::random_tensor({1, 3, 3, 2}, g), oracle::random_tensor({2, 2, 2, 1}, g)};
  const auto x = oracle::random_tt({3, 2}, {1, 2, 1}, g);
  const DenseTensor dx = tt_dense(x);
  const double expect = oracle::inner(dx, oracle::tt_matvec_dense(m, dx));
  EXPECT_NEAR(tt_quadratic_form(m, x), expect, 1e-11 * std::max(1.0, std::abs(expect)));
}

TEST(TtRound, RecompressesRankInflation) {
  std::mt19937_64 g(9);
  const auto a = oracle::random_tt({4, 5, 4, 3}, {1, 3, 4, 2, 1}, g);
  const auto doubled = tt_add(a, a);
  for (bool rnd : {false, true}) {
    DecompositionOptions o;
    o.randomize = rnd;
    o.seed = 5;
    const auto r = tt_round(doubled, 1e-10, o);
    r.rep.validate();
    const auto ra = a.ranks(), rr = r.rep.ranks();
    for (std::size_t k = 0; k < ra.size(); ++k) EXPECT_LE(rr[k], ra[k]);
    EXPECT_LE(oracle::rel_diff(tt_dense(r.rep), tt_dense(tt_scale(a, 2.0))), 1e-8);
  }
}

TEST(TtRound, MinimalTtKeepsRanks) {
  std::mt19937_64 g(10);
  const auto a = oracle::random_tt({4, 5, 6}, {1, 3, 4, 1}, g);
  EXPECT_EQ(tt_round(a, 1e-12).rep.ranks(), a.ranks());
}

TEST(TtRound, RandomizedMatchesBaselineWithDifferentCores) {
  std::mt19937_64 g(11);
  const auto a = oracle::random_tt({4, 4, 4, 4}, {1, 3, 3, 3, 1}, g);
  DecompositionOptions base;
  base.randomize = false;
  DecompositionOptions rnd;
  rnd.seed = 17;
  const auto x = tt_round(a, 1e-12, base);
  const auto y = tt_round(a, 1e-12, rnd);
  EXPECT_LE(oracle::rel_diff(tt_dense(x.rep), tt_dense(y.rep)), 1e-10);
  EXPECT_GT(oracle::rel_diff(x.rep.cores[1], y.rep.cores[1]), 1e-3);
}

TEST(TtRound, ErrorBoundWhenTruncating) {
  std::mt19937_64 g(12);
  const auto a = oracle::random_tt({5, 5, 5, 5}, {1, 4, 6, 4, 1}, g);
  const DenseTensor d = tt_dense(a);
  for (double eps : {0.3, 0.1}) {
    for (bool r : {false, true}) {
      DecompositionOptions o;
      o.randomize = r;
      o.seed = 3;
      EXPECT_LE(oracle::rel_diff(tt_dense(tt_round(a, eps, o).rep), d), eps);
    }
  }
}

TEST(TtRound, StepsComposeToFullRound) {
  std::mt19937_64 g(13);
  const auto a = oracle::random_tt({3, 4, 3}, {1, 3, 3, 1}, g);
  DecompositionOptions o;
  o.seed = 23;
  const auto ref = tt_round(a, 0.05, o);

  std::vector<DenseTensor> cores = a.cores;
  for (std::size_t k = cores.size() - 1; k > 0; --k) {
    const auto s = round_orthogonalize_step(cores[k]);
    cores[k] = s.core;
    cores[k - 1] = absorb_right_factor(cores[k - 1], s.l);
  }
  std::optional<RoundCarry> carry;
  for (std::size_t k = 0; k < cores.size(); ++k) {
    const auto s = round_compress_step(cores[k], carry ? &*carry : nullptr, k, cores.size(), 0.05, o);
    cores[k] = s.core;
    carry = s.carry;
  }
  ASSERT_EQ(cores.size(), ref.rep.cores.size());
  for (std::size_t k = 0; k < cores.size(); ++k) EXPECT_EQ(cores[k], ref.rep.cores[k]);
}
