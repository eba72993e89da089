#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "tnvault/errors.hpp"
#include "tnvault/random.hpp"
#include "tnvault/tensor.hpp"
#include "tnvault/tensor_io.hpp"

using namespace tnvault;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("tnvault_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST(DenseTensor, ColumnMajorLayout) {
  DenseTensor t({2, 3});
  t({1, 0}) = 5.0;
  t({0, 2}) = 7.0;
  EXPECT_EQ(t[1], 5.0);
  EXPECT_EQ(t[4], 7.0);
  EXPECT_EQ(t.linear_index(std::vector<std::size_t>{1, 2}), 5u);
}

TEST(DenseTensor, RejectsZeroModesAndBadData) {
  EXPECT_THROW(DenseTensor(Shape{2, 0}), Error);
  EXPECT_THROW(DenseTensor(Shape{2, 2}, std::vector<double>(3)), Error);
  DenseTensor t({2, 2});
  try {
    t({2, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfRange);
  }
}

TEST(DenseTensor, PermuteMatchesIndexOracle) {
  std::mt19937_64 g(1);
  const DenseTensor t = oracle::random_tensor({2, 3, 4}, g);
  const std::vector<std::size_t> perm{2, 0, 1};
  const DenseTensor p = permute_axes(t, perm);
  EXPECT_EQ(p.shape(), (Shape{4, 2, 3}));
  oracle::for_each_index(t.shape(), [&](const oracle::Index& i) {
    EXPECT_EQ(oracle::get(p, {i[2], i[0], i[1]}), oracle::get(t, i));
  });
  EXPECT_EQ(permute_axes(p, inverse_permutation(perm)), t);
  EXPECT_THROW(permute_axes(t, std::vector<std::size_t>{0, 0, 1}), Error);
}

TEST(DenseTensor, MatricizeRoundTrip) {
  std::mt19937_64 g(2);
  const DenseTensor t = oracle::random_tensor({3, 4, 5}, g);
  for (std::size_t mode = 0; mode < 3; ++mode) {
    const Matrix m = matricize(t, mode);
    EXPECT_EQ(static_cast<std::size_t>(m.rows()), t.dim(mode));
    EXPECT_EQ(dematricize(m, mode, t.shape()), t);
  }
  const Matrix m1 = matricize(t, 1);
  // Column index runs over the remaining modes in column-major order.
  EXPECT_EQ(m1(2, 1 + 3 * 4), t({1, 2, 4}));
}

TEST(DenseTensor, ModeProductMatchesLoops) {
  std::mt19937_64 g(3);
  const DenseTensor t = oracle::random_tensor({3, 4, 2}, g);
  const Matrix u = oracle::random_matrix(5, 4, g);
  const DenseTensor p = mode_product(t, u, 1);
  oracle::for_each_index(p.shape(), [&](const oracle::Index& i) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) s += u(i[1], j) * oracle::get(t, {i[0], j, i[2]});
    EXPECT_NEAR(oracle::get(p, i), s, 1e-14);
  });
}

TEST(DenseTensor, StructuralOpsMatchOracles) {
  std::mt19937_64 g(4);
  const DenseTensor a = oracle::random_tensor({2, 3, 2}, g);
  const DenseTensor b = oracle::random_tensor({3, 1, 2}, g);
  EXPECT_EQ(direct_sum(a, b), oracle::direct_sum(a, b));
  EXPECT_EQ(kronecker(a, b), oracle::kronecker(a, b));
  const DenseTensor c = oracle::random_tensor({2, 3, 2}, g);
  EXPECT_EQ(hadamard(a, c), oracle::hadamard(a, c));
  EXPECT_THROW(hadamard(a, b), Error);
}

TEST(DenseTensor, SuperdiagonalAndLeadingBlock) {
  const DenseTensor s = superdiagonal(3, 4);
  EXPECT_EQ(s({2, 2, 2}), 1.0);
  EXPECT_EQ(s({1, 2, 2}), 0.0);
  EXPECT_DOUBLE_EQ(s.norm(), 2.0);
  EXPECT_EQ(leading_block(s, {2, 2, 2}), superdiagonal(3, 2));
}

TEST(TensorIo, DtRoundTripIsByteExact) {
  std::mt19937_64 g(5);
  const DenseTensor t = oracle::random_tensor({3, 1, 4}, g);
  const auto bytes = encode_dt(t);
  ASSERT_EQ(bytes.size(), 4u + 2 + 3 * 8 + t.size() * 8);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "DTEN");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 3);
  EXPECT_EQ(bytes[6], 3);  // first size, little endian
  EXPECT_EQ(decode_dt(bytes), t);
  EXPECT_EQ(encode_dt(decode_dt(bytes)), bytes);
}

TEST(TensorIo, DtRejectsMalformedInput) {
  const DenseTensor t({2, 2});
  auto bytes = encode_dt(t);
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(decode_dt(bad), Error);
  bad = bytes;
  bad.pop_back();
  EXPECT_THROW(decode_dt(bad), Error);
  bad = bytes;
  bad[4] = 9;
  EXPECT_THROW(decode_dt(bad), Error);
}

TEST(TensorIo, CsvAndPnm) {
  const fs::path dir = temp_dir("io");
  std::ofstream(dir / "m.csv") << "1,2,3\n4,5,6\n\n";
  const DenseTensor m = read_csv(dir / "m.csv");
  EXPECT_EQ(m.shape(), (Shape{2, 3}));
  EXPECT_EQ(m({1, 2}), 6.0);
  write_csv(dir / "out.csv", m);
  EXPECT_EQ(read_csv(dir / "out.csv"), m);

  std::ofstream(dir / "img.ppm") << "P3\n2 1\n255\n1 2 3 4 5 6\n";
  const DenseTensor img = read_tensor(dir / "img.ppm");
  EXPECT_EQ(img.shape(), (Shape{1, 2, 3}));
  EXPECT_EQ(img({0, 1, 2}), 6.0);
  EXPECT_EQ(img({0, 0, 1}), 2.0);
  std::ofstream(dir / "g.pgm") << "P2\n2 2\n255\n0 1\n2 3\n";
  const DenseTensor gray = read_tensor(dir / "g.pgm");
  EXPECT_EQ(gray.shape(), (Shape{2, 2}));
  EXPECT_EQ(gray({1, 0}), 2.0);
  EXPECT_TRUE(is_image_path(dir / "img.ppm"));
  EXPECT_THROW(read_tensor(dir / "missing.dt"), Error);
}

TEST(Random, DerivedSeedsAreStableAndDistinct) {
  EXPECT_EQ(derive_seed(7, streams::kPerturbation, 1), derive_seed(7, streams::kPerturbation, 1));
  EXPECT_NE(derive_seed(7, streams::kPerturbation, 1), derive_seed(7, streams::kPerturbation, 2));
  EXPECT_NE(derive_seed(7, streams::kPerturbation, 1), derive_seed(7, streams::kNoise, 1));
  Rng a(3), b(3);
  for (int i = 0; i < 10; ++i) {
    const double x = a.uniform(0.05, 1.0);
    EXPECT_EQ(x, b.uniform(0.05, 1.0));
    EXPECT_GE(x, 0.05);
    EXPECT_LE(x, 1.0);
  }
}
