#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace bsattack;
using bsattack::testing::random_tensor;

namespace {

// Reduce any output to a scalar through a fixed random projection so every
// output coordinate reaches the gradient with a distinct weight.
Var project(Tape<double>& t, Var out, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Var w = t.constant(random_tensor(t.value(out).shape(), rng));
  return t.sum(t.mul(out, w));
}

}  // namespace

TEST(Tensor, ConstructionAndAccess) {
  Tensor<float> t(Shape{2, 3}, 1.5f);
  EXPECT_EQ(t.size(), 6u);
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  t(1, 2) = 4.0f;
  EXPECT_EQ(t[5], 4.0f);
  EXPECT_EQ(t.row(1)[2], 4.0f);
  EXPECT_THROW(Tensor<float>(Shape{2, 2}, std::vector<float>{1, 2, 3}), ShapeError);
  EXPECT_EQ(Tensor<double>::scalar(3.0).rank(), 0u);
  EXPECT_EQ(Tensor<double>::scalar(3.0).item(), 3.0);
}

TEST(Tensor, FinitenessAndCast) {
  Tensor<double> t = Tensor<double>::matrix(1, 2, {1.0, 2.0});
  EXPECT_TRUE(t.all_finite());
  t[1] = std::numeric_limits<double>::quiet_NaN();
  EXPECT_FALSE(t.all_finite());
  const auto f = Tensor<double>::matrix(1, 2, {0.5, -2.0}).cast<float>();
  EXPECT_EQ(f[0], 0.5f);
  EXPECT_EQ(f[1], -2.0f);
}

TEST(Tape, DotProductValueAndGradient) {
  // f(w) = w.w at (1, 2): value 5, gradient (2, 4).
  Tape<double> t;
  const Var w = t.leaf(Tensor<double>::matrix(1, 2, {1.0, 2.0}));
  const Var f = t.sum(t.mul(w, w));
  t.backward(f);
  EXPECT_DOUBLE_EQ(t.value(f).item(), 5.0);
  EXPECT_DOUBLE_EQ(t.grad(w)[0], 2.0);
  EXPECT_DOUBLE_EQ(t.grad(w)[1], 4.0);
}

TEST(Tape, SymmetricCrossEntropy) {
  Tape<double> t;
  const Var z = t.leaf(Tensor<double>(Shape{2}, 0.0));
  const Var loss = t.cross_entropy(z, 0);
  t.backward(loss);
  EXPECT_NEAR(t.value(loss).item(), std::log(2.0), 1e-15);
  EXPECT_NEAR(t.grad(z)[0], -0.5, 1e-15);
  EXPECT_NEAR(t.grad(z)[1], 0.5, 1e-15);
}

TEST(Tape, ShapeErrorNamesOp) {
  Tape<double> t;
  const Var a = t.leaf(Tensor<double>(Shape{2, 3}, 1.0));
  const Var b = t.leaf(Tensor<double>(Shape{2, 3}, 1.0));
  try {
    t.matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos) << e.what();
  }
  try {
    t.add(a, t.leaf(Tensor<double>(Shape{3, 2}, 1.0)));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("add"), std::string::npos) << e.what();
  }
}

TEST(Tape, BackwardNeedsScalarRoot) {
  Tape<double> t;
  const Var a = t.leaf(Tensor<double>(Shape{2, 2}, 1.0));
  EXPECT_THROW(t.backward(a), ShapeError);
}

TEST(Tape, NonFiniteValuesRejected) {
  Tape<double> t;
  Tensor<double> bad(Shape{1, 1}, std::numeric_limits<double>::infinity());
  EXPECT_THROW(t.leaf(bad), NonFiniteError);
}

TEST(Tape, UnreachedLeafHasZeroGradient) {
  Tape<double> t;
  const Var a = t.leaf(Tensor<double>(Shape{2}, 3.0));
  const Var b = t.leaf(Tensor<double>(Shape{2}, 1.0));
  t.backward(t.sum(a));
  EXPECT_EQ(t.grad(b), Tensor<double>(Shape{2}, 0.0));
}

TEST(Tape, RowNormsZeroRowHasZeroSubgradient) {
  Tape<double> t;
  const Var a = t.leaf(Tensor<double>::matrix(2, 2, {0.0, 0.0, 3.0, 4.0}));
  const Var n = t.row_norms(a);
  t.backward(t.sum(n));
  EXPECT_DOUBLE_EQ(t.value(n)[0], 0.0);
  EXPECT_DOUBLE_EQ(t.value(n)[1], 5.0);
  const auto g = t.grad(a);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], 0.6);
  EXPECT_DOUBLE_EQ(g[3], 0.8);
}

TEST(Tape, GeluMatchesTanhForm) {
  for (double x : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    const double k = std::sqrt(2.0 / std::numbers::pi);
    const double ref = 0.5 * x * (1.0 + std::tanh(k * (x + 0.044715 * x * x * x)));
    EXPECT_NEAR(Tape<double>::gelu_value(x), ref, 1e-15);
  }
}

TEST(Tape, SoftmaxRowsSumToOne) {
  std::mt19937_64 rng(3);
  Tape<double> t;
  const Var s = t.softmax_rows(t.leaf(random_tensor({3, 5}, rng, 4.0)));
  for (std::size_t r = 0; r < 3; ++r) {
    double total = 0.0;
    for (double v : t.value(s).row(r)) total += v;
    EXPECT_NEAR(total, 1.0, 1e-14);
  }
}

TEST(Tape, GatherAccumulatesRepeatedIds) {
  Tape<double> t;
  const Var table = t.leaf(Tensor<double>::matrix(3, 2, {1, 2, 3, 4, 5, 6}));
  const std::vector<std::uint32_t> ids = {2, 0, 2};
  const Var g = t.gather_rows(table, ids);
  EXPECT_EQ(t.value(g), Tensor<double>::matrix(3, 2, {5, 6, 1, 2, 5, 6}));
  t.backward(t.sum(g));
  EXPECT_EQ(t.grad(table), Tensor<double>::matrix(3, 2, {1, 1, 0, 0, 2, 2}));
}

// Every primitive against central differences (64-bit, h = 1e-3).
struct PrimitiveCase {
  const char* name;
  std::vector<Shape> shapes;
  std::function<Var(Tape<double>&, std::span<const Var>)> fn;
};

class PrimitiveGradients : public ::testing::TestWithParam<PrimitiveCase> {};

TEST_P(PrimitiveGradients, MatchCentralDifferences) {
  const PrimitiveCase& c = GetParam();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    std::mt19937_64 rng(seed * 7 + 1);
    std::vector<Tensor<double>> inputs;
    for (const Shape& s : c.shapes) inputs.push_back(random_tensor(s, rng));
    const auto r = grad_check(c.fn, inputs, 64, 1e-3, seed);
    EXPECT_TRUE(r.passed(1e-5)) << c.name << " seed " << seed << " error " << r.max_rel_error;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllPrimitives, PrimitiveGradients,
    ::testing::Values(
        PrimitiveCase{"add", {{3, 4}, {3, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.add(v[0], v[1]), 1); }},
        PrimitiveCase{"sub", {{3, 4}, {3, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.sub(v[0], v[1]), 2); }},
        PrimitiveCase{"mul", {{3, 4}, {3, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.mul(v[0], v[1]), 3); }},
        PrimitiveCase{"scale", {{3, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.scale(v[0], -1.7), 4); }},
        PrimitiveCase{"add_row", {{3, 4}, {4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.add_row(v[0], v[1]), 5); }},
        PrimitiveCase{"matmul", {{3, 4}, {4, 2}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.matmul(v[0], v[1]), 6); }},
        PrimitiveCase{"matmul_nt", {{3, 4}, {5, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.matmul_nt(v[0], v[1]), 7); }},
        PrimitiveCase{"slice_rows", {{5, 3}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.slice_rows(v[0], 1, 3), 8); }},
        PrimitiveCase{"slice_cols", {{3, 5}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.slice_cols(v[0], 2, 2), 9); }},
        PrimitiveCase{"concat_cols", {{3, 2}, {3, 3}},
                      [](Tape<double>& t, std::span<const Var> v) {
                        const std::vector<Var> parts = {v[0], v[1], v[0]};
                        return project(t, t.concat_cols(parts), 10);
                      }},
        PrimitiveCase{"softmax_rows", {{3, 5}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.softmax_rows(v[0]), 11); }},
        PrimitiveCase{"layer_norm", {{3, 6}, {6}, {6}},
                      [](Tape<double>& t, std::span<const Var> v) {
                        return project(t, t.layer_norm_rows(v[0], v[1], v[2]), 12);
                      }},
        PrimitiveCase{"gelu", {{4, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.gelu(v[0]), 13); }},
        PrimitiveCase{"relu", {{4, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.relu(v[0]), 14); }},
        PrimitiveCase{"gather_rows", {{5, 3}},
                      [](Tape<double>& t, std::span<const Var> v) {
                        static const std::vector<std::uint32_t> ids = {4, 0, 4, 2};
                        return project(t, t.gather_rows(v[0], ids), 15);
                      }},
        PrimitiveCase{"cross_entropy", {{1, 4}},
                      [](Tape<double>& t, std::span<const Var> v) { return t.cross_entropy(v[0], 2); }},
        PrimitiveCase{"row_norms", {{4, 3}},
                      [](Tape<double>& t, std::span<const Var> v) { return project(t, t.row_norms(v[0]), 16); }},
        PrimitiveCase{"sum", {{2, 3}},
                      [](Tape<double>& t, std::span<const Var> v) { return t.sum(t.mul(v[0], v[0])); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Tape, ForwardIsBitDeterministic) {
  std::mt19937_64 rng(11);
  const auto x = random_tensor({4, 6}, rng);
  const auto w = random_tensor({6, 6}, rng);
  auto run = [&] {
    Tape<double> t;
    const Var h = t.gelu(t.matmul(t.constant(x), t.constant(w)));
    return t.value(t.softmax_rows(h));
  };
  EXPECT_EQ(run(), run());
}

TEST(Tape, GradientOfSumIsSumOfGradients) {
  std::mt19937_64 rng(5);
  const std::vector<Tensor<double>> in = {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)};
  auto f = [](Tape<double>& t, std::span<const Var> v) { return t.sum(t.gelu(t.matmul(v[0], v[1]))); };
  auto g = [](Tape<double>& t, std::span<const Var> v) { return t.sum(t.row_norms(t.matmul(v[0], v[1]))); };
  auto fg = [&](Tape<double>& t, std::span<const Var> v) { return t.add(f(t, v), g(t, v)); };
  const auto ef = evaluate_with_gradients<double>(f, std::span<const Tensor<double>>(in));
  const auto eg = evaluate_with_gradients<double>(g, std::span<const Tensor<double>>(in));
  const auto efg = evaluate_with_gradients<double>(fg, std::span<const Tensor<double>>(in));
  for (std::size_t i = 0; i < in.size(); ++i)
    for (std::size_t j = 0; j < in[i].size(); ++j)
      EXPECT_NEAR(efg.gradients[i][j], ef.gradients[i][j] + eg.gradients[i][j], 1e-10);
}
