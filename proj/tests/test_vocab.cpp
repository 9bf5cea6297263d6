#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>

using namespace bsattack;
using bsattack::testing::random_tensor;

namespace {

std::shared_ptr<const Tensor<double>> shared(Tensor<double> t) {
  return std::make_shared<const Tensor<double>>(std::move(t));
}

// Independent oracle: cosine via plain loops, strict > so the first maximum wins.
TokenId scan(const Tensor<double>& m, std::span<const double> q, const std::unordered_set<TokenId>& skip) {
  TokenId best = 0;
  double best_cos = -2.0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    if (r == Vocabulary::kUnk || r == Vocabulary::kPad || skip.contains(static_cast<TokenId>(r))) continue;
    double dot = 0, nr = 0, nq = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      dot += m(r, c) * q[c];
      nr += m(r, c) * m(r, c);
      nq += q[c] * q[c];
    }
    const double cos = dot / (std::sqrt(nr) * std::sqrt(nq));
    if (cos > best_cos) {
      best_cos = cos;
      best = static_cast<TokenId>(r);
    }
  }
  return best;
}

}  // namespace

TEST(SplitWords, LowercasesAndSeparatesPunctuation) {
  EXPECT_EQ(split_words("The cat, SAT!"), (std::vector<std::string>{"the", "cat", ",", "sat", "!"}));
  EXPECT_TRUE(split_words("  \t\n").empty());
}

TEST(BuildVocab, FrequencyThenLexicographic) {
  const std::vector<std::string> corpus = {"a b", "a c"};
  const Vocabulary v = build_vocab(corpus, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<unk>", "<pad>", "a", "b", "c"}));
  EXPECT_EQ(v.id("a"), 2u);
}

TEST(BuildVocab, MinCountDropsRareWords) {
  const std::vector<std::string> corpus = {"a b", "a c"};
  const Vocabulary v = build_vocab(corpus, 2);
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.id("b"), Vocabulary::kUnk);
  EXPECT_EQ(v.id("c"), Vocabulary::kUnk);
}

TEST(BuildVocab, DeterministicAndRejectsEmpty) {
  const std::vector<std::string> corpus = {"x y z y", "z z w"};
  EXPECT_EQ(build_vocab(corpus, 1), build_vocab(corpus, 1));
  EXPECT_EQ(build_vocab(corpus, 1).hash(), build_vocab(corpus, 1).hash());
  EXPECT_THROW(build_vocab(std::vector<std::string>{}, 1), InvalidArgument);
}

TEST(Vocabulary, SpecialsAndBijection) {
  const Vocabulary v({"the", "cat"});
  EXPECT_TRUE(Vocabulary::is_special(Vocabulary::kUnk));
  EXPECT_TRUE(Vocabulary::is_special(Vocabulary::kPad));
  EXPECT_NE(Vocabulary::kUnk, Vocabulary::kPad);
  for (TokenId i = 0; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(i)), i);
  EXPECT_THROW(Vocabulary({"a", "a"}), InvalidArgument);
}

TEST(Vocabulary, SaveLoadRoundTrip) {
  const auto path = (std::filesystem::temp_directory_path() / "bsattack_vocab_test.txt").string();
  const Vocabulary v({"the", "cat", "sat"});
  v.save(path);
  const Vocabulary back = Vocabulary::load(path);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.hash(), v.hash());
  std::remove(path.c_str());
}

TEST(Tokenize, Examples) {
  const Vocabulary v({"the", "cat", "sat"});
  EXPECT_TRUE(tokenize("", v).empty());
  EXPECT_EQ(tokenize("The cat sat", v).ids, (std::vector<TokenId>{v.id("the"), v.id("cat"), v.id("sat")}));
  EXPECT_EQ(tokenize("the zyxqw sat", v).ids, (std::vector<TokenId>{v.id("the"), Vocabulary::kUnk, v.id("sat")}));
  EXPECT_EQ(detokenize(tokenize("  The   CAT sat ", v), v), "the cat sat");
}

TEST(EmbeddingTable, RejectsZeroCandidateRow) {
  Tensor<double> m(Shape{3, 2}, 1.0);
  m(2, 0) = m(2, 1) = 0.0;
  EXPECT_THROW(EmbeddingTable<double>(shared(m)), InvalidArgument);
  // Special rows may be zero.
  m(2, 0) = 1.0;
  m(0, 0) = m(0, 1) = 0.0;
  EXPECT_NO_THROW(EmbeddingTable<double>(shared(m)));
}

TEST(EmbeddingTable, CachedNormsMatch) {
  std::mt19937_64 rng(1);
  const EmbeddingTable<double> table(shared(random_tensor({20, 6}, rng)));
  for (TokenId r = 0; r < table.size(); ++r) {
    double ss = 0;
    for (double x : table.row(r)) ss += x * x;
    EXPECT_NEAR(table.row_norm(r), std::sqrt(ss), 1e-6);
  }
}

TEST(EmbedSequence, RowsAreTableRows) {
  const EmbeddingTable<double> table(shared(Tensor<double>::matrix(4, 2, {0, 0, 0, 0, 1, 2, 3, 4})));
  const auto one = embed_sequence(bsattack::testing::seq({3}), table);
  EXPECT_EQ(one, Tensor<double>::matrix(1, 2, {3, 4}));
  const auto two = embed_sequence(bsattack::testing::seq({2, 2}), table);
  EXPECT_EQ(two, Tensor<double>::matrix(2, 2, {1, 2, 1, 2}));
  EXPECT_THROW(embed_sequence(bsattack::testing::seq({9}), table), InvalidArgument);
}

TEST(ProjectNearest, SelfAndScaleInvariance) {
  std::mt19937_64 rng(4);
  const EmbeddingTable<double> table(shared(random_tensor({50, 8}, rng)));
  for (TokenId t = 2; t < table.size(); ++t) {
    std::vector<double> q(table.row(t).begin(), table.row(t).end());
    EXPECT_EQ(table.project_nearest(q), t);
    for (double& x : q) x *= 2.0;
    EXPECT_EQ(table.project_nearest(q), t);
  }
  EXPECT_TRUE(table.self_projection_violations().empty());
}

TEST(ProjectNearest, MatchesScanOnRandomQueries) {
  std::mt19937_64 rng(9);
  const auto m = random_tensor({100, 8}, rng);
  const EmbeddingTable<double> table(shared(m));
  for (int i = 0; i < 500; ++i) {
    const auto q = random_tensor({8}, rng);
    ASSERT_EQ(table.project_nearest(q.data()), scan(m, q.data(), {}));
  }
}

TEST(ProjectNearest, TiesGoToLowestId) {
  // Rows 3 and 5 are identical; row 6 is row 4 doubled.
  Tensor<double> m = Tensor<double>::matrix(7, 2, {1, 1, 1, 1, 0, 1, 1, 0, 1, 1, 1, 0, 2, 2});
  const EmbeddingTable<double> table(shared(m));
  EXPECT_EQ(table.project_nearest(std::vector<double>{3.0, 0.0}), 3u);
  EXPECT_EQ(table.project_nearest(std::vector<double>{1.0, 1.0}), 4u);
  EXPECT_EQ(table.project_nearest(std::vector<double>{1.0, 1.0}, {4}), 6u);
  EXPECT_EQ(table.self_projection_violations(), (std::vector<TokenId>{5, 6}));
}

TEST(ProjectNearest, NeverReturnsSpecials) {
  // Specials sit exactly on the query direction but are excluded.
  const EmbeddingTable<double> table(shared(Tensor<double>::matrix(3, 2, {1, 0, 1, 0, 0, 1})));
  EXPECT_EQ(table.project_nearest(std::vector<double>{1.0, 0.0}), 2u);
}

TEST(ProjectNearest, Errors) {
  const EmbeddingTable<double> table(shared(Tensor<double>::matrix(3, 2, {1, 0, 1, 0, 0, 1})));
  EXPECT_THROW(table.project_nearest(std::vector<double>{0.0, 0.0}), InvalidArgument);
  EXPECT_THROW(table.project_nearest(std::vector<double>{1.0, 0.0}, {2}), InvalidArgument);
  EXPECT_THROW(table.project_nearest(std::vector<double>{1.0}), ShapeError);
}

TEST(ProjectRows, RoundTripRecoversSequence) {
  std::mt19937_64 rng(12);
  const EmbeddingTable<double> table(shared(random_tensor({30, 8}, rng)));
  const TokenSequence s = bsattack::testing::seq({5, 9, 9, 29, 2});
  EXPECT_EQ(project_rows(embed_sequence(s, table), table), s);
}
