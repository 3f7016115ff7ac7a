#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "mpv/embedding.hpp"
#include "mpv/error.hpp"
#include "mpv/metrics.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace mpv;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  throw std::logic_error("expected an mpv::Error");
}

std::vector<std::string> repeat(std::vector<std::pair<std::string, int>> runs) {
  std::vector<std::string> out;
  for (const auto& [label, n] : runs) out.insert(out.end(), n, label);
  return out;
}

}  // namespace

TEST(F1, Examples) {
  const auto perfect = f1({5, 0, 0});
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.f1, 1.0);
  const auto zero = f1({0, 3, 2});
  EXPECT_EQ(zero.precision, 0.0);
  EXPECT_EQ(zero.recall, 0.0);
  EXPECT_EQ(zero.f1, 0.0);
  const auto mid = f1({2, 1, 1});
  EXPECT_NEAR(mid.precision, 0.6667, 1e-4);
  EXPECT_NEAR(mid.recall, 0.6667, 1e-4);
  EXPECT_NEAR(mid.f1, 0.6667, 1e-4);
  EXPECT_EQ(code_of([] { f1({0, 0, 0}); }), Errc::AllZeroCounts);
}

TEST(F1, SymmetricInFalsePositivesAndNegatives) {
  for (int tp = 0; tp < 6; ++tp)
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        if (tp + a + b > 0) EXPECT_DOUBLE_EQ(f1({tp, a, b}).f1, f1({tp, b, a}).f1);
}

TEST(Sds, Examples) {
  const EmbeddingVector x{{1, 0}};
  EXPECT_EQ(sds(x, x), 0.0);
  EXPECT_NEAR(sds(x, {{0, 1}}), 1.0, 1e-15);
  EXPECT_NEAR(sds(x, {{std::sqrt(2.0) / 2, std::sqrt(2.0) / 2}}), 0.29289, 1e-5);
  EXPECT_EQ(code_of([&] { sds(x, {{1, 0, 0}}); }), Errc::DimensionMismatch);
}

TEST(HallucinationRate, Examples) {
  for (auto mode : {HrMode::Binary, HrMode::HalfWeighted}) {
    EXPECT_EQ(hallucination_rate({0, 0, 10}, mode), 0.0);
    EXPECT_EQ(hallucination_rate({4, 0, 4}, mode), 1.0);
  }
  EXPECT_EQ(hallucination_rate({1, 1, 4}, HrMode::HalfWeighted), 0.375);
  EXPECT_EQ(hallucination_rate({1, 1, 4}, HrMode::Binary), 0.25);
  EXPECT_EQ(code_of([] { hallucination_rate({0, 0, 0}, HrMode::Binary); }), Errc::EmptyTally);
  EXPECT_EQ(code_of([] { hallucination_rate({3, 2, 4}, HrMode::Binary); }), Errc::InvalidArgument);
}

// Half weighting sits between the two binary readings of a partial judgment.
TEST(HallucinationRate, HalfWeightedIsBracketed) {
  for (long long total = 1; total <= 8; ++total)
    for (long long u = 0; u <= total; ++u)
      for (long long p = 0; u + p <= total; ++p) {
        const double half = hallucination_rate({u, p, total}, HrMode::HalfWeighted);
        EXPECT_LE(hallucination_rate({u, 0, total}, HrMode::Binary), half);
        EXPECT_GE(hallucination_rate({u + p, 0, total}, HrMode::Binary), half);
      }
}

TEST(Tcs, Examples) {
  const EmbeddingVector e1{{1, 0}};
  const EmbeddingVector e2{{0, 1}};
  EXPECT_EQ(tcs({e1, e1, e1, e1, e1}), 1.0);
  EXPECT_EQ(tcs({e1, e2}), 0.0);
  // cos(a,b) = 1, cos(a,c) = cos(b,c) = 0.5
  const EmbeddingVector c{{0.5, std::sqrt(3.0) / 2}};
  EXPECT_NEAR(tcs({e1, e1, c}), 0.6667, 1e-4);
  EXPECT_EQ(code_of([&] { tcs(std::vector<EmbeddingVector>{e1}); }), Errc::TooFewRuns);
}

TEST(Tcs, RunOrderDoesNotMatter) {
  std::vector<EmbeddingVector> runs{{{1, 0, 0}}, {{0.6, 0.8, 0}}, {{0, 0.6, 0.8}}, {{0.3, 0.3, 0.9}}};
  const double base = tcs(runs);
  std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) { return a.values < b.values; });
  do {
    EXPECT_NEAR(tcs(runs), base, 1e-12);
  } while (std::next_permutation(runs.begin(), runs.end(),
                                 [](const auto& a, const auto& b) { return a.values < b.values; }));
}

TEST(Tcs, ThemeSetsReduceThroughTheEmbedder) {
  Embedder e(std::make_shared<DeterministicTestEmbedder>(256));
  const auto set = fixtures::themes({fixtures::theme("T1", "privacy settings", {fixtures::sub("ST1", "menus")})});
  EXPECT_EQ(theme_set_reduction(set), "menus\nprivacy settings");
  EXPECT_NEAR(tcs({set, set, set}, embed_fn(e)), 1.0, 1e-12);
}

TEST(Correlation, Examples) {
  EXPECT_NEAR(freq_correlation({{1, 2, 3, 7}, {2, 4, 6, 14}}), 1.0, 1e-12);
  EXPECT_NEAR(pearson({{1, 2, 3}, {-1, -2, -3}}), -1.0, 1e-12);
  EXPECT_NEAR(freq_correlation({{1, 2, 3}, {2, 2, 4}}), 0.8660, 1e-4);
  EXPECT_EQ(code_of([] { freq_correlation({{2, 2, 2}, {1, 2, 3}}); }), Errc::ZeroVariance);
  EXPECT_EQ(code_of([] { pearson({{1}, {1}}); }), Errc::TooFewItems);
  EXPECT_EQ(code_of([] { pearson({{1, 2}, {1}}); }), Errc::LengthMismatch);
}

TEST(Correlation, AffineInvariance) {
  const std::vector<double> x{3, 1, 4, 1, 5, 9, 2, 6};
  const std::vector<double> y{2, 7, 1, 8, 2, 8, 1, 8};
  const double r = pearson({x, y});
  for (double a : {0.5, 2.0, 13.0})
    for (double c : {-4.0, 0.0, 3.5}) {
      std::vector<double> up, down;
      for (double v : y) up.push_back(a * v + c), down.push_back(-a * v + c);
      EXPECT_NEAR(pearson({x, up}), r, 1e-12);
      EXPECT_NEAR(pearson({x, down}), -r, 1e-12);
    }
}

TEST(KeywordRates, Examples) {
  EXPECT_EQ(kor(0, 10), 0.0);
  EXPECT_EQ(kor(10, 10), 1.0);
  EXPECT_EQ(kor(2, 10), 0.2);
  EXPECT_EQ(khr(3, 12), 0.25);
  EXPECT_EQ(code_of([] { kor(0, 0); }), Errc::EmptyGold);
  EXPECT_EQ(code_of([] { khr(0, 0); }), Errc::EmptyModel);
}

TEST(Ari, Examples) {
  const std::vector<std::string> items{"a", "b", "c", "d"};
  EXPECT_EQ(ari({items, {"0", "0", "1", "1"}, {"0", "0", "1", "1"}}), 1.0);
  EXPECT_EQ(ari({items, {"0", "0", "1", "1"}, {"0", "1", "0", "1"}}), -0.5);
  EXPECT_EQ(ari({items, {"0", "0", "1", "2"}, {"x", "x", "z", "y"}}), 1.0);
  EXPECT_EQ(code_of([] { ari({{"a"}, {"0"}, {"0"}}); }), Errc::TooFewItems);
  EXPECT_EQ(code_of([] { ari({{"a", "b"}, {"0", "0"}, {"0"}}); }), Errc::LengthMismatch);
}

TEST(Ari, DegeneratePartitions) {
  const std::vector<std::string> items{"a", "b", "c"};
  EXPECT_EQ(ari({items, {"0", "0", "0"}, {"1", "1", "1"}}), 1.0);
  EXPECT_EQ(ari({items, {"0", "1", "2"}, {"5", "6", "7"}}), 1.0);
  EXPECT_EQ(ari({items, {"0", "0", "0"}, {"0", "1", "2"}}), 0.0);
}

TEST(Ari, LabelPermutationInvariance) {
  const std::vector<std::string> items{"1", "2", "3", "4", "5", "6", "7"};
  const std::vector<std::string> a{"x", "y", "x", "z", "y", "z", "z"};
  const std::vector<std::string> b{"p", "p", "q", "q", "r", "r", "p"};
  const double base = ari({items, a, b});
  EXPECT_NEAR(base, oracle::ari(a, b), 1e-12);
  std::vector<std::string> renamed;
  for (const auto& l : b) renamed.push_back(l == "p" ? "r" : l == "r" ? "q" : "p");
  EXPECT_NEAR(ari({items, a, renamed}), base, 1e-12);
  EXPECT_NEAR(ari({items, renamed, a}), base, 1e-12);
}

TEST(Kappa, Examples) {
  EXPECT_EQ(cohens_kappa({"S", "U", "P"}, {"S", "U", "P"}), 1.0);
  const auto a = repeat({{"S", 20}, {"S", 5}, {"U", 10}, {"U", 15}});
  const auto b = repeat({{"S", 20}, {"U", 5}, {"S", 10}, {"U", 15}});
  EXPECT_NEAR(cohens_kappa(a, b), 0.4, 1e-12);
  EXPECT_NEAR(percent_agreement(a, b), 0.7, 1e-12);
  // p_o = p_e = 0.5
  EXPECT_EQ(cohens_kappa({"X", "X", "Y", "Y"}, {"X", "Y", "X", "Y"}), 0.0);
  EXPECT_EQ(cohens_kappa({"S", "S"}, {"S", "S"}), 1.0);
  EXPECT_EQ(code_of([] { cohens_kappa({"S"}, {"S", "U"}); }), Errc::LengthMismatch);
  EXPECT_EQ(code_of([] { cohens_kappa({}, {}); }), Errc::TooFewItems);
}

TEST(PercentAgreement, Examples) {
  EXPECT_EQ(percent_agreement({"a", "b"}, {"a", "b"}), 1.0);
  EXPECT_EQ(percent_agreement({"a", "b"}, {"b", "a"}), 0.0);
  auto a = repeat({{"S", 19}});
  auto b = a;
  b[3] = "U";
  b[11] = "P";
  EXPECT_NEAR(percent_agreement(a, b), 0.8947, 1e-4);
  EXPECT_EQ(code_of([] { percent_agreement({"a"}, {}); }), Errc::LengthMismatch);
}

TEST(Wilcoxon, SixPositiveDifferences) {
  const auto r = wilcoxon_signed_rank({{2, 3, 4, 5, 6, 7}, {1, 1, 1, 1, 1, 1}});
  EXPECT_EQ(r.n, 6u);
  EXPECT_EQ(r.w, 0.0);
  EXPECT_EQ(r.w_plus, 21.0);
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.p_two_sided, 0.03125);
  EXPECT_TRUE(r.significant());
}

TEST(Wilcoxon, AntisymmetricDifferencesBalance) {
  const auto r = wilcoxon_signed_rank({{1, -1, 2, -2, 5, -5, 0}, {0, 0, 0, 0, 0, 0, 0}});
  EXPECT_EQ(r.n, 6u);
  EXPECT_EQ(r.w_plus, r.w_minus);
  EXPECT_EQ(r.p_two_sided, 1.0);
}

TEST(Wilcoxon, ErrorsAndLargeSamples) {
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({{1, 2}, {1, 2}}); }), Errc::AllZeroDifferences);
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({{}, {}}); }), Errc::TooFewItems);
  EXPECT_EQ(code_of([] { wilcoxon_signed_rank({{1}, {}}); }), Errc::LengthMismatch);
  PairedSample big;
  for (int i = 1; i <= 30; ++i) {
    big.x.push_back(i % 4 == 0 ? -i : i);
    big.y.push_back(0);
  }
  const auto r = wilcoxon_signed_rank(big);
  EXPECT_FALSE(r.exact);
  EXPECT_EQ(r.w_plus + r.w_minus, 30.0 * 31.0 / 2.0);
  EXPECT_GT(r.p_two_sided, 0.0);
  EXPECT_LT(r.p_two_sided, 0.05);
}

TEST(CohensD, Examples) {
  EXPECT_EQ(cohens_d({1, 3}, {0, 4}), 0.0);
  EXPECT_EQ(code_of([] { cohens_d({2, 2}, {2, 2}); }), Errc::ZeroPooledSd);
  EXPECT_EQ(code_of([] { cohens_d({2}, {2, 3}); }), Errc::TooFewItems);
  const double d = cohens_d({2, 4}, {1, 1, 1, 3});
  EXPECT_NEAR(d, oracle::cohens_d({2, 4}, {1, 1, 1, 3}), 1e-12);
  EXPECT_NEAR(d, 1.5 / std::sqrt(5.0 / 4.0), 1e-12);
}
