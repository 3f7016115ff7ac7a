#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mpv/domain.hpp"
#include "mpv/embedding.hpp"

namespace mpv {

inline constexpr double kSignificanceLevel = 0.05;
inline constexpr std::size_t kExactWilcoxonMaxN = 20;

struct ConfusionCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct F1Result {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Zero denominators give 0. Throws AllZeroCounts when tp = fp = fn = 0.
F1Result f1(const ConfusionCounts& c);

/// 1 - cosine. Throws DimensionMismatch.
double sds(const EmbeddingVector& model, const EmbeddingVector& gold);

struct JudgmentTally {
  long long unsupported = 0;
  long long partial = 0;
  long long total = 0;
};

enum class HrMode { Binary, HalfWeighted };

/// Binary: unsupported / total. HalfWeighted: (unsupported + 0.5 partial) /
/// total. Throws EmptyTally for total < 1, InvalidArgument for inconsistent
/// tallies.
double hallucination_rate(const JudgmentTally& tally, HrMode mode);

/// Text embedded to represent a whole theme set: every theme and subtheme
/// description, whitespace-collapsed, sorted, one per line.
std::string theme_set_reduction(const ThemeSet& set);

/// Mean pairwise cosine over all unordered run pairs. Throws TooFewRuns.
double tcs(const std::vector<EmbeddingVector>& runs);
double tcs(const std::vector<ThemeSet>& runs, const EmbedFn& embed);

struct PairedSample {
  std::vector<double> x;
  std::vector<double> y;
};

/// Plain Pearson r. Throws LengthMismatch, TooFewItems (n < 2), ZeroVariance.
double pearson(const PairedSample& s);

/// Pearson r after dividing each side by its own total.
double freq_correlation(const PairedSample& s);

/// missed / total_gold. Throws EmptyGold.
double kor(long long missed, long long total_gold);
/// invented / total_model. Throws EmptyModel.
double khr(long long invented, long long total_model);

struct ClusterLabeling {
  std::vector<std::string> items;
  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
};

/// Adjusted Rand index from the contingency table. When the adjustment
/// denominator vanishes the result is 1 for identical partitions and 0
/// otherwise. Throws LengthMismatch, TooFewItems (n < 2).
double ari(const ClusterLabeling& c);

/// Throws LengthMismatch, TooFewItems (empty). Chance agreement of 1 gives 1.
double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
double percent_agreement(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct WilcoxonResult {
  double w = 0.0;  // min(W+, W-)
  double w_plus = 0.0;
  double w_minus = 0.0;
  double p_two_sided = 1.0;
  std::size_t n = 0;  // non-zero differences
  bool exact = true;

  bool significant() const { return p_two_sided < kSignificanceLevel; }
};

/// Differences are x - y. Exact null distribution for n <= 20, normal
/// approximation with tie and continuity correction above. Throws
/// LengthMismatch, TooFewItems (empty), AllZeroDifferences.
WilcoxonResult wilcoxon_signed_rank(const PairedSample& s);

/// Mean difference over the pooled standard deviation (n - 1 denominators).
/// Throws TooFewItems (either side < 2), ZeroPooledSd.
double cohens_d(const std::vector<double>& a, const std::vector<double>& b);

double mean(const std::vector<double>& v);

}  // namespace mpv
