#include "mpv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

#include "mpv/error.hpp"

namespace mpv {

F1Result f1(const ConfusionCounts& c) {
  if (c.tp < 0 || c.fp < 0 || c.fn < 0)
    throw Error(Errc::InvalidArgument, "confusion counts must be non-negative");
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) throw Error(Errc::AllZeroCounts, "tp = fp = fn = 0");
  F1Result r;
  r.precision = c.tp + c.fp == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fp);
  r.recall = c.tp + c.fn == 0 ? 0.0 : static_cast<double>(c.tp) / (c.tp + c.fn);
  const double s = r.precision + r.recall;
  r.f1 = s == 0.0 ? 0.0 : 2.0 * r.precision * r.recall / s;
  return r;
}

double sds(const EmbeddingVector& model, const EmbeddingVector& gold) {
  return 1.0 - cosine(model, gold);
}

double hallucination_rate(const JudgmentTally& t, HrMode mode) {
  if (t.total < 1) throw Error(Errc::EmptyTally, "no statements judged");
  if (t.unsupported < 0 || t.partial < 0 || t.unsupported + t.partial > t.total)
    throw Error(Errc::InvalidArgument, "tally requires unsupported + partial <= total");
  const double weight = mode == HrMode::HalfWeighted ? 0.5 : 0.0;
  return (static_cast<double>(t.unsupported) + weight * static_cast<double>(t.partial)) /
         static_cast<double>(t.total);
}

std::string theme_set_reduction(const ThemeSet& set) {
  std::vector<std::string> parts;
  for (const auto& theme : set.themes) {
    parts.push_back(collapse_whitespace(theme.description));
    for (const auto& st : theme.subthemes) parts.push_back(collapse_whitespace(st.description));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (const auto& p : parts) {
    if (p.empty()) continue;
    if (!out.empty()) out += '\n';
    out += p;
  }
  return out;
}

double tcs(const std::vector<EmbeddingVector>& runs) {
  if (runs.size() < 2) throw Error(Errc::TooFewRuns, "consistency needs at least 2 runs");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < runs.size(); ++i)
    for (std::size_t j = i + 1; j < runs.size(); ++j, ++pairs) sum += cosine(runs[i], runs[j]);
  return sum / static_cast<double>(pairs);
}

double tcs(const std::vector<ThemeSet>& runs, const EmbedFn& embed) {
  if (runs.size() < 2) throw Error(Errc::TooFewRuns, "consistency needs at least 2 runs");
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(runs.size());
  for (const auto& r : runs) vectors.push_back(embed(theme_set_reduction(r)));
  return tcs(vectors);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) throw Error(Errc::TooFewItems, "mean of an empty list");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pearson(const PairedSample& s) {
  if (s.x.size() != s.y.size()) throw Error(Errc::LengthMismatch, "x and y differ in length");
  if (s.x.size() < 2) throw Error(Errc::TooFewItems, "correlation needs at least 2 pairs");
  const double mx = mean(s.x), my = mean(s.y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    const double dx = s.x[i] - mx, dy = s.y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(Errc::ZeroVariance, "a side is constant");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double freq_correlation(const PairedSample& s) {
  if (s.x.size() != s.y.size()) throw Error(Errc::LengthMismatch, "x and y differ in length");
  auto scaled = [](std::vector<double> v) {
    const double total = std::accumulate(v.begin(), v.end(), 0.0);
    if (total > 0.0)
      for (auto& e : v) e /= total;
    return v;
  };
  return pearson({scaled(s.x), scaled(s.y)});
}

double kor(long long missed, long long total_gold) {
  if (total_gold < 1) throw Error(Errc::EmptyGold, "no gold keywords");
  if (missed < 0 || missed > total_gold)
    throw Error(Errc::InvalidArgument, "missed must be within [0, total_gold]");
  return static_cast<double>(missed) / static_cast<double>(total_gold);
}

double khr(long long invented, long long total_model) {
  if (total_model < 1) throw Error(Errc::EmptyModel, "no model keywords");
  if (invented < 0 || invented > total_model)
    throw Error(Errc::InvalidArgument, "invented must be within [0, total_model]");
  return static_cast<double>(invented) / static_cast<double>(total_model);
}

namespace {

void check_lengths(std::size_t a, std::size_t b, std::size_t min_items) {
  if (a != b) throw Error(Errc::LengthMismatch, "label lists differ in length");
  if (a < min_items)
    throw Error(Errc::TooFewItems, "need at least " + std::to_string(min_items) + " items");
}

std::int64_t choose2(std::int64_t n) { return n * (n - 1) / 2; }

bool same_partition(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::map<std::string, std::string> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if ((!new1 && it1->second != b[i]) || (!new2 && it2->second != a[i])) return false;
  }
  return true;
}

}  // namespace

double ari(const ClusterLabeling& c) {
  check_lengths(c.labels_a.size(), c.labels_b.size(), 2);
  if (!c.items.empty() && c.items.size() != c.labels_a.size())
    throw Error(Errc::LengthMismatch, "items and labels differ in length");
  std::map<std::pair<std::string, std::string>, std::int64_t> cells;
  std::map<std::string, std::int64_t> rows, cols;
  for (std::size_t i = 0; i < c.labels_a.size(); ++i) {
    ++cells[{c.labels_a[i], c.labels_b[i]}];
    ++rows[c.labels_a[i]];
    ++cols[c.labels_b[i]];
  }
  std::int64_t index = 0, sa = 0, sb = 0;
  for (const auto& [k, n] : cells) index += choose2(n);
  for (const auto& [k, n] : rows) sa += choose2(n);
  for (const auto& [k, n] : cols) sb += choose2(n);
  const std::int64_t pairs = choose2(static_cast<std::int64_t>(c.labels_a.size()));
  // Both scaled by 2 * pairs to stay in integers.
  const std::int64_t num = 2 * (index * pairs - sa * sb);
  const std::int64_t den = (sa + sb) * pairs - 2 * sa * sb;
  if (den == 0) return same_partition(c.labels_a, c.labels_b) ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

double cohens_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  check_lengths(a.size(), b.size(), 1);
  std::map<std::string, std::int64_t> ca, cb;
  std::int64_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    if (a[i] == b[i]) ++agree;
  }
  const auto n = static_cast<std::int64_t>(a.size());
  std::int64_t chance = 0;  // p_e * n^2
  for (const auto& [k, na] : ca) {
    auto it = cb.find(k);
    if (it != cb.end()) chance += na * it->second;
  }
  if (chance == n * n) return 1.0;
  const double po = static_cast<double>(agree) / static_cast<double>(n);
  const double pe = static_cast<double>(chance) / static_cast<double>(n * n);
  return (po - pe) / (1.0 - pe);
}

double percent_agreement(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  check_lengths(a.size(), b.size(), 1);
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) agree += a[i] == b[i] ? 1 : 0;
  return static_cast<double>(agree) / static_cast<double>(a.size());
}

WilcoxonResult wilcoxon_signed_rank(const PairedSample& s) {
  check_lengths(s.x.size(), s.y.size(), 1);
  std::vector<double> d;
  for (std::size_t i = 0; i < s.x.size(); ++i)
    if (const double diff = s.x[i] - s.y[i]; diff != 0.0) d.push_back(diff);
  if (d.empty()) throw Error(Errc::AllZeroDifferences, "every paired difference is zero");

  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t i, std::size_t j) { return std::abs(d[i]) < std::abs(d[j]); });

  // Doubled average ranks keep tied ranks integral.
  std::vector<std::int64_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::abs(d[order[j + 1]]) == std::abs(d[order[i]])) ++j;
    const auto shared = static_cast<std::int64_t>(i + 1 + j + 1);  // 2 * average rank
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = shared;
    const double t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }

  WilcoxonResult r;
  r.n = n;
  std::int64_t plus2 = 0, total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0) plus2 += rank2[i];
  }
  r.w_plus = static_cast<double>(plus2) / 2.0;
  r.w_minus = static_cast<double>(total2 - plus2) / 2.0;
  r.w = std::min(r.w_plus, r.w_minus);
  const std::int64_t w2 = std::min(plus2, total2 - plus2);

  if (n <= kExactWilcoxonMaxN) {
    r.exact = true;
    // ways[s]: sign assignments whose doubled positive-rank sum is s.
    std::vector<double> ways(static_cast<std::size_t>(total2) + 1, 0.0);
    ways[0] = 1.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::int64_t v = total2; v >= rank2[i]; --v) ways[v] += ways[v - rank2[i]];
    double at_most = 0.0;
    for (std::int64_t v = 0; v <= w2; ++v) at_most += ways[v];
    r.p_two_sided = std::min(1.0, 2.0 * at_most / std::ldexp(1.0, static_cast<int>(n)));
  } else {
    r.exact = false;
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    const double z = std::max(0.0, std::abs(r.w - mu) - 0.5) / std::sqrt(var);
    r.p_two_sided = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  }
  return r;
}

double cohens_d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2)
    throw Error(Errc::TooFewItems, "each group needs at least 2 values");
  const double ma = mean(a), mb = mean(b);
  double ssa = 0.0, ssb = 0.0;
  for (double v : a) ssa += (v - ma) * (v - ma);
  for (double v : b) ssb += (v - mb) * (v - mb);
  const double pooled_var = (ssa + ssb) / static_cast<double>(a.size() + b.size() - 2);
  if (pooled_var == 0.0) throw Error(Errc::ZeroPooledSd, "both groups are constant");
  return (ma - mb) / std::sqrt(pooled_var);
}

}  // namespace mpv
