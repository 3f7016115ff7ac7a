#pragma once

// Randomized comparison of every metric against its oracle. Shared by the
// property tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mpv/embedding.hpp"
#include "mpv/error.hpp"
#include "mpv/metrics.hpp"
#include "oracles.hpp"

namespace checks {

struct MetricTally {
  int instances = 0;
  double max_error = 0.0;
  int mismatched_errors = 0;  // library threw where the oracle was defined, or vice versa
};

using OracleReport = std::map<std::string, MetricTally>;

namespace detail {

inline int uniform(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::vector<double> vec(std::mt19937& rng, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  do {
    for (auto& x : v) x = d(rng);
  } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  return v;
}

inline void record(MetricTally& t, double got, double want) {
  ++t.instances;
  t.max_error = std::max(t.max_error, std::fabs(got - want));
}

/// Runs `f`, expecting an mpv::Error with `code` when `defined` is false.
inline void expect_throw_unless(MetricTally& t, bool defined, mpv::Errc code,
                                const std::function<void()>& f) {
  try {
    f();
    if (!defined) ++t.mismatched_errors;
  } catch (const mpv::Error& e) {
    if (defined || e.code() != code) ++t.mismatched_errors;
  }
}

inline std::vector<std::string> labels(std::mt19937& rng, int n, int alphabet) {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back("L" + std::to_string(uniform(rng, 0, alphabet - 1)));
  return out;
}

}  // namespace detail

/// `instances` random cases per metric, each of size <= 12.
inline OracleReport run_oracle_checks(unsigned seed, int instances) {
  using namespace detail;
  std::mt19937 rng(seed);
  OracleReport r;

  for (int i = 0; i < instances; ++i) {
    int tp = uniform(rng, 0, 12), fp = uniform(rng, 0, 12), fn = uniform(rng, 0, 12);
    if (tp + fp + fn == 0) tp = 1;
    std::set<std::string> predicted, truth;
    for (int k = 0; k < tp; ++k) predicted.insert("m" + std::to_string(k)), truth.insert("m" + std::to_string(k));
    for (int k = 0; k < fp; ++k) predicted.insert("p" + std::to_string(k));
    for (int k = 0; k < fn; ++k) truth.insert("g" + std::to_string(k));
    record(r["f1"], mpv::f1({tp, fp, fn}).f1, oracle::f1_from_sets(predicted, truth));
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 1, 12);
    const auto a = vec(rng, n), b = vec(rng, n);
    record(r["sds"], mpv::sds({a}, {b}), oracle::drift(a, b));
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 1, 12);
    std::vector<int> statuses;
    mpv::JudgmentTally tally;
    tally.total = n;
    for (int k = 0; k < n; ++k) {
      statuses.push_back(uniform(rng, 0, 2));
      if (statuses.back() == 2) ++tally.unsupported;
      if (statuses.back() == 1) ++tally.partial;
    }
    record(r["hallucination_rate"], mpv::hallucination_rate(tally, mpv::HrMode::HalfWeighted),
           oracle::hallucination_rate(statuses, true));
    record(r["hallucination_rate"], mpv::hallucination_rate(tally, mpv::HrMode::Binary),
           oracle::hallucination_rate(statuses, false));
  }

  for (int i = 0; i < instances; ++i) {
    const int runs = uniform(rng, 2, 6), dim = uniform(rng, 2, 12);
    std::vector<std::vector<double>> raw;
    std::vector<mpv::EmbeddingVector> vs;
    for (int k = 0; k < runs; ++k) {
      raw.push_back(vec(rng, dim));
      vs.push_back({raw.back()});
    }
    record(r["tcs"], mpv::tcs(vs), oracle::consistency(raw));
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 2, 12);
    std::vector<double> x, y;
    for (int k = 0; k < n; ++k) {
      x.push_back(uniform(rng, 0, 6));
      y.push_back(uniform(rng, 0, 6));
    }
    if (std::accumulate(x.begin(), x.end(), 0.0) == 0) x[0] = 1;
    if (std::accumulate(y.begin(), y.end(), 0.0) == 0) y[0] = 1;
    auto& t = r["freq_correlation"];
    const bool defined = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) != x.end() &&
                         std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) != y.end();
    expect_throw_unless(t, defined, mpv::Errc::ZeroVariance, [&] {
      record(t, mpv::freq_correlation({x, y}), oracle::proportion_correlation(x, y));
    });
  }

  // kor and khr share one shape: a reference list and the subset that was found.
  for (const char* name : {"kor", "khr"}) {
    for (int i = 0; i < instances; ++i) {
      const int n = uniform(rng, 1, 12);
      std::vector<std::string> reference;
      std::set<std::string> found;
      long long missing = 0;
      for (int k = 0; k < n; ++k) {
        reference.push_back("k" + std::to_string(k));
        if (uniform(rng, 0, 1)) found.insert(reference.back());
        else ++missing;
      }
      const double got = std::string(name) == "kor" ? mpv::kor(missing, n) : mpv::khr(missing, n);
      record(r[name], got, oracle::omission_rate(reference, found));
    }
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 2, 12);
    mpv::ClusterLabeling c;
    for (int k = 0; k < n; ++k) c.items.push_back("q" + std::to_string(k));
    c.labels_a = labels(rng, n, uniform(rng, 1, 4));
    c.labels_b = labels(rng, n, uniform(rng, 1, 4));
    record(r["ari"], mpv::ari(c), oracle::ari(c.labels_a, c.labels_b));
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 1, 12);
    const auto a = labels(rng, n, uniform(rng, 1, 3));
    const auto b = labels(rng, n, uniform(rng, 1, 3));
    record(r["cohens_kappa"], mpv::cohens_kappa(a, b), oracle::kappa(a, b));
    record(r["percent_agreement"], mpv::percent_agreement(a, b), oracle::percent_agreement(a, b));
  }

  for (int i = 0; i < instances; ++i) {
    const int n = uniform(rng, 1, 10);
    std::vector<double> x, y;
    for (int k = 0; k < n; ++k) {
      x.push_back(uniform(rng, 0, 6));
      y.push_back(uniform(rng, 0, 6));
    }
    const bool defined = x != y;
    auto& t = r["wilcoxon"];
    expect_throw_unless(t, defined, mpv::Errc::AllZeroDifferences, [&] {
      const auto got = mpv::wilcoxon_signed_rank({x, y});
      const auto want = oracle::wilcoxon_enumerate(x, y);
      record(t, got.w_plus, want.w_plus);
      record(t, got.w_minus, want.w_minus);
      record(t, got.p_two_sided, want.p);
    });
  }

  for (int i = 0; i < instances; ++i) {
    std::vector<double> a, b;
    for (int k = uniform(rng, 2, 6); k > 0; --k) a.push_back(uniform(rng, 0, 9));
    for (int k = uniform(rng, 2, 6); k > 0; --k) b.push_back(uniform(rng, 0, 9));
    const bool defined = std::adjacent_find(a.begin(), a.end(), std::not_equal_to<>()) != a.end() ||
                         std::adjacent_find(b.begin(), b.end(), std::not_equal_to<>()) != b.end();
    auto& t = r["cohens_d"];
    expect_throw_unless(t, defined, mpv::Errc::ZeroPooledSd,
                        [&] { record(t, mpv::cohens_d(a, b), oracle::cohens_d(a, b)); });
  }

  return r;
}

}  // namespace checks
