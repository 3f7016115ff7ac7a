// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "metric_checks.hpp"
#include "mpv/evaluation.hpp"
#include "mpv/metrics.hpp"
#include "mpv/pipeline.hpp"
#include "mpv/run.hpp"
#include "mpv/segmentation.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kMetricTolerance = 1e-9;
constexpr double kRateTolerance = 1e-12;
constexpr double kOracleBudgetSeconds = 60.0;
constexpr double kPipelineBudgetSeconds = 10.0;
constexpr int kMaxPasses = 3;

/// Collects failed checks for one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s.precision(17);
    s << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::fabs(got - want) <= tol, s.str());
  }
  void note(const std::string& n) { notes_.push_back(n); }
  const std::vector<std::string>& failures() const { return failures_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::vector<std::string> failures_;
  std::vector<std::string> notes_;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

mpv::RunOutcome run(const fixtures::Scenario& s, const std::string& id = "r1") {
  mpv::RunOptions options;
  options.run_id = id;
  return mpv::cmd_run(mpv::RunConfig::load(s.config), options);
}

json rows_for_phase(const json& evaluation, const std::string& phase) {
  json out = json::array();
  for (const auto& r : evaluation.at("rows"))
    if (r.at("phase") == phase) out.push_back(r);
  return out;
}

std::set<std::string> items_of(const mpv::ThemeSet& set) {
  std::set<std::string> out;
  for (const auto& t : set.themes) {
    out.insert(mpv::collapse_whitespace(t.description));
    for (const auto& st : t.subthemes)
      out.insert(mpv::collapse_whitespace(t.description) + "\x1f" + mpv::collapse_whitespace(st.description));
  }
  return out;
}

bool subset_of(const mpv::ThemeSet& a, const mpv::ThemeSet& b) {
  const auto ia = items_of(a), ib = items_of(b);
  return std::includes(ib.begin(), ib.end(), ia.begin(), ia.end());
}

void criterion1(Check& c) {
  const auto start = std::chrono::steady_clock::now();
  const auto report = checks::run_oracle_checks(20240917u, 120);
  const double elapsed = seconds_since(start);
  c.expect(report.size() == 12, "expected 12 metrics, got " + std::to_string(report.size()));
  int worst_instances = 1 << 30;
  double worst_error = 0;
  for (const auto& [name, t] : report) {
    c.expect(t.instances >= 100, name + ": only " + std::to_string(t.instances) + " instances");
    c.expect(t.max_error <= kMetricTolerance, name + ": max error " + std::to_string(t.max_error));
    c.expect(t.mismatched_errors == 0, name + ": error behaviour differs from oracle");
    worst_instances = std::min(worst_instances, t.instances);
    worst_error = std::max(worst_error, t.max_error);
  }
  c.expect(elapsed < kOracleBudgetSeconds, "runtime " + std::to_string(elapsed) + " s");
  std::ostringstream n;
  n << "12 metrics, >=" << worst_instances << " instances each, max |err| " << worst_error << ", " << elapsed << " s";
  c.note(n.str());
}

void criterion2(Check& c) {
  using mpv::HrMode;
  c.expect(mpv::hallucination_rate({1, 1, 4}, HrMode::HalfWeighted) == 0.375, "(1,1,4) != 0.375");
  for (long long n : {1LL, 4LL, 10LL, 37LL}) {
    c.expect(mpv::hallucination_rate({0, 0, n}, HrMode::HalfWeighted) == 0.0, "(0,0,n) != 0");
    c.expect(mpv::hallucination_rate({n, 0, n}, HrMode::HalfWeighted) == 1.0, "(n,0,n) != 1");
  }
}

void criterion3(Check& c) {
  const std::vector<std::string> a{"0", "0", "1", "1"}, b{"0", "1", "0", "1"};
  c.expect(mpv::ari({{"q1", "q2", "q3", "q4"}, a, b}) == -0.5, "library ARI != -0.5");
  c.expect(oracle::ari(a, b) == -0.5, "pair-counting oracle != -0.5");
}

void criterion4(Check& c) {
  const std::vector<double> x{3, 5, 2, 8, 4, 9}, y{1, 1, 1, 1, 1, 1};
  const auto r = mpv::wilcoxon_signed_rank({x, y});
  c.expect(r.exact, "exact path not used");
  c.expect(r.w == 0.0, "W != 0");
  c.expect(r.p_two_sided == 0.03125, "p != 0.03125");
  c.expect(oracle::wilcoxon_enumerate(x, y).p == 0.03125, "enumeration oracle p != 0.03125");
}

void criterion5(Check& c, const fs::path& root) {
  const auto start = std::chrono::steady_clock::now();
  const auto s = fixtures::hallucination_scenario(root / "c5");
  const auto out = run(s);
  const auto ev = mpv::evaluate_run(out.run_dir);
  const double elapsed = seconds_since(start);
  for (const auto& r : ev.at("rows")) {
    const auto tag = r.at("condition").get<std::string>() + "/" + r.at("phase").get<std::string>();
    c.near(r.at("hr").get<double>(), r.at("phase") == "before" ? 0.30 : 0.00, kRateTolerance, "HR " + tag);
  }
  for (const auto& tid : s.transcript_ids) {
    const auto& d = ev.at("per_transcript").at("model-a").at(tid).at("before").at("detail");
    c.expect(d.at("statements").size() == 10 && d.at("unsupported") == 3, tid + ": expected 3 of 10 unsupported");
    const auto a = mpv::read_artifacts(out.run_dir / "model-a" / "after" / tid);
    mpv::ThemeSet previous = a.analysis;
    for (int k = 0; k < a.theme_pass_count(); ++k) {
      c.expect(subset_of(a.theme_passes[k], previous), tid + ": pass " + std::to_string(k + 1) + " not a subset");
      previous = a.theme_passes[k];
    }
    for (std::size_t r = 0; r < a.repeat_passes.size(); ++r) {
      mpv::ThemeSet prev = a.analysis;
      for (const auto& p : a.repeat_passes[r]) {
        c.expect(subset_of(p, prev), tid + ": repeat " + std::to_string(r + 1) + " pass not a subset");
        prev = p;
      }
    }
  }
  c.expect(elapsed < kPipelineBudgetSeconds, "runtime " + std::to_string(elapsed) + " s");
  c.note("HR before 0.30, after 0.00 in " + std::to_string(elapsed) + " s");
}

void criterion6(Check& c, const fs::path& root) {
  const std::vector<std::pair<std::string, fixtures::Scenario (*)(const fs::path&)>> all{
      {"hallucination", fixtures::hallucination_scenario},
      {"never_converging", fixtures::never_converging_scenario},
      {"perfect", fixtures::perfect_scenario},
      {"paraphrase", fixtures::paraphrase_scenario}};
  for (const auto& [name, make] : all) {
    const auto s = make(root / ("c6-" + name));
    const auto out = run(s);
    for (const auto& tid : s.transcript_ids) {
      const auto a = mpv::read_artifacts(out.run_dir / "model-a" / "after" / tid);
      const auto tag = name + "/" + tid;
      c.expect(a.theme_pass_count() <= kMaxPasses, tag + ": theme passes " + std::to_string(a.theme_pass_count()));
      c.expect(a.freq_pass_count() <= kMaxPasses, tag + ": frequency passes " + std::to_string(a.freq_pass_count()));
      for (const auto& rp : a.repeat_passes)
        c.expect(static_cast<int>(rp.size()) <= kMaxPasses, tag + ": repeat exceeded the cap");
      const bool capped = a.flags.contains(mpv::flag::kThemeCapReached);
      const bool freq_capped = a.flags.contains(mpv::flag::kFrequencyCapReached);
      if (name == "never_converging") {
        c.expect(a.theme_pass_count() == 3 && capped, tag + ": theme loop did not stop at the cap");
        c.expect(a.freq_pass_count() == 3 && freq_capped, tag + ": frequency loop did not stop at the cap");
      } else if (name == "hallucination") {
        c.expect(a.theme_pass_count() == 2 && !capped, tag + ": theme loop did not converge at pass 2");
        c.expect(a.freq_pass_count() == 2 && !freq_capped, tag + ": frequency loop did not converge at pass 2");
        c.expect(mpv::canonicalize(a.theme_passes[0]) == mpv::canonicalize(a.theme_passes[1]),
                 tag + ": stop without canonical fixpoint");
        c.expect(mpv::canonicalize(a.freq_passes[0]) == mpv::canonicalize(a.freq_passes[1]),
                 tag + ": frequency stop without canonical fixpoint");
      } else {
        c.expect(!capped && !freq_capped, tag + ": converging fixture hit the cap");
      }
    }
  }
}

mpv::Transcript words(std::size_t n) {
  mpv::Transcript t{"t", "", mpv::Condition::Expert, {}};
  for (std::size_t i = 0; i < n; ++i) t.text += (i ? " w" : "w") + std::to_string(i);
  return t;
}

void criterion7(Check& c) {
  const auto ws = mpv::TokenizerConfig::whitespace();
  const auto segs = mpv::segment(words(4097), 4096, 512, ws);
  c.expect(segs.size() == 2, "4097 tokens gave " + std::to_string(segs.size()) + " segments");
  if (segs.size() == 2) c.expect(segs[1].token_start == 3584, "second segment starts at " + std::to_string(segs[1].token_start));

  std::mt19937 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 12000)(rng);
    const auto ss = mpv::segment(words(n), 4096, 512, ws);
    std::vector<char> covered(n, 0);
    for (std::size_t k = 0; k < ss.size(); ++k) {
      for (std::size_t i = ss[k].token_start; i < ss[k].token_end; ++i) covered[i] = 1;
      c.expect(ss[k].token_end - ss[k].token_start <= 4096, "segment longer than the window");
      if (k + 1 < ss.size())
        c.expect(ss[k].token_end - ss[k + 1].token_start == 512, "overlap != 512 at n=" + std::to_string(n));
    }
    c.expect(ss.front().token_start == 0 && ss.back().token_end == n, "ends not covered at n=" + std::to_string(n));
    c.expect(std::find(covered.begin(), covered.end(), 0) == covered.end(), "gap at n=" + std::to_string(n));
  }
}

void criterion8(Check& c, const fs::path& root) {
  const auto s = fixtures::paraphrase_scenario(root / "c8");
  const auto out = run(s);
  const auto result = mpv::sensitivity_run(out.run_dir, {0.70, 0.80, 0.90});
  c.expect(result.at("monotone").get<bool>(), "pair sets not nested: " + result.at("violations").dump());
  std::map<std::string, std::vector<double>> f1_by_cell;
  for (const auto& r : result.at("rows"))
    if (!r.at("f1").is_null())
      f1_by_cell[r.at("model").get<std::string>() + "/" + r.at("condition").get<std::string>() + "/" +
                 r.at("phase").get<std::string>()]
          .push_back(r.at("f1").get<double>());
  c.expect(!f1_by_cell.empty(), "no F1 values");
  for (const auto& [cell, f] : f1_by_cell) {
    c.expect(f.size() == 3, cell + ": missing thresholds");
    for (std::size_t i = 1; i < f.size(); ++i) c.expect(f[i] <= f[i - 1], cell + ": F1 increased with threshold");
  }
  std::vector<std::size_t> pairs;
  for (const auto& [thr, p] : result.at("pairs").at("model-a/after/P01").items()) pairs.push_back(p.size());
  c.expect(pairs == std::vector<std::size_t>{3, 2, 1}, "fixture should give 3/2/1 pairs");
  c.note("pairs at 0.70/0.80/0.90: 3/2/1");
}

void criterion9(Check& c, const fs::path& root) {
  const auto s = fixtures::hallucination_scenario(root / "c9");
  const auto out = run(s);
  const auto ev = mpv::evaluate_run(out.run_dir);
  fs::remove(s.mock);  // any endpoint call would now fail
  for (const int passes : {0, 3}) {
    const auto ab = json::parse(mpv::read_file(mpv::cmd_ablate(out.run_dir, passes)));
    const std::string phase = passes == 0 ? "before" : "after";
    c.expect(ab.at("rows") == rows_for_phase(ev, phase), "ablate(" + std::to_string(passes) + ") rows differ");
    for (const auto& [tid, entry] : ev.at("per_transcript").at("model-a").items())
      c.expect(ab.at("per_transcript").at("model-a").at(tid).at(phase) == entry.at(phase),
               "ablate(" + std::to_string(passes) + ") " + tid + " differs");
  }
}

void criterion10(Check& c, const fs::path& root) {
  const auto s = fixtures::hallucination_scenario(root / "c10");
  const auto out = run(s);
  const auto first = mpv::read_file(mpv::cmd_evaluate(out.run_dir));
  const auto second = mpv::read_file(mpv::cmd_evaluate(out.run_dir));
  c.expect(first == second, "evaluation.json differs between invocations");

  fs::remove_all(out.run_dir);
  const auto tree1 = fixtures::snapshot_tree(run(s).run_dir);
  fs::remove_all(out.run_dir);
  const auto tree2 = fixtures::snapshot_tree(run(s).run_dir);
  c.expect(!tree1.empty() && tree1 == tree2, "mock-backend run tree differs between runs");
  for (const auto& [path, bytes] : tree1)
    if (!tree2.contains(path) || tree2.at(path) != bytes) c.expect(false, "differs: " + path);
  c.note(std::to_string(tree1.size()) + " files byte-identical");
}

void criterion11(Check& c, const fs::path& root) {
  const auto s = fixtures::perfect_scenario(root / "c11");
  const auto ev = mpv::evaluate_run(run(s).run_dir);
  const std::map<std::string, double> want{{"f1", 1.0},  {"sds", 0.0},  {"hr", 0.0},  {"kor", 0.0},
                                           {"khr", 0.0}, {"ari", 1.0},  {"tcs", 1.0}, {"freq_r", 1.0}};
  for (const auto& r : ev.at("rows"))
    for (const auto& [metric, value] : want) {
      const auto tag = metric + " " + r.at("condition").get<std::string>() + "/" + r.at("phase").get<std::string>();
      c.expect(!r.at(metric).is_null(), tag + " undefined");
      if (!r.at(metric).is_null()) c.near(r.at(metric).get<double>(), value, kRateTolerance, tag);
    }
}

}  // namespace

int main() {
  fixtures::TempDir root("mpv-acceptance");
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"metric-oracle equivalence", criterion1},
      {"half-weighted hallucination rate exactness", criterion2},
      {"ARI derived case", criterion3},
      {"Wilcoxon exact case", criterion4},
      {"pipeline hallucination removal", [&](Check& c) { criterion5(c, root.path()); }},
      {"convergence bound", [&](Check& c) { criterion6(c, root.path()); }},
      {"segmentation exactness", criterion7},
      {"threshold sensitivity monotonicity", [&](Check& c) { criterion8(c, root.path()); }},
      {"ablation identity", [&](Check& c) { criterion9(c, root.path()); }},
      {"determinism and replay", [&](Check& c) { criterion10(c, root.path()); }},
      {"perfect-corpus identity", [&](Check& c) { criterion11(c, root.path()); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    try {
      criteria[i].second(check);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    const bool ok = check.failures().empty();
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first;
    for (const auto& n : check.notes()) std::cout << " (" << n << ")";
    std::cout << "\n";
    for (const auto& f : check.failures()) std::cout << "    " << f << "\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
