#include "mpv/evaluation.hpp"

#include <algorithm>
#include <sstream>

#include "mpv/error.hpp"
#include "mpv/metrics.hpp"
#include "mpv/run.hpp"

namespace mpv {

namespace fs = std::filesystem;
using nlohmann::json;

std::optional<double> TranscriptMetrics::get(const std::string& metric) const {
  auto it = values.find(metric);
  return it == values.end() ? std::nullopt : it->second;
}

json TranscriptMetrics::to_json() const {
  json metrics = json::object();
  for (const auto* name : kMetricNames) {
    const auto v = get(name);
    metrics[name] = v ? json(*v) : json(nullptr);
  }
  return json{{"metrics", metrics},
              {"flags", std::vector<std::string>(flags.begin(), flags.end())},
              {"detail", detail}};
}

namespace {

/// Records an undefined metric instead of failing the whole transcript.
template <typename F>
void guarded_metric(TranscriptMetrics& m, const char* name, F compute) {
  try {
    m.values[name] = compute();
  } catch (const Error& e) {
    m.values[name] = std::nullopt;
    m.flags.insert(std::string(name) + "_undefined");
    m.detail[name + std::string("_error")] = std::string(errc_name(e.code()));
  }
}

double count_of(const FrequencyReport& report, const std::string& theme,
                const std::optional<std::string>& sub) {
  const ThemeCount* tc = report.find(theme);
  if (!tc) return 0.0;
  if (!sub) return static_cast<double>(tc->count);
  const SubthemeCount* sc = tc->find_subtheme(*sub);
  return sc ? static_cast<double>(sc->count) : 0.0;
}

PairedSample frequency_pairs(const ModelOutput& out, const GoldStandard& gold,
                             const IdMapping& mapping) {
  PairedSample s;
  std::set<std::string> matched_model;
  std::set<std::pair<std::string, std::string>> matched_model_subs;
  for (const auto& g : gold.themes) {
    const auto* pair = mapping.themes.by_gold(g.theme_id);
    s.y.push_back(count_of(gold.counts, g.theme_id, std::nullopt));
    s.x.push_back(pair ? count_of(out.frequencies, pair->model_id, std::nullopt) : 0.0);
    if (pair) matched_model.insert(pair->model_id);
    for (const auto& gs : g.subthemes) {
      std::optional<std::string> model_sub;
      if (pair) {
        for (const auto& [key, gold_sub] : mapping.subthemes)
          if (key.first == pair->model_id && gold_sub == gs.subtheme_id) model_sub = key.second;
      }
      s.y.push_back(count_of(gold.counts, g.theme_id, gs.subtheme_id));
      s.x.push_back(model_sub ? count_of(out.frequencies, pair->model_id, model_sub) : 0.0);
      if (model_sub) matched_model_subs.insert({pair->model_id, *model_sub});
    }
  }
  for (const auto& t : out.themes.themes) {
    if (!matched_model.contains(t.theme_id)) {
      s.x.push_back(count_of(out.frequencies, t.theme_id, std::nullopt));
      s.y.push_back(0.0);
    }
    for (const auto& st : t.subthemes) {
      if (matched_model_subs.contains({t.theme_id, st.subtheme_id})) continue;
      s.x.push_back(count_of(out.frequencies, t.theme_id, st.subtheme_id));
      s.y.push_back(0.0);
    }
  }
  return s;
}

std::vector<std::string> gold_keywords(const GoldStandard& gold) {
  if (!gold.keywords.empty()) return gold.keywords;
  ThemeSet set;
  set.themes = gold.themes;
  return model_keywords(set);
}

}  // namespace

TranscriptMetrics evaluate_transcript(const ModelOutput& out, const GoldStandard& gold,
                                      const Transcript& transcript, Embedder& embedder,
                                      const EvalSettings& settings) {
  TranscriptMetrics m;
  for (const auto* name : kMetricNames) m.values[name] = std::nullopt;
  const auto embed = embed_fn(embedder);
  const double thr = settings.threshold;
  const auto& norm = settings.normalization;

  const auto mapping = build_id_mapping(out.themes, gold.themes, embed, thr, norm);
  json pairs = json::array();
  for (const auto& p : mapping.themes.pairs)
    pairs.push_back(json{{"model", p.model_id},
                         {"gold", p.gold_id},
                         {"method", std::string(to_string(p.method))},
                         {"similarity", p.similarity}});
  m.detail["matches"] = pairs;
  m.detail["tp"] = mapping.themes.tp;
  m.detail["fp"] = mapping.themes.fp;
  m.detail["fn"] = mapping.themes.fn;
  m.detail["failed_segments"] = out.failed_segments;

  guarded_metric(m, "f1", [&] { return f1(mapping.themes.counts()).f1; });

  guarded_metric(m, "sds", [&] {
    ThemeSet gold_set;
    gold_set.themes = gold.themes;
    const auto model_text = theme_set_reduction(out.themes);
    const auto gold_text = theme_set_reduction(gold_set);
    if (model_text.empty() || gold_text.empty())
      throw Error(Errc::EmptyText, "nothing to embed for SDS");
    return sds(embedder.embed(model_text), embedder.embed(gold_text));
  });

  const GroundingIndex index(transcript.text, embed, norm);
  guarded_metric(m, "hr", [&] {
    JudgmentTally tally;
    json judged = json::array();
    for (const auto& s : segment_statements(out.themes, out.frequencies, transcript.id)) {
      const auto g = s.kind == StatementKind::ThemeAssertion
                         ? ground_statement(s, index, thr)
                         : classify_frequency_claim(s, gold, mapping);
      ++tally.total;
      if (g.status == SupportStatus::Unsupported) ++tally.unsupported;
      judged.push_back(json{{"id", s.id},
                            {"status", std::string(to_string(g.status))},
                            {"method", std::string(to_string(g.method))}});
    }
    m.detail["statements"] = judged;
    m.detail["unsupported"] = tally.unsupported;
    return hallucination_rate(tally, HrMode::Binary);
  });

  guarded_metric(m, "tcs", [&] {
    std::vector<ThemeSet> runs{out.themes};
    runs.insert(runs.end(), out.repeats.begin(), out.repeats.end());
    if (runs.size() < 2) throw Error(Errc::TooFewRuns, "no repeated runs stored");
    for (const auto& r : runs)
      if (theme_set_reduction(r).empty()) throw Error(Errc::EmptyText, "a run produced no themes");
    return tcs(runs, embed);
  });

  guarded_metric(m, "freq_r", [&] { return freq_correlation(frequency_pairs(out, gold, mapping)); });

  const auto gold_kw = gold_keywords(gold);
  const auto model_kw = model_keywords(out.themes);
  guarded_metric(m, "kor", [&] {
    const auto om = keyword_omissions(gold_kw, model_kw, embed, thr, norm);
    m.detail["missed_keywords"] = om.missed;
    return kor(static_cast<long long>(om.missed.size()), static_cast<long long>(gold_kw.size()));
  });
  guarded_metric(m, "khr", [&] {
    const auto invented = keyword_inventions(model_kw, index, gold_kw, thr);
    m.detail["invented_keywords"] = invented;
    return khr(static_cast<long long>(invented.size()), static_cast<long long>(model_kw.size()));
  });

  guarded_metric(m, "ari", [&] {
    const auto aligned = align_quotes(out.themes, gold, embed, thr, norm);
    m.detail["ari_items"] = aligned.labeling.items.size();
    m.detail["ari_excluded_model"] = aligned.excluded_model;
    m.detail["ari_excluded_gold"] = aligned.excluded_gold;
    return ari(aligned.labeling);
  });
  return m;
}

ModelOutput output_from_artifacts(const RunArtifacts& a) {
  ModelOutput o;
  o.themes = a.final_themes;
  o.frequencies = a.final_freq;
  o.repeats = a.repeat_runs;
  o.failed_segments = a.failed_segments.size();
  o.flags = a.flags;
  return o;
}

ModelOutput ablated_output(const RunArtifacts& before, const RunArtifacts& after, int passes) {
  if (passes < 0) throw Error(Errc::InvalidArgument, "pass count must be >= 0");
  if (passes == 0) return output_from_artifacts(before);

  ModelOutput o;
  o.failed_segments = after.failed_segments.size();
  o.flags = after.flags;
  const int n = after.theme_pass_count();
  o.themes = n == 0 ? after.analysis
                    : after.theme_passes[static_cast<std::size_t>(std::min(passes, n) - 1)];

  const int m = after.freq_pass_count();
  const FrequencyReport& verified =
      m == 0 ? after.freq_raw : after.freq_passes[static_cast<std::size_t>(std::min(passes, m) - 1)];
  // Counts follow the truncated theme set; ids dropped by later theme passes
  // fall back to the unverified counts.
  for (const auto& t : o.themes.themes) {
    const ThemeCount* v = verified.find(t.theme_id);
    const ThemeCount* b = before.freq_raw.find(t.theme_id);
    const ThemeCount* src = v ? v : b;
    ThemeCount entry{t.theme_id, src ? src->count : 0, {}};
    for (const auto& st : t.subthemes) {
      const SubthemeCount* vs = v ? v->find_subtheme(st.subtheme_id) : nullptr;
      const SubthemeCount* bs = b ? b->find_subtheme(st.subtheme_id) : nullptr;
      const SubthemeCount* ss = vs ? vs : bs;
      entry.subthemes.push_back({st.subtheme_id, ss ? ss->count : 0});
    }
    o.frequencies.entries.push_back(std::move(entry));
  }

  for (std::size_t r = 0; r < after.repeat_runs.size(); ++r) {
    const auto& rp = r < after.repeat_passes.size() ? after.repeat_passes[r] : std::vector<ThemeSet>{};
    if (rp.empty()) {
      o.repeats.push_back(after.repeat_runs[r]);
    } else {
      const auto k = std::min<std::size_t>(static_cast<std::size_t>(passes), rp.size());
      o.repeats.push_back(rp[k - 1]);
    }
  }
  return o;
}

// ---------------------------------------------------------------------------

namespace {

struct RunContext {
  RunConfig config;
  std::vector<Transcript> transcripts;
  std::map<std::string, std::optional<GoldStandard>> gold;
  std::vector<std::string> models;
  std::shared_ptr<Embedder> embedder;
  EvalSettings settings;
  fs::path run_dir;

  ~RunContext() {
    try {
      if (embedder) embedder->save_cache(run_dir / "embeddings.jsonl");
    } catch (...) {
    }
  }
};

std::unique_ptr<RunContext> open_run(const fs::path& run_dir, const std::optional<fs::path>& gold_dir,
                                     std::optional<double> threshold) {
  if (!fs::is_directory(run_dir)) throw Error(Errc::UnknownRun, "no run at " + run_dir.string());
  const auto config_file = run_dir / "config.json";
  if (!fs::exists(config_file))
    throw Error(Errc::UnknownRun, "run has no config.json: " + run_dir.string());
  auto ctx = std::make_unique<RunContext>();
  ctx->run_dir = run_dir;
  ctx->config = RunConfig::from_json(json::parse(read_file(config_file)), run_dir);
  if (gold_dir) ctx->config.gold_dir = *gold_dir;
  ctx->config.check_paths(true);
  ctx->transcripts = load_corpus(ctx->config.corpus_dir);
  if (ctx->transcripts.empty()) throw Error(Errc::InvalidArgument, "run corpus is empty");
  for (const auto& t : ctx->transcripts) {
    const auto file = ctx->config.gold_dir / (t.id + ".json");
    if (fs::exists(file)) {
      ctx->gold[t.id] = load_gold(file);
    } else {
      ctx->gold[t.id] = std::nullopt;
    }
  }
  for (const auto& e : ctx->config.endpoints)
    if (fs::is_directory(run_dir / e.model_label)) ctx->models.push_back(e.model_label);
  if (ctx->models.empty()) throw Error(Errc::InvalidArgument, "run has no model artifacts");
  ctx->embedder = make_embedder(ctx->config.embedding);
  if (fs::exists(run_dir / "embeddings.jsonl")) ctx->embedder->load_cache(run_dir / "embeddings.jsonl");
  ctx->settings.threshold = threshold.value_or(ctx->config.thresholds.match);
  if (ctx->config.stopwords)
    ctx->settings.normalization = NormalizationConfig::with_stopword_file(*ctx->config.stopwords);
  return ctx;
}

std::optional<RunArtifacts> try_read(const fs::path& dir) {
  if (!fs::is_directory(dir)) return std::nullopt;
  return read_artifacts(dir);
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return mean(v);
}

void set_metric(ValidationRow& row, const std::string& name, std::optional<double> v) {
  if (name == "f1") row.f1 = v;
  else if (name == "sds") row.sds = v;
  else if (name == "hr") row.hr = v;
  else if (name == "tcs") row.tcs = v;
  else if (name == "freq_r") row.freq_r = v;
  else if (name == "kor") row.kor = v;
  else if (name == "khr") row.khr = v;
  else if (name == "ari") row.ari = v;
}

json paired_stats(const std::vector<double>& before, const std::vector<double>& after, bool wilcoxon) {
  try {
    if (wilcoxon) {
      const auto w = wilcoxon_signed_rank({after, before});
      return json{{"n", w.n},          {"w", w.w},         {"w_plus", w.w_plus},
                  {"w_minus", w.w_minus}, {"p", w.p_two_sided}, {"exact", w.exact},
                  {"significant", w.significant()}};
    }
    return json{{"d", cohens_d(after, before)}, {"n_before", before.size()}, {"n_after", after.size()}};
  } catch (const Error& e) {
    return json{{"error", std::string(errc_name(e.code()))}, {"n", before.size()}};
  }
}

}  // namespace

json evaluate_run(const fs::path& run_dir, const EvaluateOptions& options) {
  auto ctx = open_run(run_dir, options.gold_dir, options.threshold);
  const bool ablation = options.ablate_passes.has_value();
  if (ablation && (*options.ablate_passes < 0 || *options.ablate_passes > ctx->config.pipeline.max_verify_passes))
    throw Error(Errc::InvalidArgument, "passes must be within [0, " +
                                           std::to_string(ctx->config.pipeline.max_verify_passes) + "]");

  std::vector<Phase> phases;
  if (!ablation) {
    phases = {Phase::Before, Phase::After};
  } else {
    phases = {*options.ablate_passes == 0 ? Phase::Before : Phase::After};
  }

  json per_transcript = json::object();
  // model -> phase -> condition -> metric -> transcript values
  std::map<std::string, std::map<Phase, std::map<Condition, std::map<std::string, std::vector<double>>>>> values;
  // model -> condition -> metric -> paired (before, after)
  std::map<std::string, std::map<std::string, std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>>> paired;

  for (const auto& model : ctx->models) {
    for (const auto& t : ctx->transcripts) {
      const auto& gold = ctx->gold.at(t.id);
      if (!gold) {
        per_transcript[model][t.id] = json{{"condition", std::string(to_string(t.condition))},
                                           {"flags", {"missing_gold"}}};
        continue;
      }
      const auto before = try_read(ctx->run_dir / model / "before" / t.id);
      const auto after = try_read(ctx->run_dir / model / "after" / t.id);
      std::map<Phase, TranscriptMetrics> results;
      for (const auto phase : phases) {
        std::optional<ModelOutput> output;
        if (ablation) {
          if (*options.ablate_passes == 0 && before) output = output_from_artifacts(*before);
          if (*options.ablate_passes > 0 && before && after)
            output = ablated_output(*before, *after, *options.ablate_passes);
        } else {
          const auto& a = phase == Phase::Before ? before : after;
          if (a) output = output_from_artifacts(*a);
        }
        if (!output) {
          per_transcript[model][t.id][std::string(to_string(phase))] = json{{"flags", {"missing_artifacts"}}};
          continue;
        }
        auto metrics = evaluate_transcript(*output, *gold, t, *ctx->embedder, ctx->settings);
        auto entry = metrics.to_json();
        entry["artifact_flags"] = std::vector<std::string>(output->flags.begin(), output->flags.end());
        per_transcript[model][t.id][std::string(to_string(phase))] = entry;
        per_transcript[model][t.id]["condition"] = std::string(to_string(t.condition));
        for (const auto* name : kMetricNames)
          if (auto v = metrics.get(name)) values[model][phase][t.condition][name].push_back(*v);
        results.emplace(phase, std::move(metrics));
      }
      if (results.size() == 2) {
        for (const auto* name : kMetricNames) {
          const auto b = results.at(Phase::Before).get(name);
          const auto a = results.at(Phase::After).get(name);
          if (!b || !a) continue;
          for (const std::string cond : {std::string(to_string(t.condition)), std::string("all")}) {
            paired[model][cond][name].first.push_back(*b);
            paired[model][cond][name].second.push_back(*a);
          }
        }
      }
    }
  }

  std::set<Condition> conditions;
  for (const auto& t : ctx->transcripts) conditions.insert(t.condition);
  json rows = json::array();
  for (const auto& model : ctx->models)
    for (const auto cond : conditions)
      for (const auto phase : phases) {
        ValidationRow row;
        row.model_label = model;
        row.condition = cond;
        row.phase = phase;
        for (const auto* name : kMetricNames) set_metric(row, name, mean_of(values[model][phase][cond][name]));
        check_ranges(row);
        rows.push_back(to_json(row));
      }

  json wilcoxon = json::object(), cohens = json::object();
  for (const auto& [model, by_cond] : paired)
    for (const auto& [cond, by_metric] : by_cond)
      for (const auto& [metric, pv] : by_metric) {
        wilcoxon[model][cond][metric] = paired_stats(pv.first, pv.second, true);
        cohens[model][cond][metric] = paired_stats(pv.first, pv.second, false);
      }

  json meta{{"run_id", run_dir.filename().string()},
            {"threshold", ctx->settings.threshold},
            {"aggregation", "mean"},
            {"embedding", ctx->embedder->identity()},
            {"hr_mode", "binary"},
            {"ablation_passes", ablation ? json(*options.ablate_passes) : json(nullptr)}};
  return json{{"rows", rows},
              {"per_transcript", per_transcript},
              {"stats", {{"wilcoxon", wilcoxon}, {"cohens_d", cohens}}},
              {"meta", meta}};
}

fs::path cmd_evaluate(const fs::path& run_dir, const EvaluateOptions& options) {
  const auto evaluation = evaluate_run(run_dir, options);
  const auto file = options.ablate_passes
                        ? run_dir / ("ablation_" + std::to_string(*options.ablate_passes) + ".json")
                        : run_dir / "evaluation.json";
  write_file_atomic(file, evaluation.dump(2) + "\n");
  return file;
}

fs::path cmd_ablate(const fs::path& run_dir, int passes, const EvaluateOptions& options) {
  EvaluateOptions o = options;
  o.ablate_passes = passes;
  return cmd_evaluate(run_dir, o);
}

std::vector<ValidationRow> rows_from_evaluation(const json& evaluation) {
  std::vector<ValidationRow> rows;
  for (const auto& r : evaluation.at("rows")) rows.push_back(validation_row_from_json(r));
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out.precision(17);
  out << *v;
  return out.str();
}

}  // namespace

json sensitivity_run(const fs::path& run_dir, const std::vector<double>& thresholds,
                     std::optional<fs::path> gold_dir) {
  if (thresholds.empty()) throw Error(Errc::InvalidArgument, "no thresholds to sweep");
  auto ctx = open_run(run_dir, gold_dir, std::nullopt);
  std::vector<double> sweep = thresholds;
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  const auto embed = embed_fn(*ctx->embedder);
  const auto& norm = ctx->settings.normalization;

  json rows = json::array();
  json pair_sets = json::object();
  // key "model/phase/transcript" -> threshold index -> stage-2 pairs
  std::map<std::string, std::vector<std::set<std::pair<std::string, std::string>>>> nested;
  std::set<Condition> conditions;
  for (const auto& t : ctx->transcripts) conditions.insert(t.condition);

  for (std::size_t ti = 0; ti < sweep.size(); ++ti) {
    const double thr = sweep[ti];
    for (const auto& model : ctx->models) {
      for (const Phase phase : {Phase::Before, Phase::After}) {
        std::map<Condition, std::map<std::string, std::vector<double>>> acc;
        for (const auto& t : ctx->transcripts) {
          const auto& gold = ctx->gold.at(t.id);
          if (!gold) continue;
          const auto art = try_read(ctx->run_dir / model / std::string(to_string(phase)) / t.id);
          if (!art) continue;
          const auto out = output_from_artifacts(*art);
          const auto mapping = match_themes(out.themes, gold->themes, embed, thr, norm);
          std::set<std::pair<std::string, std::string>> stage2;
          json pj = json::array();
          for (const auto& p : mapping.pairs) {
            pj.push_back(json::array({p.model_id, p.gold_id, std::string(to_string(p.method))}));
            if (p.method == MatchMethod::Embedding) stage2.insert({p.model_id, p.gold_id});
          }
          const auto key = model + "/" + std::string(to_string(phase)) + "/" + t.id;
          nested[key].push_back(std::move(stage2));
          pair_sets[key][fmt_opt(thr)] = pj;

          try {
            acc[t.condition]["f1"].push_back(f1(mapping.counts()).f1);
          } catch (const Error&) {
          }
          const auto gold_kw = gold_keywords(*gold);
          const auto model_kw = model_keywords(out.themes);
          try {
            const auto om = keyword_omissions(gold_kw, model_kw, embed, thr, norm);
            acc[t.condition]["kor"].push_back(
                kor(static_cast<long long>(om.missed.size()), static_cast<long long>(gold_kw.size())));
          } catch (const Error&) {
          }
          try {
            const GroundingIndex index(t.text, embed, norm);
            const auto inv = keyword_inventions(model_kw, index, gold_kw, thr);
            acc[t.condition]["khr"].push_back(
                khr(static_cast<long long>(inv.size()), static_cast<long long>(model_kw.size())));
          } catch (const Error&) {
          }
        }
        for (const auto cond : conditions) {
          json row{{"threshold", thr},
                   {"model", model},
                   {"condition", std::string(to_string(cond))},
                   {"phase", std::string(to_string(phase))}};
          for (const char* name : {"f1", "kor", "khr"}) {
            const auto v = mean_of(acc[cond][name]);
            row[name] = v ? json(*v) : json(nullptr);
          }
          rows.push_back(row);
        }
      }
    }
  }

  bool monotone = true;
  json violations = json::array();
  for (const auto& [key, sets] : nested)
    for (std::size_t i = 0; i + 1 < sets.size(); ++i)
      if (!std::includes(sets[i].begin(), sets[i].end(), sets[i + 1].begin(), sets[i + 1].end())) {
        monotone = false;
        violations.push_back(json{{"key", key}, {"lower", sweep[i]}, {"higher", sweep[i + 1]}});
      }

  return json{{"thresholds", sweep},
              {"rows", rows},
              {"pairs", pair_sets},
              {"monotone", monotone},
              {"violations", violations}};
}

fs::path cmd_sensitivity(const fs::path& run_dir, std::optional<fs::path> gold_dir) {
  const auto config = RunConfig::from_json(json::parse(read_file(run_dir / "config.json")), run_dir);
  const auto result = sensitivity_run(run_dir, config.thresholds.sweep(), gold_dir);
  write_file_atomic(run_dir / "sensitivity.json", result.dump(2) + "\n");
  std::string csv = "threshold,model,condition,phase,f1,kor,khr\n";
  for (const auto& r : result.at("rows")) {
    auto cell = [&](const char* k) {
      return r.at(k).is_null() ? std::string() : fmt_opt(r.at(k).get<double>());
    };
    csv += fmt_opt(r.at("threshold").get<double>()) + "," + r.at("model").get<std::string>() + "," +
           r.at("condition").get<std::string>() + "," + r.at("phase").get<std::string>() + "," +
           cell("f1") + "," + cell("kor") + "," + cell("khr") + "\n";
  }
  write_file_atomic(run_dir / "sensitivity.csv", csv);
  if (!result.at("monotone").get<bool>())
    throw Error(Errc::InvalidArgument, "matched-pair sets are not nested across thresholds");
  return run_dir / "sensitivity.json";
}

}  // namespace mpv
