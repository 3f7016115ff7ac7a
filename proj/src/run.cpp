#include "mpv/run.hpp"

#include <algorithm>
#include <set>

#include "mpv/error.hpp"
#include "mpv/util.hpp"

namespace mpv {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<double> Thresholds::sweep() const {
  std::vector<double> out = sensitivity;
  out.push_back(match);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& value) {
  fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

void check_threshold(double t, const std::string& what) {
  if (!(t > 0.0 && t <= 1.0)) throw Error(Errc::ConfigError, what + " must be in (0, 1]");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw Error(Errc::ConfigError, "config must be a JSON object");
  RunConfig c;
  try {
    for (const char* key : {"corpus_dir", "gold_dir"})
      if (!j.contains(key)) throw Error(Errc::ConfigError, std::string("config is missing \"") + key + "\"");
    c.corpus_dir = resolve(base_dir, j.at("corpus_dir").get<std::string>());
    c.gold_dir = resolve(base_dir, j.at("gold_dir").get<std::string>());
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("runs")));
    if (!j.contains("endpoints") || !j.at("endpoints").is_array() || j.at("endpoints").empty())
      throw Error(Errc::ConfigError, "config needs a non-empty \"endpoints\" array");
    std::set<std::string> labels;
    for (const auto& e : j.at("endpoints")) {
      auto ep = EndpointConfig::from_json(e);
      if (!labels.insert(ep.model_label).second)
        throw Error(Errc::ConfigError, "duplicate endpoint model_label \"" + ep.model_label + "\"");
      if (ep.model_label.find('/') != std::string::npos)
        throw Error(Errc::ConfigError, "model_label must not contain '/'");
      c.endpoints.push_back(std::move(ep));
    }
    if (j.contains("decoding")) c.decoding = DecodingParams::from_json(j.at("decoding"));
    if (j.contains("embedding")) c.embedding = EmbeddingProviderConfig::from_json(j.at("embedding"));
    if (j.contains("pipeline")) c.pipeline = PipelineConfig::from_json(j.at("pipeline"));
    c.tcs_runs = j.value("tcs_runs", c.tcs_runs);
    if (c.tcs_runs < 2) throw Error(Errc::ConfigError, "tcs_runs must be >= 2");
    if (j.contains("thresholds")) {
      const auto& t = j.at("thresholds");
      c.thresholds.match = t.value("match", c.thresholds.match);
      c.thresholds.sensitivity = t.value("sensitivity", c.thresholds.sensitivity);
    } else {
      c.thresholds.match = c.embedding.similarity_threshold;
      c.thresholds.sensitivity = c.embedding.sensitivity_thresholds;
    }
    check_threshold(c.thresholds.match, "thresholds.match");
    for (double t : c.thresholds.sensitivity) check_threshold(t, "thresholds.sensitivity");
    if (j.contains("mock_script") && !j.at("mock_script").is_null())
      c.mock_script = resolve(base_dir, j.at("mock_script").get<std::string>());
    if (j.contains("stopwords") && !j.at("stopwords").is_null())
      c.stopwords = resolve(base_dir, j.at("stopwords").get<std::string>());
    if (j.contains("ui_dir") && !j.at("ui_dir").is_null())
      c.ui_dir = resolve(base_dir, j.at("ui_dir").get<std::string>());
    c.decoding.validate();
    for (const auto& ep : c.endpoints) ep.validate();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& file) {
  json j;
  try {
    j = json::parse(read_file(file));
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, file.string() + ": " + e.what());
  } catch (const Error& e) {
    throw Error(Errc::ConfigError, e.what());
  }
  return from_json(j, fs::absolute(file).parent_path());
}

json RunConfig::to_json() const {
  json endpoints_json = json::array();
  for (const auto& e : endpoints) endpoints_json.push_back(e.to_json());
  json j{{"corpus_dir", corpus_dir.string()},
         {"gold_dir", gold_dir.string()},
         {"output_dir", output_dir.string()},
         {"endpoints", endpoints_json},
         {"decoding", decoding.to_json()},
         {"embedding", embedding.to_json()},
         {"pipeline", pipeline.to_json()},
         {"tcs_runs", tcs_runs},
         {"thresholds", {{"match", thresholds.match}, {"sensitivity", thresholds.sensitivity}}}};
  j["mock_script"] = mock_script ? json(mock_script->string()) : json(nullptr);
  j["stopwords"] = stopwords ? json(stopwords->string()) : json(nullptr);
  j["ui_dir"] = ui_dir ? json(ui_dir->string()) : json(nullptr);
  return j;
}

void RunConfig::check_paths(bool need_gold) const {
  if (!fs::is_directory(corpus_dir))
    throw Error(Errc::ConfigError, "corpus_dir does not exist: " + corpus_dir.string());
  if (need_gold && !fs::is_directory(gold_dir))
    throw Error(Errc::ConfigError, "gold_dir does not exist: " + gold_dir.string());
}

std::string default_run_id(const RunConfig& config) {
  std::string material = config.to_json().dump();
  if (config.mock_script && fs::exists(*config.mock_script))
    material += "\n" + read_file(*config.mock_script);
  return "run-" + sha256_hex(material).substr(0, 12);
}

std::shared_ptr<Embedder> make_embedder(const EmbeddingProviderConfig& config) {
  return std::make_shared<Embedder>(std::shared_ptr<EmbeddingProvider>(make_embedding_provider(config)));
}

namespace {

std::shared_ptr<ChatBackend> make_backend(const RunConfig& config, const EndpointConfig& endpoint) {
  if (config.mock_script) return MockChatBackend::load(*config.mock_script);
  if (endpoint.base_url.empty())
    throw Error(Errc::ConfigError, "endpoint " + endpoint.model_label + " has no base_url");
  return std::make_shared<HttpChatBackend>(endpoint);
}

json flags_json(const std::set<std::string>& flags) { return json(std::vector<std::string>(flags.begin(), flags.end())); }

}  // namespace

RunOutcome cmd_run(const RunConfig& base_config, const RunOptions& options) {
  RunConfig config = base_config;
  if (options.output_dir) config.output_dir = *options.output_dir;
  if (options.mock_script) config.mock_script = *options.mock_script;
  config.check_paths(false);
  if (config.mock_script && !fs::exists(*config.mock_script))
    throw Error(Errc::ConfigError, "mock script not found: " + config.mock_script->string());
  config.pipeline.validate();

  const auto transcripts = load_corpus(config.corpus_dir);
  if (transcripts.empty())
    throw Error(Errc::ConfigError, "corpus_dir has no transcripts: " + config.corpus_dir.string());

  RunOutcome outcome;
  outcome.run_id = options.run_id.value_or(default_run_id(config));
  if (outcome.run_id.empty() || outcome.run_id.find('/') != std::string::npos)
    throw Error(Errc::ConfigError, "invalid run id \"" + outcome.run_id + "\"");
  outcome.run_dir = config.output_dir / outcome.run_id;
  fs::create_directories(outcome.run_dir);
  write_file_atomic(outcome.run_dir / "config.json", config.to_json().dump(2) + "\n");

  auto embedder = make_embedder(config.embedding);
  const auto cache_file = outcome.run_dir / "embeddings.jsonl";
  if (fs::exists(cache_file)) embedder->load_cache(cache_file);

  PipelineConfig before_cfg = config.pipeline;
  before_cfg.verification_enabled = false;
  before_cfg.passes_override.reset();
  const PipelineConfig& after_cfg = config.pipeline;

  json models = json::object();
  std::size_t total_successes = 0;
  for (const auto& endpoint : config.endpoints) {
    Gateway gateway(endpoint, make_backend(config, endpoint), config.decoding);
    const PipelineContext before_ctx{gateway, *embedder, before_cfg};
    const PipelineContext after_ctx{gateway, *embedder, after_cfg};
    json model_entry{{"endpoint", endpoint.to_json()}, {"transcripts", json::object()}};

    for (const auto& t : transcripts) {
      const auto before_dir = outcome.run_dir / endpoint.model_label / "before" / t.id;
      const auto after_dir = outcome.run_dir / endpoint.model_label / "after" / t.id;
      fs::create_directories(before_dir);
      fs::create_directories(after_dir);

      const auto analysis = analyze(t, before_ctx);
      auto before = complete_pipeline(analysis, t, before_ctx, &before_dir);
      auto after = complete_pipeline(analysis, t, after_ctx, &after_dir);

      for (int r = 1; r < config.tcs_runs; ++r) {
        const auto repeat = analyze(t, before_ctx, r);
        before.repeat_runs.push_back(repeat.merged);
        before.repeat_passes.emplace_back();
        auto passes = verify_loop(repeat.merged, t, after_ctx, r);
        after.repeat_runs.push_back(passes.empty() ? repeat.merged : passes.back());
        after.repeat_passes.push_back(std::move(passes));
        if (repeat.flags.contains(flag::kAnalysisFailed)) {
          before.flags.insert("repeat_analysis_failed");
          after.flags.insert("repeat_analysis_failed");
        }
      }
      write_artifacts(before_dir, before);
      write_artifacts(after_dir, after);

      model_entry["transcripts"][t.id] = json{
          {"condition", std::string(to_string(t.condition))},
          {"before", {{"flags", flags_json(before.flags)}, {"timings", before.timings.to_json()}}},
          {"after",
           {{"flags", flags_json(after.flags)},
            {"timings", after.timings.to_json()},
            {"theme_passes", after.theme_pass_count()},
            {"frequency_passes", after.freq_pass_count()}}}};
    }
    const auto stats = gateway.stats();
    total_successes += stats.successes;
    model_entry["gateway"] = stats.to_json();
    if (stats.successes == 0) model_entry["flags"] = json::array({"endpoint_failure"});
    models[endpoint.model_label] = model_entry;
  }
  embedder->save_cache(cache_file);

  json transcripts_json = json::array();
  for (const auto& t : transcripts)
    transcripts_json.push_back(json{{"id", t.id}, {"condition", std::string(to_string(t.condition))}});
  outcome.exit_code = total_successes == 0 ? 3 : 0;
  outcome.manifest = json{{"run_id", outcome.run_id},
                          {"config_sha256", sha256_hex(config.to_json().dump())},
                          {"embedding", embedder->identity()},
                          {"aggregation", "mean"},
                          {"tcs_runs", config.tcs_runs},
                          {"phases", {"before", "after"}},
                          {"transcripts", transcripts_json},
                          {"models", models},
                          {"mock", config.mock_script.has_value()},
                          {"flags", outcome.exit_code == 3 ? json::array({"all_endpoints_failed"})
                                                           : json::array()}};
  write_file_atomic(outcome.run_dir / "manifest.json", outcome.manifest.dump(2) + "\n");
  return outcome;
}

}  // namespace mpv
