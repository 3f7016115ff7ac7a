#include <algorithm>
#include <cstdio>

#include "mpv/annotation_server.hpp"
#include "mpv/matching.hpp"
#include "mpv/pipeline.hpp"
#include "mpv/util.hpp"

namespace mpv {

namespace fs = std::filesystem;

std::vector<Statement> collect_run_statements(const fs::path& run_dir,
                                              std::map<std::string, std::string>* origins) {
  if (!fs::is_directory(run_dir)) throw Error(Errc::UnknownRun, "no run at " + run_dir.string());
  std::vector<fs::path> dirs;
  for (const auto& model : fs::directory_iterator(run_dir)) {
    if (!model.is_directory() || model.path().filename() == "annotations") continue;
    for (const char* phase : {"before", "after"}) {
      const auto phase_dir = model.path() / phase;
      if (!fs::is_directory(phase_dir)) continue;
      for (const auto& t : fs::directory_iterator(phase_dir))
        if (fs::exists(t.path() / "artifacts.json")) dirs.push_back(t.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Statement> out;
  for (const auto& dir : dirs) {
    const auto art = read_artifacts(dir);
    const auto phase = dir.parent_path().filename().string();
    const auto model = dir.parent_path().parent_path().filename().string();
    const auto prefix = model + "/" + phase + "/" + art.transcript_id + "/";
    for (auto s : segment_statements(art.final_themes, art.final_freq, art.transcript_id)) {
      const auto origin = prefix + s.id;
      char id[20];
      std::snprintf(id, sizeof id, "s%016llx", static_cast<unsigned long long>(fnv1a64(origin)));
      s.id = id;
      if (origins && !origins->emplace(s.id, origin).second)
        throw Error(Errc::SchemaViolation, "statement id collision for " + origin);
      out.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace mpv
