#include "mpv/prompts.hpp"

#include "mpv/error.hpp"

namespace mpv {

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates templates{
      R"(You are a careful qualitative analysis model.
Do not guess. Use only the transcript.
Keep sentences short. Follow the steps.
Tasks:
Identify themes and sub-themes.
Give short explanations.
Provide exact supporting quotes.
Do not add outside knowledge.)",

      R"(Analyze the transcript using the rules.
Return JSON: {
"themes": [{
"theme_id": "T1",
"description": "...",
"subthemes": [{
"subtheme_id": "ST1",
"description": "...",
"quotes": ["...", "..."] } ] } ] }

Transcript:
{{transcript}})",

      R"(Use the verified themes and sub-themes.
Count how many times each appears.
Return JSON: {
"theme_frequencies": [ {
"theme_id": "T1",
"count": 0,
"subthemes": [ {
"subtheme_id": "ST1",
"count": 0 } ] } ] }

Verified themes JSON:
{{json}}

Transcript:
{{transcript}})",

      R"(You are a careful verification model.
Do not guess. Use only the transcript and JSON.
Keep sentences short. Follow the steps.
Tasks:
Check all themes and sub-themes.
Remove unsupported items.
Check quotes and counts.
Do not add new content.)",

      R"(Verify themes and sub-themes using the rules.
Keep only items supported by the transcript.
Remove hallucinated themes, sub-themes, and quotes.
Return updated JSON.

JSON:
{{json}}

Transcript:
{{transcript}})",

      R"(Verify all frequency counts.
Use only the transcript.
Remove unsupported counts.
Update the "count" fields only.
Do not add new themes or sub-themes.
Return updated JSON.

JSON:
{{json}}

Transcript:
{{transcript}})",
  };
  return templates;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos)
      throw Error(Errc::InvalidArgument, "unterminated placeholder in prompt template");
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 2, close - open - 2));
    auto it = values.find(name);
    if (it == values.end())
      throw Error(Errc::InvalidArgument, "unresolved prompt placeholder {{" + name + "}}");
    out.append(it->second);
    pos = close + 2;
  }
  return out;
}

}  // namespace mpv
