#pragma once

#include <map>
#include <string>
#include <string_view>

namespace mpv {

/// The six prompt blocks of the analysis/verification workflow. The
/// instruction text is fixed; `{{transcript}}` and `{{json}}` slots carry the
/// payload.
struct PromptTemplates {
  std::string analysis_system;
  std::string theme_user;
  std::string frequency_user;
  std::string verification_system;
  std::string theme_verify_user;
  std::string frequency_verify_user;

  static const PromptTemplates& defaults();
};

/// Substitutes `{{name}}` slots found in `tmpl` (never inside substituted
/// values). Throws InvalidArgument for a slot with no value.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

}  // namespace mpv
