#pragma once

#include <map>
#include <string>
#include <string_view>

namespace ccpipe::prompts {

// Bumped whenever any template text changes; recorded in run metadata so
// transcripts can be matched to the template generation that produced them.
inline constexpr std::string_view kPromptVersion = "1";

// Replaces every {{key}} placeholder; throws ConfigError on a placeholder
// with no binding.
std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& vars);

extern const std::string_view kExtractProblem;
extern const std::string_view kExtractIdeation;
extern const std::string_view kAnalyzeProblem;
extern const std::string_view kAnalyzeLevel;
extern const std::string_view kIntegrateIdea;
extern const std::string_view kGenerateBaseline;
extern const std::string_view kExtractTargetFields;

}  // namespace ccpipe::prompts
