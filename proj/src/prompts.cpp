#include "ccpipe/prompts.hpp"

#include "ccpipe/errors.hpp"

namespace ccpipe::prompts {

std::string render(std::string_view tmpl,
                   const std::map<std::string, std::string>& vars) {
  std::string out(tmpl);
  for (const auto& [key, value] : vars) {
    const std::string placeholder = "{{" + key + "}}";
    std::size_t pos = 0;
    while ((pos = out.find(placeholder, pos)) != std::string::npos) {
      out.replace(pos, placeholder.size(), value);
      pos += value.size();
    }
  }
  if (const auto open = out.find("{{"); open != std::string::npos) {
    const auto close = out.find("}}", open);
    throw PipelineError(ErrorCode::ConfigError,
                        "unresolved prompt placeholder: " +
                            out.substr(open, close == std::string::npos
                                                 ? 24
                                                 : close - open + 2));
  }
  return out;
}

const std::string_view kExtractProblem = R"(You are a research analyst. Read the paper text below and distill the core problem it addresses into a single self-contained paragraph. State the problem itself, not the paper's solution.

Paper text:
---
{{paper_text}}
---

Reply with ONLY a JSON object of the form:
{"problem_statement": "<one paragraph>"})";

const std::string_view kExtractIdeation = R"(You are a research analyst. Read the paper text below and describe its central innovation as a structured record.

Provide:
- name: a short name for the innovation.
- original_problem: the problem the innovation was created to solve.
- key_mechanism: how the innovation works, concretely.
- novel_insight: the non-obvious realization that makes it work.
- levels: the same innovation restated at four generalization levels:
  - L1: the most domain-specific description, close to the concrete implementation.
  - L2: a description generalized beyond the immediate technique.
  - L3: a broadly transferable formulation.
  - L4: the most universal principle it embodies.

Paper text:
---
{{paper_text}}
---

Reply with ONLY a JSON object of the form:
{"name": "...", "original_problem": "...", "key_mechanism": "...", "novel_insight": "...", "levels": {"L1": "...", "L2": "...", "L3": "...", "L4": "..."}})";

const std::string_view kAnalyzeProblem = R"(You are a research analyst. Decompose the problem statement below into {{target_structures}} distinct problem structures, each framing the problem from a different perspective.

For every structure provide a short perspective label and the structure restated at four generalization levels:
- L1: the most domain-specific framing, close to a concrete implementation need.
- L2: a framing generalized beyond the immediate domain.
- L3: a broadly transferable framing.
- L4: the most universal principle-level framing.

Problem statement:
---
{{problem_text}}
---

Reply with ONLY a JSON object of the form:
{"structures": [{"perspective": "<short label>", "levels": {"L1": "...", "L2": "...", "L3": "...", "L4": "..."}}]}
Return between {{min_structures}} and {{max_structures}} structures.)";

const std::string_view kAnalyzeLevel = R"(You are an analyst specializing in recombining existing innovations into new solutions. Below are stored innovations retrieved as relevant at generalization level {{level}} ({{level_gloss}}).

Examine each innovation through three perspectives:
1. Component analysis: break the innovation down into fundamental mechanisms and principles that could be recombined.
2. Cross-domain application: how those components could be adapted or reinterpreted in new contexts.
3. Building block assessment: whether the components can serve as foundations for new solutions.

Retrieved innovations:
{{entries}}

Reply with ONLY a JSON object of the form:
{"breakdowns": [{"entry_id": "<id from the list above>", "components": [{"mechanism": "...", "cross_domain_application": "...", "building_block_assessment": "..."}]}]}
Include one breakdown per listed innovation, keyed by its entry_id exactly as given.)";

const std::string_view kIntegrateIdea = R"(You are an integration analyst. Below are level-wise analyses of innovations retrieved for a problem. Review them with a focus on feasibility and innovativeness, considering how the analyzed components relate to each other and to the original problem, then synthesize one coherent solution.

Problem:
---
{{problem_text}}
---

Level-wise analyses:
{{analyses}}

Reply with ONLY a JSON object with these four fields:
{"problem_structure": "<how the solution conceptualizes the challenge>", "design_rationale": "<the key implementation decisions and why>", "universal_principle": "<the core idea applicable across domains>", "key_mechanism": "<the technical implementation details>"})";

const std::string_view kGenerateBaseline = R"(You are a research ideation assistant. Propose a solution to the problem below.

Problem:
---
{{problem_text}}
---

Reply with ONLY a JSON object with these four fields:
{"problem_structure": "<how the solution conceptualizes the challenge>", "design_rationale": "<the key implementation decisions and why>", "universal_principle": "<the core idea applicable across domains>", "key_mechanism": "<the technical implementation details>"})";

const std::string_view kExtractTargetFields = R"(You are a research analyst. Read the paper text below and extract how the paper itself answers each of the four aspects.

Paper text:
---
{{paper_text}}
---

Reply with ONLY a JSON object with these four fields:
{"problem_structure": "<how the paper conceptualizes the challenge>", "design_rationale": "<the paper's key implementation decisions and why>", "universal_principle": "<the core idea applicable across domains>", "key_mechanism": "<the paper's technical implementation details>"})";

}  // namespace ccpipe::prompts
