#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deid/hipaa.hpp"
#include "deid/types.hpp"

namespace deid {

inline constexpr std::string_view kDefaultMarker = "[redacted]";

// One "Redact ..." line of the explicit prompt, tagged with the PHI
// category it addresses.
struct Rule {
    std::string instruction;
    PhiCategory tag = PhiCategory::Others;
    std::optional<std::string> example;
};

// Structured redaction prompt: task statement, command, specific rules.
// Implicit prompts carry only the task statement.
struct PromptTemplate {
    std::string task_statement;
    std::string command;
    std::vector<Rule> rules;
    std::string marker = std::string(kDefaultMarker);
    bool implicit = false;
};

// Bare task statement with no command and no rules.
PromptTemplate build_implicit_prompt();

// Structured prompt with one rule per distinct mapped category, in fixed
// category order. DATE and ID share one combined rule line. Throws
// EmptyMapping when the mappings cover no concrete category.
PromptTemplate build_explicit_prompt(const std::vector<CategoryMapping>& mappings,
                                     std::string_view marker = kDefaultMarker);

// Same prompt built directly from a category set; used when the operator
// wants rules for every dataset category regardless of the mapping result.
PromptTemplate build_explicit_prompt_for_categories(std::span<const PhiCategory> categories,
                                                    std::string_view marker = kDefaultMarker);

// Newline-joined task statement, command and rule lines; no trailing
// whitespace; byte-stable across runs.
std::string render(const PromptTemplate& prompt);

enum class LintCode {
    TaskOnly = 0,      // a task line but no command or rule lines
    StrayPunctuation,  // command line ends in sentence-final punctuation
    MultipleTasks,     // two or more task-statement lines
    NoOutputSpec,      // no bracketed token or quoted replacement term
};

std::string_view to_string(LintCode code);

struct LintWarning {
    LintCode code = LintCode::TaskOnly;
    std::string message;
    std::optional<std::size_t> line;  // 1-based
};

// Shape checks for the known bad-prompt patterns; warnings ordered by code.
std::vector<LintWarning> lint_prompt(std::string_view text);

// Plain-text config round-trip so operators can version prompt templates.
std::string to_config(const PromptTemplate& prompt);
PromptTemplate prompt_from_config(std::string_view config);

}  // namespace deid
