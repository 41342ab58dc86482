#include "deid/prompt.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "deid/errors.hpp"

namespace deid {

namespace {

constexpr std::string_view kTaskStatement = "Please anonymize the following clinical note.";

std::string command_for(std::string_view marker) {
    return "Replace all the following information with the term \"" + std::string(marker) +
           "\":";
}

// Canonical rule line per category. DATE and ID share the combined line and
// are handled by the builder.
Rule rule_for(PhiCategory category) {
    switch (category) {
        case PhiCategory::Name:
            return {"Redact any strings that might be a name or acronym or initials, patients' "
                    "names, doctors' names, the names of the M.D. or Dr., any pager names, "
                    "medical staff names,",
                    PhiCategory::Name, std::nullopt};
        case PhiCategory::Profession:
            return {"Redact professions such as \"manager\",", PhiCategory::Profession,
                    "manager"};
        case PhiCategory::Location:
            return {"Redact any strings that might be a location or address, such as \"3970 "
                    "Longview Drive\", and clinic and hospital names,",
                    PhiCategory::Location, "3970 Longview Drive"};
        case PhiCategory::Age:
            return {"Redact any strings that look like \"something years old\" or \"age 37\",",
                    PhiCategory::Age, "age 37"};
        case PhiCategory::Date:
        case PhiCategory::Id:
            return {"Redact any dates and IDs and numbers and record dates,", category,
                    std::nullopt};
        case PhiCategory::Contact:
            return {"Redact any contact information:", PhiCategory::Contact, std::nullopt};
        case PhiCategory::Others: break;
    }
    return {"", PhiCategory::Others, std::nullopt};
}

}  // namespace

PromptTemplate build_implicit_prompt() {
    PromptTemplate prompt;
    prompt.task_statement = std::string(kTaskStatement);
    prompt.implicit = true;
    return prompt;
}

PromptTemplate build_explicit_prompt_for_categories(std::span<const PhiCategory> categories,
                                                    std::string_view marker) {
    std::set<PhiCategory> wanted(categories.begin(), categories.end());
    wanted.erase(PhiCategory::Others);
    if (wanted.empty()) {
        throw EmptyMapping("explicit prompt needs at least one concrete category");
    }

    PromptTemplate prompt;
    prompt.task_statement = std::string(kTaskStatement);
    prompt.marker = std::string(marker);
    prompt.command = command_for(marker);

    bool date_id_emitted = false;
    for (PhiCategory category : kConcreteCategories) {
        if (!wanted.count(category)) continue;
        if (category == PhiCategory::Date || category == PhiCategory::Id) {
            if (date_id_emitted) continue;
            date_id_emitted = true;
        }
        prompt.rules.push_back(rule_for(category));
    }
    return prompt;
}

PromptTemplate build_explicit_prompt(const std::vector<CategoryMapping>& mappings,
                                     std::string_view marker) {
    std::vector<PhiCategory> mapped;
    for (const CategoryMapping& m : mappings) {
        if (m.category != PhiCategory::Others) mapped.push_back(m.category);
    }
    if (mapped.empty()) {
        throw EmptyMapping("mappings cover no concrete category");
    }
    return build_explicit_prompt_for_categories(mapped, marker);
}

std::string render(const PromptTemplate& prompt) {
    std::string out = prompt.task_statement;
    if (!prompt.command.empty()) {
        out += '\n';
        out += prompt.command;
    }
    for (const Rule& rule : prompt.rules) {
        out += '\n';
        out += rule.instruction;
    }
    return out;
}

std::string_view to_string(LintCode code) {
    switch (code) {
        case LintCode::TaskOnly: return "TASK_ONLY";
        case LintCode::StrayPunctuation: return "STRAY_PUNCTUATION";
        case LintCode::MultipleTasks: return "MULTIPLE_TASKS";
        case LintCode::NoOutputSpec: return "NO_OUTPUT_SPEC";
    }
    return "TASK_ONLY";
}

namespace {

std::string lowercase(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    return out;
}

bool contains_word(const std::string& lower, std::string_view word) {
    std::size_t pos = 0;
    while ((pos = lower.find(word, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lower[pos - 1]));
        std::size_t after = pos + word.size();
        bool right_ok =
            after >= lower.size() || !std::isalnum(static_cast<unsigned char>(lower[after]));
        if (left_ok && right_ok) return true;
        pos += 1;
    }
    return false;
}

struct LineInfo {
    std::size_t number = 0;  // 1-based
    bool command = false;
    bool command_phrase = false;  // "replace ... with the term" shape
    bool rule = false;
    bool task = false;
    bool sentence_final = false;
};

std::vector<LineInfo> classify_lines(std::string_view text) {
    std::vector<LineInfo> out;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view raw =
            eol == std::string_view::npos ? text.substr(pos) : text.substr(pos, eol - pos);
        ++number;
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;

        while (!raw.empty() && (raw.back() == '\r' || raw.back() == ' ' || raw.back() == '\t')) {
            raw.remove_suffix(1);
        }
        while (!raw.empty() && (raw.front() == ' ' || raw.front() == '\t')) raw.remove_prefix(1);
        if (raw.empty()) continue;

        LineInfo info;
        info.number = number;
        std::string lower = lowercase(raw);
        char last = raw.back();
        info.sentence_final = last == '.' || last == '!' || last == '?';
        info.command_phrase =
            contains_word(lower, "replace") && lower.find("with the term") != std::string::npos;
        if (info.command_phrase || last == ':') {
            info.command = true;
        } else if (last == ',') {
            info.rule = true;
        } else if (contains_word(lower, "anonymize") || contains_word(lower, "anonymise") ||
                   contains_word(lower, "de-identify") || contains_word(lower, "deidentify") ||
                   contains_word(lower, "redact")) {
            info.task = true;
        }
        out.push_back(info);
    }
    return out;
}

bool has_output_spec(std::string_view text) {
    // bracketed replacement token, e.g. [redacted]
    std::size_t open = 0;
    while ((open = text.find('[', open)) != std::string_view::npos) {
        std::size_t close = text.find(']', open + 1);
        if (close == std::string_view::npos) break;
        std::string_view inside = text.substr(open + 1, close - open - 1);
        if (std::any_of(inside.begin(), inside.end(), [](unsigned char c) {
                return std::isalnum(c);
            })) {
            return true;
        }
        open = close + 1;
    }
    // quoted replacement term, e.g. with the term "redacted"
    std::string lower = lowercase(text);
    for (std::string_view key : {"term \"", "term '", "token \"", "token '"}) {
        if (lower.find(key) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

std::vector<LintWarning> lint_prompt(std::string_view text) {
    std::vector<LineInfo> lines = classify_lines(text);

    std::vector<const LineInfo*> tasks;
    std::size_t commands = 0;
    std::size_t rules = 0;
    const LineInfo* stray = nullptr;
    for (const LineInfo& line : lines) {
        if (line.task) tasks.push_back(&line);
        if (line.command) ++commands;
        if (line.rule) ++rules;
        if (line.command_phrase && line.sentence_final && !stray) stray = &line;
    }

    std::vector<LintWarning> warnings;
    if (!tasks.empty() && commands == 0 && rules == 0) {
        warnings.push_back({LintCode::TaskOnly,
                            "prompt states the task but gives no command or rules",
                            tasks.front()->number});
    }
    if (stray) {
        warnings.push_back({LintCode::StrayPunctuation,
                            "command line ends in sentence-final punctuation instead of a colon",
                            stray->number});
    }
    if (tasks.size() >= 2) {
        warnings.push_back({LintCode::MultipleTasks,
                            "prompt states more than one task", tasks[1]->number});
    }
    if (!has_output_spec(text)) {
        warnings.push_back({LintCode::NoOutputSpec,
                            "prompt never names the replacement token for the output",
                            std::nullopt});
    }
    std::stable_sort(warnings.begin(), warnings.end(),
                     [](const LintWarning& a, const LintWarning& b) { return a.code < b.code; });
    return warnings;
}

std::string to_config(const PromptTemplate& prompt) {
    std::ostringstream os;
    os << "[prompt]\n";
    os << "implicit = " << (prompt.implicit ? "true" : "false") << '\n';
    os << "marker = " << prompt.marker << '\n';
    os << "task = " << prompt.task_statement << '\n';
    if (!prompt.command.empty()) os << "command = " << prompt.command << '\n';
    for (const Rule& rule : prompt.rules) {
        os << "rule." << to_string(rule.tag) << " = " << rule.instruction << '\n';
        if (rule.example) {
            os << "example." << to_string(rule.tag) << " = " << *rule.example << '\n';
        }
    }
    return os.str();
}

PromptTemplate prompt_from_config(std::string_view config) {
    PromptTemplate prompt;
    prompt.marker.clear();
    std::istringstream in{std::string(config)};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line[0] == '[') continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key == "implicit") {
            prompt.implicit = value == "true";
        } else if (key == "marker") {
            prompt.marker = value;
        } else if (key == "task") {
            prompt.task_statement = value;
        } else if (key == "command") {
            prompt.command = value;
        } else if (key.rfind("rule.", 0) == 0) {
            auto cat = phi_category_from_string(key.substr(5));
            prompt.rules.push_back(Rule{value, cat.value_or(PhiCategory::Others), std::nullopt});
        } else if (key.rfind("example.", 0) == 0) {
            auto cat = phi_category_from_string(key.substr(8));
            for (auto it = prompt.rules.rbegin(); it != prompt.rules.rend(); ++it) {
                if (cat && it->tag == *cat) {
                    it->example = value;
                    break;
                }
            }
        }
    }
    if (prompt.marker.empty()) prompt.marker = std::string(kDefaultMarker);
    return prompt;
}

}  // namespace deid
