#include <string>

#include "deid/redact.hpp"
#include "pools.hpp"

namespace deid {

namespace {

std::string compose_builtin_rules() {
    std::string out;
    out += "# Default de-identification patterns, one per line:\n";
    out += "# <CATEGORY>\\t<regex|word>\\t<pattern>\n";
    out += "CONTACT\tregex\t\\(\\d{3}\\)\\s?\\d{3}-\\d{4}\n";
    out += "CONTACT\tregex\t\\b\\d{3}-\\d{3}-\\d{4}\\b\n";
    out += "CONTACT\tregex\t\\b[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\\.[A-Za-z]{2,}\\b\n";
    out += "DATE\tregex\t\\b\\d{1,2}/\\d{1,2}/\\d{2,4}\\b\n";
    out +=
        "DATE\tregex\t\\b(?:January|February|March|April|May|June|July|August|September|"
        "October|November|December)\\s+\\d{1,2},?\\s+\\d{4}\\b\n";
    out += "ID\tregex\t\\b[A-Z]?\\d{7}\\b\n";
    out += "ID\tregex\t\\b\\d{3}-\\d{2}-\\d{4}\\b\n";
    out += "AGE\tregex\t\\b\\d{1,3}\\s+years?\\s+old\\b\n";
    out += "AGE\tregex\t\\b\\d{1,3}-year-old\\b\n";
    out += "AGE\tregex\t\\b[Aa]ge:?\\s*\\d{1,3}\\b\n";
    out +=
        "LOCATION\tregex\t\\b\\d+\\s+[A-Z][A-Za-z]+\\s+(?:Drive|Avenue|Street|Road|Lane|"
        "Court|Boulevard|Terrace|Place|Way)\\b\n";
    for (std::string_view facility : pools::kFacilities) {
        out += "LOCATION\tword\t";
        out += facility;
        out += '\n';
    }
    for (std::string_view name : pools::kFirstNames) {
        out += "NAME\tword\t";
        out += name;
        out += '\n';
    }
    for (std::string_view name : pools::kLastNames) {
        out += "NAME\tword\t";
        out += name;
        out += '\n';
    }
    out += "NAME\tregex\t\\b(?:Dr|Mr|Mrs|Ms)\\.\\s+[A-Z][A-Za-z'-]+(?:\\s+[A-Z][A-Za-z'-]+)?\n";
    for (std::string_view profession : pools::kProfessions) {
        out += "PROFESSION\tword\t";
        out += profession;
        out += '\n';
    }
    return out;
}

}  // namespace

std::string_view builtin_rules_tsv() {
    static const std::string rules = compose_builtin_rules();
    return rules;
}

}  // namespace deid
