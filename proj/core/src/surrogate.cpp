#include "deid/surrogate.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <map>
#include <optional>

#include <nlohmann/json.hpp>

#include "deid/errors.hpp"
#include "deid/rng.hpp"
#include "deid/utf8.hpp"
#include "pools.hpp"

namespace deid {

namespace {

struct ParsedDate {
    std::chrono::year_month_day ymd;
};

std::optional<ParsedDate> parse_mdy(std::string_view surface) {
    unsigned month = 0;
    unsigned day = 0;
    int year = 0;
    if (std::sscanf(std::string(surface).c_str(), "%u/%u/%d", &month, &day, &year) != 3) {
        return std::nullopt;
    }
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) return std::nullopt;
    return ParsedDate{ymd};
}

std::string format_mdy(std::chrono::year_month_day ymd) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02u/%02u/%04d", static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(ymd.year()));
    return buf;
}

std::string shift_date(std::string_view surface, int offset_days, Rng& rng) {
    std::optional<ParsedDate> parsed = parse_mdy(surface);
    std::chrono::sys_days base;
    if (parsed) {
        base = std::chrono::sys_days(parsed->ymd);
    } else {
        // unparseable date surface: invent one, then shift like the rest
        std::chrono::year_month_day invented{std::chrono::year{static_cast<int>(rng.range(1990, 2014))},
                                             std::chrono::month{static_cast<unsigned>(rng.range(1, 12))},
                                             std::chrono::day{static_cast<unsigned>(rng.range(1, 28))}};
        base = std::chrono::sys_days(invented);
    }
    return format_mdy(std::chrono::year_month_day(base + std::chrono::days(offset_days)));
}

std::string reshape_digits(std::string_view surface, Rng& rng) {
    std::string out(surface);
    for (char& c : out) {
        if (c >= '0' && c <= '9') c = static_cast<char>('0' + rng.below(10));
    }
    return out;
}

std::string make_name(Rng& rng) {
    return std::string(pools::kFirstNames[rng.below(pools::kFirstNames.size())]) + " " +
           std::string(pools::kLastNames[rng.below(pools::kLastNames.size())]);
}

std::string make_address(Rng& rng) {
    return std::to_string(rng.range(100, 9999)) + " " +
           std::string(pools::kStreetNames[rng.below(pools::kStreetNames.size())]) + " " +
           std::string(pools::kStreetSuffixes[rng.below(pools::kStreetSuffixes.size())]);
}

std::string make_age_like(std::string_view surface, Rng& rng) {
    std::string n = std::to_string(rng.range(18, 95));
    if (surface.find("years old") != std::string_view::npos) return n + " years old";
    if (surface.rfind("age", 0) == 0 || surface.rfind("Age", 0) == 0) return "age " + n;
    return "age " + n;
}

}  // namespace

SurrogateResult surrogate_replace(std::string_view text, const std::vector<AnnotatedSpan>& spans,
                                  std::uint64_t seed) {
    Utf8Index index(text);
    const std::size_t n = index.scalars();

    std::vector<const AnnotatedSpan*> order;
    order.reserve(spans.size());
    for (const AnnotatedSpan& s : spans) order.push_back(&s);
    std::sort(order.begin(), order.end(),
              [](const AnnotatedSpan* a, const AnnotatedSpan* b) { return a->start < b->start; });
    for (std::size_t i = 0; i < order.size(); ++i) {
        const AnnotatedSpan& s = *order[i];
        if (s.start >= s.end || s.end > n) {
            throw SpanOutOfRange("surrogate span [" + std::to_string(s.start) + "," +
                                 std::to_string(s.end) + ") invalid");
        }
        if (i > 0 && order[i - 1]->end > s.start) {
            throw OverlappingSpans("surrogate spans overlap at scalar " +
                                   std::to_string(s.start));
        }
    }

    Rng rng(seed);
    // one shift for every date in the document keeps their order intact
    const int offset_days = static_cast<int>(rng.range(30 * 365, 60 * 365));

    SurrogateResult result;
    std::map<std::pair<PhiCategory, std::string>, std::string> memo;

    auto collides = [&](const std::string& candidate) {
        return text.find(candidate) != std::string_view::npos;
    };

    auto surrogate_for = [&](const AnnotatedSpan& span) -> std::string {
        auto key = std::make_pair(span.category, span.surface);
        if (auto it = memo.find(key); it != memo.end()) return it->second;

        auto fresh = [&]() -> std::string {
            switch (span.category) {
                case PhiCategory::Name: return make_name(rng);
                case PhiCategory::Profession:
                    return std::string(pools::kProfessions[rng.below(pools::kProfessions.size())]);
                case PhiCategory::Location:
                    if (!span.surface.empty() &&
                        std::isdigit(static_cast<unsigned char>(span.surface.front()))) {
                        return make_address(rng);
                    }
                    return std::string(pools::kFacilities[rng.below(pools::kFacilities.size())]);
                case PhiCategory::Age: return make_age_like(span.surface, rng);
                case PhiCategory::Date: return shift_date(span.surface, offset_days, rng);
                case PhiCategory::Contact:
                    if (span.surface.find('@') != std::string::npos) {
                        return std::string(
                                   pools::kEmailUsers[rng.below(pools::kEmailUsers.size())]) +
                               "@" + std::string(pools::kEmailDomain);
                    }
                    return reshape_digits(span.surface, rng);
                case PhiCategory::Id: return reshape_digits(span.surface, rng);
                case PhiCategory::Others: break;
            }
            result.warnings.push_back("span \"" + span.surface +
                                      "\" tagged OTHERS replaced by generic placeholder");
            return "[OTHER]";
        };

        std::string candidate = fresh();
        if (span.category == PhiCategory::Date) {
            // the offset is pinned; nudge forward a day at a time on the
            // (practically unreachable) collision
            for (int tries = 0; collides(candidate) && tries < 8; ++tries) {
                auto parsed = parse_mdy(candidate);
                if (!parsed) break;
                candidate =
                    format_mdy(std::chrono::year_month_day(std::chrono::sys_days(parsed->ymd) +
                                                           std::chrono::days(1)));
            }
        } else {
            for (int tries = 0; collides(candidate) && tries < 8; ++tries) candidate = fresh();
        }
        if (collides(candidate)) {
            std::string base = candidate;
            for (int suffix = 2; collides(candidate); ++suffix) {
                candidate = base + "-" + std::to_string(suffix);
            }
        }
        memo.emplace(std::move(key), candidate);
        return candidate;
    };

    std::string out(text);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const AnnotatedSpan& span = **it;
        std::string value = surrogate_for(span);
        std::size_t byte_start = index.byte_of(span.start);
        std::size_t byte_end = index.byte_of(span.end);
        out.replace(byte_start, byte_end - byte_start, value);
    }

    result.text = std::move(out);
    result.assignments.reserve(memo.size());
    for (const auto& [key, value] : memo) {
        result.assignments.push_back(SurrogateAssignment{key.second, value, key.first});
    }
    return result;
}

std::string assignments_json(const std::vector<SurrogateAssignment>& assignments) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const SurrogateAssignment& a : assignments) {
        nlohmann::ordered_json row;
        row["original"] = a.original;
        row["surrogate"] = a.surrogate;
        row["category"] = to_string(a.category);
        out.push_back(std::move(row));
    }
    return out.dump(2) + "\n";
}

}  // namespace deid
