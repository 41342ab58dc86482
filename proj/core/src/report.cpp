#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "deid/eval.hpp"

namespace deid {

namespace {

std::string fixed(double value, int decimals) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

int variant_rank(const std::string& variant) {
    if (variant == "implicit") return 0;
    if (variant == "explicit") return 1;
    return 2;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

ResultsTable emit_report(std::vector<EvalReport> reports) {
    std::sort(reports.begin(), reports.end(), [](const EvalReport& a, const EvalReport& b) {
        if (a.backend_id != b.backend_id) return a.backend_id < b.backend_id;
        if (variant_rank(a.prompt_variant) != variant_rank(b.prompt_variant)) {
            return variant_rank(a.prompt_variant) < variant_rank(b.prompt_variant);
        }
        return a.prompt_variant < b.prompt_variant;
    });
    return ResultsTable{std::move(reports)};
}

std::string ResultsTable::to_csv() const {
    std::ostringstream os;
    os << "backend,prompt_variant,docs,tp,tn,fp,fn,accuracy,entity_removal_rate,category\n";
    auto row = [&](const EvalReport& r, const ConfusionCounts& c, std::string_view category) {
        os << csv_escape(r.backend_id) << ',' << csv_escape(r.prompt_variant) << ',' << r.docs
           << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ',';
        if (c.total() > 0) os << fixed(accuracy(c), 6);
        os << ',';
        if (c.tp + c.fn > 0) os << fixed(entity_removal_rate(c), 6);
        os << ',' << category << '\n';
    };
    for (const EvalReport& r : reports) {
        row(r, r.totals.overall, "ALL");
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            const ConfusionCounts& c = r.totals.per_category[i];
            if (c.total() == 0) continue;
            row(r, c, to_string(static_cast<PhiCategory>(i)));
        }
        if (r.totals.none.total() > 0) row(r, r.totals.none, "NONE");
    }
    return os.str();
}

std::string ResultsTable::to_text() const {
    // column layout: backends down, prompt variants across
    std::vector<std::string> backends;
    std::vector<std::string> variants;
    for (const EvalReport& r : reports) {
        if (std::find(backends.begin(), backends.end(), r.backend_id) == backends.end()) {
            backends.push_back(r.backend_id);
        }
        if (std::find(variants.begin(), variants.end(), r.prompt_variant) == variants.end()) {
            variants.push_back(r.prompt_variant);
        }
    }
    std::sort(backends.begin(), backends.end());
    std::sort(variants.begin(), variants.end(), [](const std::string& a, const std::string& b) {
        if (variant_rank(a) != variant_rank(b)) return variant_rank(a) < variant_rank(b);
        return a < b;
    });

    auto find_report = [&](const std::string& backend,
                           const std::string& variant) -> const EvalReport* {
        for (const EvalReport& r : reports) {
            if (r.backend_id == backend && r.prompt_variant == variant) return &r;
        }
        return nullptr;
    };

    std::size_t name_width = 8;
    for (const std::string& b : backends) name_width = std::max(name_width, b.size());

    std::ostringstream os;
    os << "De-identification accuracy (Eq. 1), backend x prompt variant\n\n";
    os << std::string(name_width, ' ');
    for (const std::string& v : variants) {
        os << "  " << v;
    }
    os << '\n';
    for (const std::string& b : backends) {
        os << b << std::string(name_width - b.size(), ' ');
        for (const std::string& v : variants) {
            const EvalReport* r = find_report(b, v);
            std::string cell = r ? fixed(r->overall_accuracy(), 3) : std::string("-");
            std::size_t width = v.size() + 2;
            os << std::string(width - std::min(width, cell.size()), ' ') << cell;
        }
        os << '\n';
    }

    os << "\nPer-category entity removal\n";
    for (const EvalReport& r : reports) {
        os << "\n" << r.backend_id << " / " << r.prompt_variant << " (" << r.docs << " docs, "
           << "accuracy " << fixed(r.overall_accuracy(), 3) << ", removal "
           << fixed(r.overall_removal_rate(), 3) << ")\n";
        for (std::size_t i = 0; i < kCategoryCount; ++i) {
            const ConfusionCounts& c = r.totals.per_category[i];
            if (c.tp + c.fn == 0) continue;
            os << "  " << to_string(static_cast<PhiCategory>(i)) << ": tp=" << c.tp
               << " fn=" << c.fn << " removal=" << fixed(entity_removal_rate(c), 3) << '\n';
        }
        if (r.totals.none.total() > 0) {
            os << "  NONE: fp=" << r.totals.none.fp << " tn=" << r.totals.none.tn << '\n';
        }
        os << "  failures:";
        for (const auto& [failure, count] : r.failures) {
            os << ' ' << to_string(failure) << '=' << count;
        }
        os << '\n';
    }
    return os.str();
}

std::string ResultsTable::failures_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const EvalReport& r : reports) {
        nlohmann::ordered_json entry;
        entry["backend"] = r.backend_id;
        entry["prompt_variant"] = r.prompt_variant;
        nlohmann::ordered_json histogram;
        for (const auto& [failure, count] : r.failures) {
            histogram[std::string(to_string(failure))] = count;
        }
        entry["histogram"] = std::move(histogram);
        out.push_back(std::move(entry));
    }
    return out.dump(2) + "\n";
}

}  // namespace deid
