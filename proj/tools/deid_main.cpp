// deid: clinical-text de-identification pipeline.
//
//   deid generate  --out runs/a --docs 100 --seed 42
//   deid map       --threshold 0.2
//   deid redact    --out runs/a --backends mock,identity,rule --prompt explicit
//   deid eval      --out runs/a
//   deid surrogate --out runs/a --seed 7
//
// Config precedence: flags > environment (DEID_API_KEY, DEID_API_ENDPOINT) >
// config file (--config, key=value) > defaults.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deid/pipeline.hpp"
#include "deid/types.hpp"

namespace {

// "NAME=3,DATE=1" -> per-category counts; bare "3" -> every category.
bool parse_counts(const std::string& text, std::map<deid::PhiCategory, std::size_t>& counts,
                  std::string& error) {
    if (text.empty()) return true;
    if (text.find('=') == std::string::npos) {
        char* end = nullptr;
        long v = std::strtol(text.c_str(), &end, 10);
        if (end == nullptr || *end != '\0' || v < 0) {
            error = "bad count '" + text + "'";
            return false;
        }
        for (deid::PhiCategory category : deid::kConcreteCategories) {
            counts[category] = static_cast<std::size_t>(v);
        }
        return true;
    }
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos
                                                                       : comma - pos);
        pos = comma == std::string::npos ? text.size() : comma + 1;
        std::size_t eq = item.find('=');
        if (eq == std::string::npos) {
            error = "expected CATEGORY=N in '" + item + "'";
            return false;
        }
        auto category = deid::phi_category_from_string(item.substr(0, eq));
        if (!category) {
            error = "unknown category '" + item.substr(0, eq) + "'";
            return false;
        }
        char* end = nullptr;
        long v = std::strtol(item.c_str() + eq + 1, &end, 10);
        if (end == nullptr || *end != '\0' || v < 0) {
            error = "bad count in '" + item + "'";
            return false;
        }
        counts[*category] = static_cast<std::size_t>(v);
    }
    return true;
}

void add_llm_options(CLI::App* cmd, deid::RunConfig& config) {
    cmd->add_option("--endpoint", config.endpoint, "OpenAI-compatible endpoint base URL")
        ->envname("DEID_API_ENDPOINT");
    cmd->add_option("--api-key", config.api_key, "Bearer token for the endpoint")
        ->envname("DEID_API_KEY");
    cmd->add_option("--model", config.model, "Model name sent in requests");
    cmd->add_option("--max-attempts", config.max_attempts, "Retry budget per request");
    cmd->add_option("--backoff-ms", config.backoff_ms, "Base retry backoff in milliseconds");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Clinical-text de-identification toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Plain-text key=value config file");

    deid::RunConfig config;
    std::string counts_spec;
    std::size_t docs = 0;
    bool use_llm_scorer = false;
    bool from_rules = false;
    bool emit_assignments = false;
    std::string rules_path;
    std::string corpus_dir;
    std::string manifest_path;

    CLI::App* generate = app.add_subcommand("generate", "Write a synthetic corpus manifest");
    generate->add_option("--out", config.out_dir, "Output directory")->required();
    generate->add_option("--docs", docs, "Number of documents")->required();
    generate->add_option("--counts", counts_spec,
                         "Entities per document: N or NAME=3,DATE=1,... (default 3 each)");
    generate->add_option("--seed", config.seed, "Generator seed");

    CLI::App* map_cmd = app.add_subcommand("map", "Map HIPAA identifiers to PHI categories");
    map_cmd->add_option("--threshold", config.threshold, "Similarity threshold in [0,1]");
    map_cmd->add_flag("--llm-scorer", use_llm_scorer, "Score with the chat model");
    map_cmd->add_option("--out", config.out_dir, "Directory for mapping.json");
    add_llm_options(map_cmd, config);

    CLI::App* redact = app.add_subcommand("redact", "Run redaction backends over a corpus");
    redact->add_option("--out", config.out_dir, "Run directory")->required();
    redact->add_option("--corpus", corpus_dir, "Directory of i2b2-style XML files");
    redact->add_option("--manifest", manifest_path, "Corpus manifest (jsonl)");
    redact->add_option("--synthetic-docs", docs, "Generate this many synthetic documents");
    redact->add_option("--counts", counts_spec, "Synthetic entities per document");
    redact->add_option("--seed", config.seed, "Synthetic generator seed");
    redact->add_option("--backends", config.backends, "Backends: mock,identity,rule,llm")
        ->delimiter(',');
    redact->add_option("--prompt", config.prompt_variant, "Prompt variant: implicit|explicit")
        ->check(CLI::IsMember({"implicit", "explicit"}));
    redact->add_option("--marker", config.marker, "Redaction marker token");
    redact->add_option("--rules", rules_path, "Rule pattern file (TSV)");
    redact->add_option("--jobs", config.concurrency, "Concurrent documents in flight");
    redact->add_flag("--force", config.force, "Redo documents with existing outputs");
    add_llm_options(redact, config);

    CLI::App* eval = app.add_subcommand("eval", "Score persisted outputs against gold spans");
    eval->add_option("--out", config.out_dir, "Run directory")->required();
    eval->add_option("--manifest", manifest_path, "Corpus manifest (jsonl)");
    eval->add_option("--backends", config.backends, "Backends to score (default: all found)")
        ->delimiter(',');
    eval->add_option("--prompt", config.prompt_variant,
                     "Prompt variant column(s): implicit|explicit|both")
        ->check(CLI::IsMember({"implicit", "explicit", "both"}));
    eval->add_option("--marker", config.marker, "Redaction marker token");
    eval->add_flag("--lenient", config.lenient, "Count any-overlap entities as removed");

    CLI::App* surrogate = app.add_subcommand("surrogate", "Replace spans with synthetic values");
    surrogate->add_option("--out", config.out_dir, "Run directory")->required();
    surrogate->add_option("--manifest", manifest_path, "Corpus manifest (jsonl)");
    surrogate->add_option("--seed", config.seed, "Surrogate seed");
    surrogate->add_option("--rules", rules_path, "Rule pattern file (TSV)");
    surrogate->add_flag("--from-rules", from_rules,
                        "Use rule-derived spans instead of gold spans");
    surrogate->add_flag("--emit-assignments", emit_assignments,
                        "Write the re-identifying assignment table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return deid::kExitUsage;
    }

    // defaults shared by generate and redact --synthetic-docs
    if (generate->parsed() || (redact->parsed() && docs > 0)) {
        deid::SyntheticSpec spec;
        spec.n_docs = docs;
        spec.seed = config.seed;
        for (deid::PhiCategory category : deid::kConcreteCategories) {
            spec.per_category[category] = 3;
        }
        std::string error;
        if (!parse_counts(counts_spec, spec.per_category, error)) {
            std::cerr << "bad --counts: " << error << '\n';
            return deid::kExitUsage;
        }
        config.synthetic = spec;
    }
    if (!corpus_dir.empty()) config.corpus_dir = corpus_dir;
    if (!manifest_path.empty()) config.manifest_path = manifest_path;
    if (!rules_path.empty()) config.rules_file = rules_path;
    if (eval->parsed() && !eval->count("--prompt")) config.prompt_variant = "both";
    if (eval->parsed() && !eval->count("--backends")) config.backends.clear();

    if (generate->parsed()) return deid::cmd_generate(config, std::cout, std::cerr);
    if (map_cmd->parsed()) return deid::cmd_map(config, use_llm_scorer, std::cout, std::cerr);
    if (redact->parsed()) return deid::cmd_redact(config, std::cout, std::cerr);
    if (eval->parsed()) return deid::cmd_eval(config, std::cout, std::cerr);
    if (surrogate->parsed()) {
        return deid::cmd_surrogate(config, from_rules, emit_assignments, std::cout, std::cerr);
    }
    return deid::kExitUsage;
}
