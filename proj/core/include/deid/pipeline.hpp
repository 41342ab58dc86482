#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "deid/eval.hpp"
#include "deid/types.hpp"

namespace deid {

// Process exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitTransport = 3;
inline constexpr int kExitEvalMismatch = 4;

// Everything one reproducible run needs. Flags > env > config file >
// defaults; the CLI resolves precedence before this struct is built.
struct RunConfig {
    std::filesystem::path out_dir;

    // corpus source: a directory of XML, an existing manifest, or synthetic
    std::optional<std::filesystem::path> corpus_dir;
    std::optional<std::filesystem::path> manifest_path;
    std::optional<SyntheticSpec> synthetic;

    std::vector<std::string> backends{"rule"};
    std::string prompt_variant = "explicit";  // implicit | explicit
    std::string marker = "[redacted]";
    double threshold = 0.2;
    std::uint64_t seed = 42;
    bool force = false;
    bool lenient = false;  // evaluation overlap mode
    int concurrency = 4;

    std::optional<std::filesystem::path> rules_file;

    // remote backend
    std::string endpoint;
    std::string api_key;
    std::string model = "gpt-4";
    int max_attempts = 3;
    long backoff_ms = 250;
};

// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// generate: synthesize a corpus and write <out>/manifest.jsonl.
int cmd_generate(const RunConfig& config, std::ostream& out, std::ostream& err);

// map: print the 18-identifier mapping table; write <out>/mapping.json when
// an output directory is configured.
int cmd_map(const RunConfig& config, bool use_llm_scorer, std::ostream& out, std::ostream& err);

// redact: run the selected backends over the corpus under the chosen prompt
// variant; persist raw outputs under <out>/outputs/<backend>/<doc_id>.txt.
// Resumable: existing outputs are kept unless force is set.
int cmd_redact(const RunConfig& config, std::ostream& out, std::ostream& err);

// eval: score persisted outputs against the manifest; write
// <out>/reports/{report.csv,report.txt,failures.json}.
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);

// surrogate: replace gold (or rule-derived) spans with synthetic stand-ins;
// write <out>/surrogated/<doc_id>.txt and, only when asked, the assignment
// audit table.
int cmd_surrogate(const RunConfig& config, bool from_rules, bool emit_assignments,
                  std::ostream& out, std::ostream& err);

// Shared helpers the CLI and tests both exercise.
std::vector<AnnotatedDocument> resolve_corpus(const RunConfig& config);
std::string run_manifest_json(const RunConfig& config, std::string_view command);

}  // namespace deid
