#include "deid/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "deid/corpus.hpp"
#include "deid/errors.hpp"
#include "deid/hipaa.hpp"
#include "deid/llm_client.hpp"
#include "deid/prompt.hpp"
#include "deid/redact.hpp"
#include "deid/surrogate.hpp"

namespace deid {

namespace {

constexpr std::string_view kVersion = "0.1.0";

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

PromptTemplate prompt_for_variant(const RunConfig& config) {
    if (config.prompt_variant == "implicit") return build_implicit_prompt();
    // the explicit prompt covers every dataset category so each rule line of
    // the optimal template is present
    return build_explicit_prompt_for_categories(kConcreteCategories, config.marker);
}

void write_run_manifest(const RunConfig& config, std::string_view command) {
    std::filesystem::create_directories(config.out_dir);
    write_file_atomic(config.out_dir / ("run-" + std::string(command) + ".json"),
                      run_manifest_json(config, command));
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw IoError("write failure on " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string run_manifest_json(const RunConfig& config, std::string_view command) {
    nlohmann::ordered_json j;
    j["command"] = std::string(command);
    j["version"] = std::string(kVersion);
    j["seed"] = config.seed;
    j["marker"] = config.marker;
    j["prompt_variant"] = config.prompt_variant;
    j["threshold"] = config.threshold;
    j["backends"] = config.backends;
    j["concurrency"] = config.concurrency;
    j["lenient"] = config.lenient;
    if (config.corpus_dir) j["corpus_dir"] = config.corpus_dir->string();
    if (config.manifest_path) j["manifest"] = config.manifest_path->string();
    if (config.synthetic) {
        nlohmann::ordered_json s;
        s["n_docs"] = config.synthetic->n_docs;
        nlohmann::ordered_json counts;
        for (const auto& [category, count] : config.synthetic->per_category) {
            counts[std::string(to_string(category))] = count;
        }
        s["per_category"] = std::move(counts);
        s["seed"] = config.synthetic->seed;
        j["synthetic"] = std::move(s);
    }
    if (!config.endpoint.empty()) j["endpoint"] = config.endpoint;
    if (!config.model.empty()) j["model"] = config.model;
    // the api key never lands in any artifact
    return j.dump(2) + "\n";
}

std::vector<AnnotatedDocument> resolve_corpus(const RunConfig& config) {
    if (config.synthetic && config.corpus_dir) {
        throw InvalidSpec("synthetic and directory corpus sources are mutually exclusive");
    }
    if (config.synthetic) return generate_synthetic(*config.synthetic);
    if (config.corpus_dir) {
        CorpusLoad load = load_corpus(*config.corpus_dir);
        if (load.skipped > 0) {
            std::cerr << "warning: skipped " << load.skipped << " unparseable file(s)\n";
            for (const std::string& reason : load.skip_reasons) {
                std::cerr << "  " << reason << '\n';
            }
        }
        return std::move(load.docs);
    }
    std::filesystem::path manifest =
        config.manifest_path ? *config.manifest_path : config.out_dir / "manifest.jsonl";
    return read_manifest_file(manifest);
}

int cmd_generate(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        if (!config.synthetic) {
            err << "generate: a synthetic spec is required (--docs)\n";
            return kExitUsage;
        }
        std::vector<AnnotatedDocument> docs = generate_synthetic(*config.synthetic);
        std::filesystem::create_directories(config.out_dir);
        std::ostringstream manifest;
        write_manifest(manifest, docs);
        write_file_atomic(config.out_dir / "manifest.jsonl", manifest.str());
        write_run_manifest(config, "generate");
        out << "wrote " << docs.size() << " documents to "
            << (config.out_dir / "manifest.jsonl").string() << '\n';
        return kExitOk;
    } catch (const InvalidSpec& e) {
        err << "generate: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "generate: " << e.what() << '\n';
        return kExitUsage;
    }
}

int cmd_map(const RunConfig& config, bool use_llm_scorer, std::ostream& out, std::ostream& err) {
    try {
        std::vector<CategoryMapping> mappings;
        if (use_llm_scorer) {
            ChatClient::Options options;
            options.endpoint = config.endpoint;
            options.api_key = config.api_key;
            options.retry.max_attempts = config.max_attempts;
            options.retry.base_backoff = std::chrono::milliseconds(config.backoff_ms);
            options.log = [&err](std::string line) { err << line << '\n'; };
            ChatClient client(std::move(options));
            SimilarityScorer scorer = llm_similarity_scorer(
                client, config.model, [&err](std::string warning) { err << warning << '\n'; });
            const auto& glosses = default_category_glosses();
            mappings = map_identifiers(std::span(hipaa_identifiers()),
                                       std::span(glosses.data(), glosses.size()), scorer,
                                       config.threshold);
        } else {
            mappings = map_identifiers(config.threshold);
        }

        for (const CategoryMapping& m : mappings) {
            char line[160];
            std::snprintf(line, sizeof(line), "%2d  %-55s -> %-10s (score %.3f)",
                          m.identifier.index, m.identifier.label.c_str(),
                          std::string(to_string(m.category)).c_str(), m.score);
            out << line << '\n';
        }
        if (!config.out_dir.empty()) {
            std::filesystem::create_directories(config.out_dir);
            write_file_atomic(config.out_dir / "mapping.json", mapping_table_json(mappings));
            write_run_manifest(config, "map");
        }
        return kExitOk;
    } catch (const InvalidThreshold& e) {
        err << "map: " << e.what() << '\n';
        return kExitUsage;
    } catch (const TransportError& e) {
        err << "map: " << e.what() << '\n';
        return kExitTransport;
    } catch (const std::exception& e) {
        err << "map: " << e.what() << '\n';
        return kExitUsage;
    }
}

namespace {

std::unique_ptr<RedactionBackend> make_backend(const std::string& name, const RunConfig& config,
                                               const std::vector<AnnotatedDocument>& docs,
                                               std::unique_ptr<ChatClient>& client,
                                               std::ostream& err) {
    if (name == "mock") {
        std::map<std::string, std::vector<AnnotatedSpan>> gold;
        for (const AnnotatedDocument& d : docs) gold[d.doc.doc_id] = d.spans;
        return std::make_unique<MockBackend>(std::move(gold), config.marker);
    }
    if (name == "identity") return std::make_unique<IdentityBackend>();
    if (name == "rule") {
        RuleSet rules = config.rules_file ? RuleSet::from_file(*config.rules_file)
                                          : RuleSet::builtin();
        return std::make_unique<RuleBackend>(std::move(rules), config.marker);
    }
    if (name == "llm") {
        if (config.endpoint.empty()) {
            throw InvalidSpec("llm backend needs an endpoint (--endpoint or DEID_API_ENDPOINT)");
        }
        if (!client) {
            ChatClient::Options options;
            options.endpoint = config.endpoint;
            options.api_key = config.api_key;
            options.retry.max_attempts = config.max_attempts;
            options.retry.base_backoff = std::chrono::milliseconds(config.backoff_ms);
            options.max_in_flight = config.concurrency;
            options.log = [&err](std::string line) { err << line << '\n'; };
            client = std::make_unique<ChatClient>(std::move(options));
        }
        return std::make_unique<LlmBackend>(*client, config.model);
    }
    throw InvalidSpec("unknown backend '" + name + "' (expected mock|identity|rule|llm)");
}

}  // namespace

int cmd_redact(const RunConfig& config, std::ostream& out, std::ostream& err) {
    std::vector<AnnotatedDocument> docs;
    try {
        docs = resolve_corpus(config);
        if (config.backends.empty()) throw InvalidSpec("at least one backend is required");
    } catch (const std::exception& e) {
        err << "redact: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        std::filesystem::create_directories(config.out_dir);
        // keep the corpus next to the outputs so eval and surrogate can run
        // without repeating source flags
        if (config.synthetic || config.corpus_dir) {
            std::ostringstream manifest;
            write_manifest(manifest, docs);
            write_file_atomic(config.out_dir / "manifest.jsonl", manifest.str());
        }
        PromptTemplate prompt = prompt_for_variant(config);
        std::string rendered = render(prompt);
        std::filesystem::create_directories(config.out_dir / "prompts");
        write_file_atomic(config.out_dir / "prompts" / (config.prompt_variant + ".txt"),
                          rendered);
        write_run_manifest(config, "redact");

        bool transport_failed = false;
        std::unique_ptr<ChatClient> client;
        for (const std::string& backend_name : config.backends) {
            std::unique_ptr<RedactionBackend> backend =
                make_backend(backend_name, config, docs, client, err);
            std::filesystem::path backend_dir = config.out_dir / "outputs" / backend->id();
            std::filesystem::create_directories(backend_dir);

            std::atomic<std::size_t> next{0};
            std::atomic<std::size_t> done{0};
            std::atomic<std::size_t> skipped{0};
            std::atomic<bool> backend_transport_failed{false};
            std::mutex err_mutex;

            auto worker = [&]() {
                for (;;) {
                    std::size_t i = next.fetch_add(1);
                    if (i >= docs.size()) return;
                    const AnnotatedDocument& d = docs[i];
                    std::filesystem::path target = backend_dir / (d.doc.doc_id + ".txt");
                    if (!config.force && std::filesystem::exists(target)) {
                        skipped.fetch_add(1);
                        continue;
                    }
                    RedactionResult result = backend->redact(d.doc, rendered);
                    if (result.error) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        err << backend->id() << ": " << d.doc.doc_id << ": " << *result.error
                            << '\n';
                        if (result.transport_failure) backend_transport_failed = true;
                        continue;
                    }
                    write_file_atomic(target, result.redacted_text);
                    done.fetch_add(1);
                }
            };
            std::size_t n_workers = std::max(1, config.concurrency);
            n_workers = std::min(n_workers, docs.size() ? docs.size() : std::size_t{1});
            std::vector<std::thread> threads;
            for (std::size_t i = 0; i + 1 < n_workers; ++i) threads.emplace_back(worker);
            worker();
            for (std::thread& t : threads) t.join();

            out << backend->id() << ": wrote " << done.load() << " output(s), skipped "
                << skipped.load() << " existing\n";
            if (backend_transport_failed) transport_failed = true;
        }
        return transport_failed ? kExitTransport : kExitOk;
    } catch (const InvalidSpec& e) {
        err << "redact: " << e.what() << '\n';
        return kExitUsage;
    } catch (const AuthError& e) {
        err << "redact: " << e.what() << '\n';
        return kExitTransport;
    } catch (const std::exception& e) {
        err << "redact: " << e.what() << '\n';
        return kExitUsage;
    }
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        std::vector<AnnotatedDocument> docs = resolve_corpus(config);
        std::set<std::string> known;
        for (const AnnotatedDocument& d : docs) known.insert(d.doc.doc_id);

        std::filesystem::path outputs_dir = config.out_dir / "outputs";
        if (!std::filesystem::is_directory(outputs_dir)) {
            err << "eval: no outputs directory under " << config.out_dir.string() << '\n';
            return kExitEvalMismatch;
        }

        std::vector<std::string> backends = config.backends;
        if (backends.empty()) {
            for (const auto& entry : std::filesystem::directory_iterator(outputs_dir)) {
                if (entry.is_directory()) backends.push_back(entry.path().filename().string());
            }
            std::sort(backends.begin(), backends.end());
        }

        std::vector<std::string> variants;
        if (config.prompt_variant == "both") {
            variants = {"implicit", "explicit"};
        } else {
            variants = {config.prompt_variant};
        }

        std::vector<EvalReport> reports;
        for (const std::string& backend : backends) {
            std::filesystem::path dir = outputs_dir / backend;
            if (!std::filesystem::is_directory(dir)) {
                err << "eval: no outputs for backend " << backend << '\n';
                return kExitEvalMismatch;
            }
            std::map<std::string, std::string> outputs;
            for (const auto& entry : std::filesystem::directory_iterator(dir)) {
                if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
                std::string doc_id = entry.path().stem().string();
                if (!known.count(doc_id)) {
                    err << "eval: output " << entry.path().string()
                        << " has no matching manifest record\n";
                    return kExitEvalMismatch;
                }
                outputs[doc_id] = read_text_file(entry.path());
            }
            if (outputs.empty()) {
                err << "eval: backend " << backend << " has zero outputs\n";
                return kExitEvalMismatch;
            }
            for (const std::string& variant : variants) {
                RunConfig variant_config = config;
                variant_config.prompt_variant = variant;
                std::string prompt_text = render(prompt_for_variant(variant_config));
                reports.push_back(evaluate_documents(
                    docs, outputs, config.marker, backend, variant, prompt_text,
                    config.lenient ? MatchMode::Lenient : MatchMode::Strict));
            }
        }

        ResultsTable table = emit_report(std::move(reports));
        std::filesystem::create_directories(config.out_dir / "reports");
        write_file_atomic(config.out_dir / "reports" / "report.csv", table.to_csv());
        write_file_atomic(config.out_dir / "reports" / "report.txt", table.to_text());
        write_file_atomic(config.out_dir / "reports" / "failures.json", table.failures_json());
        write_run_manifest(config, "eval");
        out << table.to_text();
        return kExitOk;
    } catch (const IoError& e) {
        err << "eval: " << e.what() << '\n';
        return kExitEvalMismatch;
    } catch (const std::exception& e) {
        err << "eval: " << e.what() << '\n';
        return kExitUsage;
    }
}

int cmd_surrogate(const RunConfig& config, bool from_rules, bool emit_assignments,
                  std::ostream& out, std::ostream& err) {
    try {
        std::vector<AnnotatedDocument> docs = resolve_corpus(config);
        std::filesystem::path dir = config.out_dir / "surrogated";
        std::filesystem::create_directories(dir);

        std::optional<RuleSet> rules;
        if (from_rules) {
            rules.emplace(config.rules_file ? RuleSet::from_file(*config.rules_file)
                                            : RuleSet::builtin());
        }

        nlohmann::ordered_json audit = nlohmann::ordered_json::array();
        std::size_t warnings = 0;
        for (const AnnotatedDocument& d : docs) {
            const std::vector<AnnotatedSpan> spans =
                from_rules ? rules->find_spans(d.doc.text) : d.spans;
            SurrogateResult result =
                surrogate_replace(d.doc.text, spans, config.seed ^ fnv1a(d.doc.doc_id));
            write_file_atomic(dir / (d.doc.doc_id + ".txt"), result.text);
            warnings += result.warnings.size();
            for (const std::string& w : result.warnings) err << d.doc.doc_id << ": " << w << '\n';
            if (emit_assignments) {
                nlohmann::ordered_json entry;
                entry["doc_id"] = d.doc.doc_id;
                entry["assignments"] =
                    nlohmann::ordered_json::parse(assignments_json(result.assignments));
                audit.push_back(std::move(entry));
            }
        }
        if (emit_assignments) {
            write_file_atomic(config.out_dir / "assignments.json", audit.dump(2) + "\n");
        }
        write_run_manifest(config, "surrogate");
        out << "surrogated " << docs.size() << " document(s)";
        if (warnings > 0) out << " (" << warnings << " warning(s))";
        out << '\n';
        return kExitOk;
    } catch (const std::exception& e) {
        err << "surrogate: " << e.what() << '\n';
        return kExitUsage;
    }
}

}  // namespace deid
