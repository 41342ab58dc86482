// Exercises the installed `deid` binary end to end; the binary path arrives
// as argv[1] from ctest.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "helpers.hpp"

namespace {

std::string g_binary;
int g_failures = 0;

int run(const std::string& args) {
    std::string command = g_binary + " " + args + " >/dev/null 2>/dev/null";
    int status = std::system(command.c_str());
    if (status == -1) return -1;
    return WEXITSTATUS(status);
}

void expect(bool ok, const std::string& what) {
    if (ok) {
        std::cout << "ok: " << what << '\n';
    } else {
        std::cout << "FAILED: " << what << '\n';
        ++g_failures;
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: deid_cli_test <path-to-deid-binary>\n";
        return 2;
    }
    g_binary = argv[1];
    deid::testing::TempDir dir;
    std::string a = (dir.path() / "a").string();
    std::string b = (dir.path() / "b").string();

    expect(run("generate --out " + a + " --docs 12 --seed 42") == 0, "generate exits 0");
    expect(std::filesystem::exists(dir.path() / "a" / "manifest.jsonl"), "manifest written");

    expect(run("generate --out " + b + " --docs 12 --seed 42") == 0, "regenerate exits 0");
    expect(deid::testing::slurp(dir.path() / "a" / "manifest.jsonl") ==
               deid::testing::slurp(dir.path() / "b" / "manifest.jsonl"),
           "same flags give identical manifest bytes");

    expect(run("generate --out " + a + " --docs 0") == 2, "--docs 0 exits 2");
    expect(run("generate --docs 5") == 2, "missing --out exits 2");
    expect(run("bogus-subcommand") == 2, "unknown subcommand exits 2");

    expect(run("map") == 0, "map exits 0");
    expect(run("map --threshold 2") == 2, "--threshold 2 exits 2");

    expect(run("redact --out " + a + " --backends mock,identity,rule") == 0, "redact exits 0");
    expect(std::filesystem::exists(dir.path() / "a" / "outputs" / "mock"),
           "mock outputs directory exists");
    expect(run("redact --out " + a + " --backends mock,identity,rule") == 0,
           "redact rerun is resumable");
    expect(run("redact --out " + a + " --backends warp") == 2, "unknown backend exits 2");
    expect(run("redact --out " + a + " --corpus /tmp --synthetic-docs 3") == 2,
           "conflicting corpus sources exit 2");

    expect(run("eval --out " + a) == 0, "eval exits 0");
    expect(std::filesystem::exists(dir.path() / "a" / "reports" / "report.csv"),
           "report.csv written");
    expect(std::filesystem::exists(dir.path() / "a" / "reports" / "report.txt"),
           "report.txt written");
    expect(std::filesystem::exists(dir.path() / "a" / "reports" / "failures.json"),
           "failures.json written");
    expect(run("eval --out " + b) == 4, "eval without outputs exits 4");

    expect(run("surrogate --out " + a + " --seed 7") == 0, "surrogate exits 0");
    expect(std::filesystem::exists(dir.path() / "a" / "surrogated"), "surrogated dir exists");
    expect(!std::filesystem::exists(dir.path() / "a" / "assignments.json"),
           "assignment table withheld by default");
    expect(run("surrogate --out " + a + " --seed 7 --emit-assignments") == 0,
           "surrogate with audit table exits 0");
    expect(std::filesystem::exists(dir.path() / "a" / "assignments.json"),
           "assignment table written when asked");

    // llm backend against a dead endpoint: transport exit, partial results kept
    expect(run("redact --out " + a +
               " --backends llm --endpoint http://127.0.0.1:9 --api-key k "
               "--max-attempts 2 --backoff-ms 1") == 3,
           "dead endpoint exits 3");
    expect(std::filesystem::exists(dir.path() / "a" / "outputs" / "mock"),
           "earlier outputs survive a failed llm run");

    if (g_failures > 0) {
        std::cout << g_failures << " cli check(s) failed\n";
        return 1;
    }
    std::cout << "all cli checks passed\n";
    return 0;
}
