#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

// End-to-end runs of the installed CLI binary (path injected by CMake).

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "httplib.h"

#ifndef CLUE_CLI_PATH
#error "CLUE_CLI_PATH must be defined by the build"
#endif

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;

    TempDir() {
        path = fs::temp_directory_path() /
               ("clue_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
    const std::string command = std::string(CLUE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("synth is byte-deterministic for a fixed seed") {
    TempDir dir;
    REQUIRE(run("synth --seed 7 --queries 60 --sessions-out " + dir.file("a.jsonl") +
                " --gold-out " + dir.file("ga.jsonl")) == 0);
    REQUIRE(run("synth --seed 7 --queries 60 --sessions-out " + dir.file("b.jsonl") +
                " --gold-out " + dir.file("gb.jsonl")) == 0);
    CHECK(slurp(dir.file("a.jsonl")) == slurp(dir.file("b.jsonl")));
    CHECK(slurp(dir.file("ga.jsonl")) == slurp(dir.file("gb.jsonl")));

    REQUIRE(run("synth --seed 8 --queries 60 --sessions-out " + dir.file("c.jsonl") +
                " --gold-out " + dir.file("gc.jsonl")) == 0);
    CHECK(slurp(dir.file("a.jsonl")) != slurp(dir.file("c.jsonl")));
}

TEST_CASE("judge with an oracle recovers gold and agree reports maxima") {
    TempDir dir;
    REQUIRE(run("synth --seed 11 --queries 40 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    REQUIRE(run("judge --sessions " + dir.file("s.jsonl") + " --gold " + dir.file("g.jsonl") +
                " --labels-out " + dir.file("l.jsonl") +
                " --backend scripted:oracle --strategy cascade --voters 5 --scale 4") == 0);
    REQUIRE(run("agree --gold " + dir.file("g.jsonl") + " --pred " + dir.file("l.jsonl") +
                " --out " + dir.file("report.json")) == 0);
    const std::string report = slurp(dir.file("report.json"));
    CHECK(report.find("\"f1\": 1.0") != std::string::npos);
    CHECK(report.find("\"mae\": 0.0") != std::string::npos);
    CHECK(report.find("\"cohen_kappa\": 1.0") != std::string::npos);
}

TEST_CASE("even voter counts exit with the config code") {
    TempDir dir;
    REQUIRE(run("synth --seed 11 --queries 5 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    CHECK(run("judge --sessions " + dir.file("s.jsonl") + " --gold " + dir.file("g.jsonl") +
              " --labels-out " + dir.file("l.jsonl") +
              " --backend scripted:oracle --voters 4") == 2);
}

TEST_CASE("a warm cache rerun is byte-identical with zero backend calls") {
    TempDir dir;
    REQUIRE(run("synth --seed 13 --queries 30 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    const std::string base = "judge --sessions " + dir.file("s.jsonl") + " --gold " +
                             dir.file("g.jsonl") + " --backend scripted:oracle --cache " +
                             dir.file("cache.jsonl");
    REQUIRE(run(base + " --labels-out " + dir.file("cold.jsonl")) == 0);

    // Second run on the warm cache.
    const std::string command = std::string(CLUE_CLI_PATH) + " " + base + " --labels-out " +
                                dir.file("warm.jsonl") + " > " + dir.file("stdout.txt") + " 2>&1";
    REQUIRE(std::system(command.c_str()) == 0);
    CHECK(slurp(dir.file("cold.jsonl")) == slurp(dir.file("warm.jsonl")));
    CHECK(slurp(dir.file("stdout.txt")).find("backend calls:  0") != std::string::npos);
}

TEST_CASE("judge output is identical under 1 and 8 workers") {
    TempDir dir;
    REQUIRE(run("synth --seed 17 --queries 50 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    const std::string base = "judge --sessions " + dir.file("s.jsonl") + " --gold " +
                             dir.file("g.jsonl") + " --backend scripted:oracle --voters 3";
    REQUIRE(run(base + " --workers 1 --labels-out " + dir.file("w1.jsonl") + " --trace-out " +
                dir.file("t1.jsonl")) == 0);
    REQUIRE(run(base + " --workers 8 --labels-out " + dir.file("w8.jsonl") + " --trace-out " +
                dir.file("t8.jsonl")) == 0);
    CHECK(slurp(dir.file("w1.jsonl")) == slurp(dir.file("w8.jsonl")));
    CHECK(slurp(dir.file("t1.jsonl")) == slurp(dir.file("t8.jsonl")));
}

TEST_CASE("all baseline strategies produce complete label files") {
    TempDir dir;
    REQUIRE(run("synth --seed 19 --queries 25 --min-clicks 1 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl") + " --relevance-gold-out " +
                dir.file("rg.jsonl")) == 0);
    for (const std::string strategy : {"pointwise", "pairwise", "listwise", "relevance"}) {
        // The relevance oracle needs gold for every result, not only clicks.
        const std::string gold = strategy == "relevance" ? dir.file("rg.jsonl") : dir.file("g.jsonl");
        REQUIRE(run("judge --sessions " + dir.file("s.jsonl") + " --gold " + gold +
                    " --strategy " + strategy + " --backend scripted:oracle --labels-out " +
                    dir.file(strategy + ".jsonl")) == 0);
        CHECK_FALSE(slurp(dir.file(strategy + ".jsonl")).empty());
    }
    // Relevance covers the full SERP: 25 queries x 10 results.
    std::istringstream lines(slurp(dir.file("relevance.jsonl")));
    std::size_t count = 0;
    std::string line;
    while (std::getline(lines, line)) {
        if (!line.empty()) ++count;
    }
    CHECK(count == 250);
}

TEST_CASE("agree on a known confusion matrix reproduces the hand values") {
    TempDir dir;
    // gold [1,1,2,2] vs pred [1,2,1,2] on n=2: macro P=R=F1=0.5, kappa=0, MAE=0.5.
    {
        std::ofstream gold(dir.file("gold.jsonl"));
        std::ofstream pred(dir.file("pred.jsonl"));
        const int gold_values[] = {1, 1, 2, 2};
        const int pred_values[] = {1, 2, 1, 2};
        for (int i = 0; i < 4; ++i) {
            gold << R"({"query_id":"q","doc_id":"d)" << i
                 << R"(","source":"user_usefulness","value":)" << gold_values[i]
                 << R"(,"scale_n":2})" << "\n";
            pred << R"({"query_id":"q","doc_id":"d)" << i
                 << R"(","source":"llm_usefulness","value":)" << pred_values[i]
                 << R"(,"scale_n":2})" << "\n";
        }
    }
    REQUIRE(run("agree --gold " + dir.file("gold.jsonl") + " --pred " + dir.file("pred.jsonl") +
                " --scale 2 --out " + dir.file("report.json")) == 0);
    const std::string report = slurp(dir.file("report.json"));
    CHECK(report.find("\"precision\": 0.5") != std::string::npos);
    CHECK(report.find("\"recall\": 0.5") != std::string::npos);
    CHECK(report.find("\"f1\": 0.5") != std::string::npos);
    CHECK(report.find("\"cohen_kappa\": 0.0") != std::string::npos);
    CHECK(report.find("\"mae\": 0.5") != std::string::npos);
}

TEST_CASE("the metrics dump matches the hand-computed cDCG") {
    TempDir dir;
    std::ofstream(dir.file("s.jsonl"))
        << R"({"session_id":"s1","user_id":"u1","task_background_text":"","task_goal_text":"",)"
        << R"("queries":[{"query_id":"q1","query_string_text":"q","issue_time":"2024-07-01T10:00:00Z",)"
        << R"("satisfaction":null,"satisfaction_scale":null,)"
        << R"("results":[{"doc_id":"a","rank":1,"url":"","title":"","content_text":"x"},)"
        << R"({"doc_id":"b","rank":2,"url":"","title":"","content_text":"y"}],)"
        << R"("clicks":[{"doc_id":"a","click_order":1,"click_time":"2024-07-01T10:00:05Z","dwell_time_seconds":30.0,"is_session_end":false},)"
        << R"({"doc_id":"b","click_order":2,"click_time":"2024-07-01T10:00:50Z","dwell_time_seconds":12.0,"is_session_end":true}]}]})"
        << "\n";
    std::ofstream(dir.file("l.jsonl"))
        << R"({"query_id":"q1","doc_id":"a","source":"llm_usefulness","value":4,"scale_n":4})" << "\n"
        << R"({"query_id":"q1","doc_id":"b","source":"llm_usefulness","value":2,"scale_n":4})" << "\n";
    REQUIRE(run("metrics --sessions " + dir.file("s.jsonl") + " --labels " + dir.file("l.jsonl") +
                " --cutoff 10 --out " + dir.file("m.jsonl")) == 0);
    const std::string dump = slurp(dir.file("m.jsonl"));
    CHECK(dump.find("\"ccg\":4.0") != std::string::npos);
    CHECK(dump.find("\"cdcg\":3.6309297535714578") != std::string::npos);
    CHECK(dump.find("\"cmax\":3.0") != std::string::npos);
}

TEST_CASE("disjoint label files exit with the overlap code") {
    TempDir dir;
    std::ofstream(dir.file("gold.jsonl"))
        << R"({"query_id":"qa","doc_id":"d1","source":"user_usefulness","value":2,"scale_n":4})"
        << "\n";
    std::ofstream(dir.file("pred.jsonl"))
        << R"({"query_id":"qb","doc_id":"d1","source":"llm_usefulness","value":2,"scale_n":4})"
        << "\n";
    CHECK(run("agree --gold " + dir.file("gold.jsonl") + " --pred " + dir.file("pred.jsonl")) == 4);
}

TEST_CASE("a one-class satisfaction target exits with the degenerate code") {
    TempDir dir;
    REQUIRE(run("synth --seed 23 --queries 60 --noise 0 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    // Force a single class by rewriting every satisfaction value to 1.
    std::string text = slurp(dir.file("s.jsonl"));
    std::string rewritten;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::size_t pos = 0;
        while ((pos = line.find("\"satisfaction\":", pos)) != std::string::npos) {
            const std::size_t value_pos = pos + std::string("\"satisfaction\":").size();
            std::size_t end = value_pos;
            while (end < line.size() && line[end] != ',' && line[end] != '}') ++end;
            line.replace(value_pos, end - value_pos, "1");
            pos = value_pos;
        }
        rewritten += line + "\n";
    }
    std::ofstream(dir.file("flat.jsonl")) << rewritten;
    CHECK(run("satisfaction --sessions " + dir.file("flat.jsonl") + " --seed 7") == 5);
}

TEST_CASE("export-finetune writes one file per stage and rejects stage 1") {
    TempDir dir;
    REQUIRE(run("synth --seed 29 --queries 30 --min-clicks 1 --sessions-out " + dir.file("s.jsonl") +
                " --gold-out " + dir.file("g.jsonl")) == 0);
    REQUIRE(run("export-finetune --sessions " + dir.file("s.jsonl") + " --gold " +
                dir.file("g.jsonl") + " --all-stages --out-prefix " + dir.file("ft")) == 0);
    for (int k : {4, 3, 2}) {
        CHECK(fs::exists(dir.file("ft_k" + std::to_string(k) + ".jsonl")));
    }
    CHECK_FALSE(fs::exists(dir.file("ft_k1.jsonl")));
    CHECK(run("export-finetune --sessions " + dir.file("s.jsonl") + " --gold " +
              dir.file("g.jsonl") + " --stage 1 --out-prefix " + dir.file("bad")) == 2);

    std::ofstream(dir.file("empty.jsonl")) << "";
    CHECK(run("export-finetune --sessions " + dir.file("s.jsonl") + " --gold " +
              dir.file("empty.jsonl") + " --all-stages --out-prefix " + dir.file("none")) == 6);
}

TEST_CASE("backend exhaustion flushes partials with a resume marker, then resumes") {
    TempDir dir;
    REQUIRE(run("synth --seed 37 --queries 12 --min-clicks 1 --queries-per-session 1 "
                "--sessions-out " +
                dir.file("s.jsonl") + " --gold-out " + dir.file("g.jsonl")) == 0);

    // A chat server that succeeds for the first 9 requests, then turns into a
    // permanent 500 until healed.
    std::atomic<int> requests{0};
    std::atomic<bool> healthy{false};
    httplib::Server server;
    server.Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        const int count = ++requests;
        if (!healthy.load() && count > 9) {
            res.status = 500;
            return;
        }
        res.set_content(
            R"({"choices":[{"message":{"role":"assistant","content":"{\"thought\":\"\",\"selected\":[]}"}}]})",
            "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread server_thread([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    // Backoff and retry settings come from the config file; flags stay clean.
    std::ofstream(dir.file("config.json"))
        << R"({"backend":{"spec":"http","model_name":"m","endpoint_url":"http://127.0.0.1:)"
        << port << R"(/v1/chat/completions","max_retries":1,"backoff_base_s":0.01}})";

    const std::string base = "judge --config " + dir.file("config.json") + " --sessions " +
                             dir.file("s.jsonl") + " --labels-out " + dir.file("l.jsonl") +
                             " --strategy cascade --voters 1 --scale 4 --workers 1 --cache " +
                             dir.file("cache.jsonl");

    // With M=1 and n=4, each single-click query costs 3 calls: queries 1..3
    // complete (9 calls), query 4 exhausts.
    CHECK(run(base) == 3);
    REQUIRE(fs::exists(dir.file("l.jsonl.resume")));
    const std::string marker = slurp(dir.file("l.jsonl.resume"));
    CHECK(marker.find("q1") != std::string::npos);
    CHECK(marker.find("q3") != std::string::npos);
    CHECK(marker.find("q4") == std::string::npos);

    // Heal the server; the rerun resumes and completes every query.
    healthy.store(true);
    CHECK(run(base) == 0);
    CHECK_FALSE(fs::exists(dir.file("l.jsonl.resume")));

    std::istringstream labels(slurp(dir.file("l.jsonl")));
    std::set<std::string> labeled_queries;
    std::string line;
    while (std::getline(labels, line)) {
        const auto pos = line.find("\"query_id\":\"");
        if (pos == std::string::npos) continue;
        const auto start = pos + std::string("\"query_id\":\"").size();
        labeled_queries.insert(line.substr(start, line.find('"', start) - start));
    }
    CHECK(labeled_queries.size() == 12);

    server.stop();
    server_thread.join();
}

TEST_CASE("satisfaction reports are reproducible for a fixed seed") {
    TempDir dir;
    REQUIRE(run("synth --seed 31 --queries 120 --sat-scale 3 --noise 0.3 --sessions-out " +
                dir.file("s.jsonl") + " --gold-out " + dir.file("g.jsonl")) == 0);
    const std::string base = "satisfaction --sessions " + dir.file("s.jsonl") + " --labels " +
                             dir.file("g.jsonl") + " --cutoffs 10 --seed 7 --out ";
    REQUIRE(run(base + dir.file("r1.json")) == 0);
    REQUIRE(run(base + dir.file("r2.json")) == 0);
    CHECK(slurp(dir.file("r1.json")) == slurp(dir.file("r2.json")));
}
