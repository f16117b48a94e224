// clue: judge search-log usefulness with an LLM cascade, compare judging
// strategies, and feed the labels into satisfaction prediction experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "clue/backend.hpp"
#include "clue/baselines.hpp"
#include "clue/cascade.hpp"
#include "clue/error.hpp"
#include "clue/log_io.hpp"
#include "clue/metrics.hpp"
#include "clue/prompts.hpp"
#include "clue/runner.hpp"
#include "clue/satisfaction.hpp"
#include "clue/synth.hpp"

using json = nlohmann::json;
using namespace clue;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitNoOverlap = 4;
constexpr int kExitDegenerateTarget = 5;
constexpr int kExitMissingGold = 6;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json config = json::parse(in, nullptr, false);
    if (config.is_discarded() || !config.is_object()) {
        throw ConfigError("config file '" + path + "' is not a JSON object");
    }
    return config;
}

// Flag beats config beats built-in default.
template <typename T>
void merge_option(const CLI::Option* option, const json& config, const char* key, T& value) {
    if (option != nullptr && option->count() > 0) return;  // flag wins
    if (config.contains(key)) value = config[key].get<T>();
}

struct BackendFlags {
    std::string spec = "scripted:oracle";  // scripted:{oracle,threshold,adversarial,never} | http
    std::string model = "scripted";
    std::string endpoint;
    std::string api_key_env;
    double temperature = 0.0;
    int max_retries = 3;
    double timeout_s = 30.0;
    int max_concurrent = 4;
    double backoff_base_s = 1.0;
};

BackendConfig to_backend_config(const BackendFlags& flags) {
    BackendConfig config;
    config.kind = flags.spec == "http" ? BackendKind::Http : BackendKind::Scripted;
    config.model_name = flags.model;
    config.temperature = flags.temperature;
    config.max_retries = flags.max_retries;
    config.timeout_s = flags.timeout_s;
    config.max_concurrent_requests = flags.max_concurrent;
    config.endpoint_url = flags.endpoint;
    config.api_key_env = flags.api_key_env;
    config.backoff_base_s = flags.backoff_base_s;
    return config;
}

std::shared_ptr<Backend> make_backend(const BackendFlags& flags, const std::string& gold_path) {
    const BackendConfig config = to_backend_config(flags);
    if (flags.spec == "http") {
        return std::make_shared<HttpBackend>(config);
    }
    if (flags.spec.rfind("scripted:", 0) != 0) {
        throw ConfigError("unknown backend '" + flags.spec +
                          "' (expected http or scripted:<rule>)");
    }
    const std::string rule_name = flags.spec.substr(std::string("scripted:").size());
    if (rule_name == "never") {
        return std::make_shared<ScriptedBackend>(config, ScriptRule::never_select());
    }
    if (gold_path.empty()) {
        throw ConfigError("scripted backend rule '" + rule_name + "' needs --gold");
    }
    auto gold = std::make_shared<GoldTable>(parse_labels_file(gold_path));
    if (rule_name == "oracle") {
        return std::make_shared<ScriptedBackend>(config, ScriptRule::oracle(gold));
    }
    if (rule_name == "threshold") {
        return std::make_shared<ScriptedBackend>(config, ScriptRule::threshold_oracle(gold));
    }
    if (rule_name == "adversarial") {
        return std::make_shared<ScriptedBackend>(config,
                                                 ScriptRule::adversarial(ScriptRule::oracle(gold)));
    }
    throw ConfigError("unknown scripted rule '" + rule_name + "'");
}

std::set<std::string> load_resume_marker(const std::string& path) {
    std::set<std::string> completed;
    std::ifstream in(path);
    if (!in) return completed;
    json marker = json::parse(in, nullptr, false);
    if (marker.is_discarded() || !marker.contains("completed")) return completed;
    for (const auto& query_id : marker["completed"]) {
        completed.insert(query_id.get<std::string>());
    }
    return completed;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << content;
}

int cmd_judge(const std::string& config_path, const std::string& sessions_path,
              const std::string& gold_path, const std::string& labels_out,
              const std::string& trace_out, const std::string& cache_path, int scale_n,
              const std::string& strategy_name, int voters, int workers, bool llm_segmentation,
              const CLI::App* cmd) {
    const json config = load_config(config_path);
    std::string sessions = sessions_path, gold = gold_path, labels = labels_out,
                trace = trace_out, cache_file = cache_path, strategy_text = strategy_name;
    int n = scale_n, num_voters = voters, num_workers = workers;
    merge_option(cmd->get_option_no_throw("--sessions"), config, "sessions", sessions);
    merge_option(cmd->get_option_no_throw("--gold"), config, "gold", gold);
    merge_option(cmd->get_option_no_throw("--labels-out"), config, "labels_out", labels);
    merge_option(cmd->get_option_no_throw("--trace-out"), config, "trace_out", trace);
    merge_option(cmd->get_option_no_throw("--cache"), config, "cache", cache_file);
    merge_option(cmd->get_option_no_throw("--scale"), config, "scale_n", n);
    merge_option(cmd->get_option_no_throw("--strategy"), config, "strategy", strategy_text);
    merge_option(cmd->get_option_no_throw("--voters"), config, "voters", num_voters);
    merge_option(cmd->get_option_no_throw("--workers"), config, "workers", num_workers);

    if (sessions.empty() || labels.empty()) {
        throw ConfigError("judge needs --sessions and --labels-out");
    }
    if (num_voters < 1 || num_voters % 2 == 0) {
        throw ConfigError("voters must be odd, got " + std::to_string(num_voters));
    }

    RunOptions options;
    options.strategy = strategy_from_string(strategy_text);
    options.scale = make_scale(n);
    options.num_voters = num_voters;
    options.workers = num_workers;
    options.llm_segmentation = llm_segmentation;
    if (config.contains("guidelines")) {
        options.guidelines.adjectives = config["guidelines"].get<std::vector<std::string>>();
        options.guidelines.origin = "config";
        options.guidelines.validate();
    }

    BackendFlags backend_flags;
    if (config.contains("backend")) {
        const json& b = config["backend"];
        if (b.contains("spec")) backend_flags.spec = b["spec"].get<std::string>();
        if (b.contains("model_name")) backend_flags.model = b["model_name"].get<std::string>();
        if (b.contains("endpoint_url")) backend_flags.endpoint = b["endpoint_url"].get<std::string>();
        if (b.contains("api_key_env")) backend_flags.api_key_env = b["api_key_env"].get<std::string>();
        if (b.contains("temperature")) backend_flags.temperature = b["temperature"].get<double>();
        if (b.contains("max_retries")) backend_flags.max_retries = b["max_retries"].get<int>();
        if (b.contains("timeout_s")) backend_flags.timeout_s = b["timeout_s"].get<double>();
        if (b.contains("max_concurrent_requests"))
            backend_flags.max_concurrent = b["max_concurrent_requests"].get<int>();
        if (b.contains("backoff_base_s"))
            backend_flags.backoff_base_s = b["backoff_base_s"].get<double>();
    }
    if (auto* opt = cmd->get_option_no_throw("--backend"); opt && opt->count() > 0) {
        backend_flags.spec = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--model"); opt && opt->count() > 0) {
        backend_flags.model = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--endpoint"); opt && opt->count() > 0) {
        backend_flags.endpoint = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--api-key-env"); opt && opt->count() > 0) {
        backend_flags.api_key_env = opt->as<std::string>();
    }
    if (auto* opt = cmd->get_option_no_throw("--temperature"); opt && opt->count() > 0) {
        backend_flags.temperature = opt->as<double>();
    }

    const auto parsed_sessions = parse_sessions_file(sessions);
    auto backend = make_backend(backend_flags, gold);
    std::shared_ptr<ResponseCache> cache;
    if (!cache_file.empty()) cache = std::make_shared<ResponseCache>(cache_file);
    JudgeClient client(backend, cache);

    const std::string marker_path = labels + ".resume";
    std::set<std::string> skip = load_resume_marker(marker_path);
    LabelSet previous;
    if (!skip.empty() && std::filesystem::exists(labels)) {
        previous = parse_labels_file(labels);
        std::cerr << "resuming: " << skip.size() << " queries already judged\n";
    } else {
        skip.clear();
    }

    JudgeRun run = judge_corpus(parsed_sessions, options, client,
                                skip.empty() ? nullptr : &skip);
    for (const auto& label : previous.all()) {
        if (skip.count(label.query_id)) run.labels.insert(label);
    }
    run.labels.sort_by_key();

    write_labels_file(labels, run.labels, std::string(to_string(options.strategy)));
    if (!trace.empty() && options.strategy == Strategy::Cascade) {
        std::ofstream out(trace);
        if (!out) throw ConfigError("cannot write '" + trace + "'");
        for (const auto& t : run.traces) out << trace_to_json_line(t) << '\n';
    }

    const auto& counters = run.summary.counters;
    const std::size_t lookups = counters.backend_calls + counters.cache_hits;
    std::cout << "queries judged: " << run.summary.queries_judged << "/"
              << run.summary.queries_total << "\n"
              << "backend calls:  " << counters.backend_calls << "\n"
              << "cache hit rate: "
              << (lookups == 0 ? 0.0
                               : static_cast<double>(counters.cache_hits) /
                                     static_cast<double>(lookups))
              << "\n"
              << "anomalies:      " << counters.anomalies << "\n"
              << "labels written: " << run.labels.size() << " -> " << labels << "\n";

    if (!run.summary.complete) {
        std::set<std::string> completed(skip);
        completed.insert(run.completed_query_ids.begin(), run.completed_query_ids.end());
        json marker = {{"completed", completed}};
        write_text_file(marker_path, marker.dump());
        std::cerr << "backend exhausted; partial labels flushed, resume marker at " << marker_path
                  << "\n";
        return kExitBackend;
    }
    std::filesystem::remove(marker_path);
    return 0;
}

int cmd_agree(const std::string& gold_path, const std::string& pred_path, int scale_n,
              const std::string& out_path) {
    const LabelSet gold = parse_labels_file(gold_path);
    const LabelSet pred = parse_labels_file(pred_path);
    int n = scale_n;
    if (n == 0) {
        for (const auto& label : gold.all()) n = std::max(n, label.scale_n);
    }
    const PairedLabels pairs = align(gold, pred);
    const MetricReport report = compute_report(pairs, n);
    const std::string text = report_to_json(report);
    std::cout << text << "\n";
    if (!out_path.empty()) write_text_file(out_path, text + "\n");
    return 0;
}

int cmd_metrics(const std::string& sessions_path, const std::string& labels_path, int cutoff,
                int scale_n, const std::string& gain_name, const std::string& out_path) {
    const auto sessions = parse_sessions_file(sessions_path);
    const LabelSet labels = parse_labels_file(labels_path);
    const OrdinalScale scale = make_scale(scale_n);
    const GainKind gain = gain_name == "exponential" ? GainKind::Exponential : GainKind::Linear;

    std::string lines;
    for (const auto& session : sessions) {
        for (const auto& query : session.queries) {
            const SessionMetricVector m =
                click_metrics(query, labels, cutoff == 0 ? kNoCutoff : cutoff, scale, gain);
            json obj = {{"query_id", query.query_id},
                        {"cutoff", cutoff == 0 ? json(nullptr) : json(cutoff)},
                        {"ccg", m.ccg},
                        {"cdcg", m.cdcg},
                        {"cmax", m.cmax},
                        {"ccg_per_click", m.ccg_per_click},
                        {"cdcg_per_click", m.cdcg_per_click}};
            lines += obj.dump() + "\n";
        }
    }
    std::cout << lines;
    if (!out_path.empty()) write_text_file(out_path, lines);
    return 0;
}

int cmd_satisfaction(const std::string& sessions_path, const std::string& labels_path,
                     const std::string& label_tag, std::vector<int> cutoffs, int scale_n,
                     std::uint64_t seed, const std::string& out_path,
                     const std::string& matrix_out) {
    const auto sessions = parse_sessions_file(sessions_path);
    const OrdinalScale scale = make_scale(scale_n);
    if (cutoffs.empty()) cutoffs = {3, 5, 10};

    std::vector<NamedMatrix> variants;
    variants.push_back(
        {"behavior", assemble_features(sessions, std::nullopt, {}, scale, label_tag)});
    if (!labels_path.empty()) {
        const LabelSet labels = parse_labels_file(labels_path);
        for (int cutoff : cutoffs) {
            variants.push_back({"+" + label_tag + "@" + std::to_string(cutoff),
                                assemble_features(sessions, labels, {cutoff}, scale, label_tag)});
        }
    }
    if (!matrix_out.empty()) {
        write_text_file(matrix_out, feature_matrix_to_csv(variants.back().matrix));
    }

    const ComparisonReport report = compare_feature_sets(variants, seed);
    const std::string text = comparison_report_to_json(report);
    std::cout << text << "\n";
    if (!out_path.empty()) write_text_file(out_path, text + "\n");
    return 0;
}

int cmd_export_finetune(const std::string& sessions_path, const std::string& gold_path,
                        int stage, bool all_stages, int scale_n, const std::string& out_prefix) {
    const auto sessions = parse_sessions_file(sessions_path);
    const LabelSet gold = parse_labels_file(gold_path);
    if (gold.empty()) throw MissingGoldError("gold label file is empty");
    const OrdinalScale scale = make_scale(scale_n);
    if (!all_stages && (stage < 2 || stage > scale.n)) {
        throw ConfigError("stage must lie in [2, " + std::to_string(scale.n) +
                          "]; no stage-1 classifier exists");
    }

    std::vector<int> stages;
    if (all_stages) {
        for (int k = scale.n; k >= 2; --k) stages.push_back(k);
    } else {
        stages.push_back(stage);
    }

    const GuidelineSet guidelines = GuidelineSet::default_usefulness();
    for (int k : stages) {
        std::string lines;
        std::size_t records = 0;
        for (const auto& session : sessions) {
            for (const auto& query : session.queries) {
                const auto instances = instances_for_query(query, session);
                for (const auto& record :
                     export_finetune_set(query, instances, gold, k, guidelines, scale)) {
                    lines += json{{"instruction", record.instruction},
                                  {"input", record.input},
                                  {"output", record.output}}
                                 .dump() +
                             "\n";
                    ++records;
                }
            }
        }
        const std::string path = out_prefix + "_k" + std::to_string(k) + ".jsonl";
        write_text_file(path, lines);
        std::cout << "stage " << k << ": " << records << " records -> " << path << "\n";
    }
    return 0;
}

int cmd_synth(std::uint64_t seed, int queries, double clicks_mean, double queries_per_session,
              int min_clicks, int scale_n, int sat_scale_n, double noise,
              const std::string& sessions_out, const std::string& gold_out,
              const std::string& relevance_gold_out) {
    SynthConfig config;
    config.seed = seed;
    config.num_queries = queries;
    config.clicks_per_query_mean = clicks_mean;
    config.queries_per_session_mean = queries_per_session;
    config.min_clicks = min_clicks;
    config.scale_n = scale_n;
    config.satisfaction_scale_n = sat_scale_n;
    config.satisfaction_noise = noise;

    const SynthCorpus corpus = generate_corpus(config);
    {
        std::ofstream out(sessions_out);
        if (!out) throw ConfigError("cannot write '" + sessions_out + "'");
        write_sessions(out, corpus.sessions);
    }
    write_labels_file(gold_out, corpus.gold);
    if (!relevance_gold_out.empty()) {
        write_labels_file(relevance_gold_out, corpus.relevance_gold);
    }

    const CorpusStats stats = corpus_stats(corpus.sessions);
    std::cout << "sessions: " << corpus.sessions.size() << ", queries: " << stats.num_queries
              << ", clicked docs: " << stats.num_clicked_docs
              << ", clicks/query: " << stats.clicks_per_query << "\n";
    return 0;
}

int cmd_stats(const std::string& sessions_path, const std::string& out_path) {
    const auto sessions = parse_sessions_file(sessions_path);
    const CorpusStats stats = corpus_stats(sessions);
    const json obj = {{"num_tasks", stats.num_tasks},
                      {"num_users", stats.num_users},
                      {"num_queries", stats.num_queries},
                      {"num_docs", stats.num_docs},
                      {"num_clicked_docs", stats.num_clicked_docs},
                      {"clicks_per_query", stats.clicks_per_query}};
    const std::string text = obj.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) write_text_file(out_path, text + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"clue: cascade LLM usefulness judging for search logs"};
    app.require_subcommand(1);

    // judge
    auto* judge = app.add_subcommand("judge", "judge clicked documents and write labels");
    std::string config_path, sessions_path, gold_path, labels_out, trace_out, cache_path;
    std::string strategy_name = "cascade";
    int scale_n = 4, voters = 5, workers = 1;
    bool llm_segmentation = false;
    BackendFlags backend_flags;
    judge->add_option("--config", config_path, "JSON config file (flags win)");
    judge->add_option("--sessions", sessions_path, "session JSONL");
    judge->add_option("--gold", gold_path, "gold labels JSONL (scripted rules)");
    judge->add_option("--labels-out", labels_out, "output labels JSONL");
    judge->add_option("--trace-out", trace_out, "output trace JSONL (cascade)");
    judge->add_option("--cache", cache_path, "response cache JSONL");
    judge->add_option("--scale", scale_n, "ordinal scale arity n");
    judge->add_option("--strategy", strategy_name,
                      "cascade | pointwise | pairwise | listwise | relevance");
    judge->add_option("--voters", voters, "voter count M (odd)");
    judge->add_option("--workers", workers, "concurrent queries");
    judge->add_flag("--llm-segmentation", llm_segmentation,
                    "segment rankings with an extra prompt instead of the deterministic rule");
    judge->add_option("--backend", backend_flags.spec,
                      "http | scripted:oracle | scripted:threshold | scripted:adversarial | "
                      "scripted:never");
    judge->add_option("--model", backend_flags.model, "model name");
    judge->add_option("--endpoint", backend_flags.endpoint, "http://host:port/path");
    judge->add_option("--api-key-env", backend_flags.api_key_env, "env var holding the API key");
    judge->add_option("--temperature", backend_flags.temperature, "sampling temperature");

    // agree
    auto* agree = app.add_subcommand("agree", "agreement metrics between two label files");
    std::string agree_gold, agree_pred, agree_out;
    int agree_scale = 0;
    agree->add_option("--gold", agree_gold, "gold labels JSONL")->required();
    agree->add_option("--pred", agree_pred, "predicted labels JSONL")->required();
    agree->add_option("--scale", agree_scale, "scale arity (default: inferred from gold)");
    agree->add_option("--out", agree_out, "write the report JSON here");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "click-sequence metrics per query");
    std::string metrics_sessions, metrics_labels, metrics_out, metrics_gain = "linear";
    int metrics_cutoff = 0, metrics_scale = 4;
    metrics->add_option("--sessions", metrics_sessions, "session JSONL")->required();
    metrics->add_option("--labels", metrics_labels, "labels JSONL")->required();
    metrics->add_option("--cutoff", metrics_cutoff, "count only the first k clicks (0 = all)");
    metrics->add_option("--scale", metrics_scale, "scale arity");
    metrics->add_option("--gain", metrics_gain, "linear | exponential");
    metrics->add_option("--out", metrics_out, "write JSONL here");

    // satisfaction
    auto* satisfaction = app.add_subcommand("satisfaction",
                                            "compare satisfaction-prediction feature sets");
    std::string sat_sessions, sat_labels, sat_tag = "u_llm", sat_out, sat_matrix_out;
    std::vector<int> sat_cutoffs;
    int sat_scale = 4;
    std::uint64_t sat_seed = 7;
    satisfaction->add_option("--sessions", sat_sessions, "session JSONL")->required();
    satisfaction->add_option("--labels", sat_labels, "labels JSONL for the metric features");
    satisfaction->add_option("--label-tag", sat_tag, "column prefix for the label metrics");
    satisfaction->add_option("--cutoffs", sat_cutoffs, "click cutoffs, e.g. 3 5 10");
    satisfaction->add_option("--scale", sat_scale, "scale arity of the labels");
    satisfaction->add_option("--seed", sat_seed, "fold shuffle seed");
    satisfaction->add_option("--out", sat_out, "write the comparison report JSON here");
    satisfaction->add_option("--matrix-out", sat_matrix_out, "write the last feature matrix CSV");

    // export-finetune
    auto* exportft = app.add_subcommand("export-finetune",
                                        "export per-stage instruction-tuning records");
    std::string ft_sessions, ft_gold, ft_prefix = "finetune";
    int ft_stage = 0, ft_scale = 4;
    bool ft_all = false;
    exportft->add_option("--sessions", ft_sessions, "session JSONL")->required();
    exportft->add_option("--gold", ft_gold, "gold labels JSONL")->required();
    exportft->add_option("--stage", ft_stage, "stage k in [2, n]");
    exportft->add_flag("--all-stages", ft_all, "export every stage k = n..2");
    exportft->add_option("--scale", ft_scale, "scale arity");
    exportft->add_option("--out-prefix", ft_prefix, "output prefix ( _k<k>.jsonl is appended)");

    // synth
    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic corpus");
    std::uint64_t synth_seed = 7;
    int synth_queries = 200, synth_min_clicks = 0, synth_scale = 4, synth_sat_scale = 5;
    double synth_clicks_mean = 1.6, synth_qps = 2.0, synth_noise = 0.25;
    std::string synth_sessions_out = "sessions.jsonl", synth_gold_out = "gold.jsonl";
    std::string synth_rel_gold_out;
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--queries", synth_queries, "total query count");
    synth->add_option("--clicks-mean", synth_clicks_mean, "mean clicks per query");
    synth->add_option("--queries-per-session", synth_qps, "mean queries per session");
    synth->add_option("--min-clicks", synth_min_clicks, "minimum clicks per query");
    synth->add_option("--scale", synth_scale, "usefulness scale arity");
    synth->add_option("--sat-scale", synth_sat_scale, "satisfaction scale arity");
    synth->add_option("--noise", synth_noise, "satisfaction noise (0 = exact bucketized cDCG)");
    synth->add_option("--sessions-out", synth_sessions_out, "sessions JSONL path");
    synth->add_option("--gold-out", synth_gold_out, "gold labels JSONL path");
    synth->add_option("--relevance-gold-out", synth_rel_gold_out,
                      "also write rank-biased relevance gold for every result");

    // stats
    auto* stats = app.add_subcommand("stats", "corpus statistics");
    std::string stats_sessions, stats_out;
    stats->add_option("--sessions", stats_sessions, "session JSONL")->required();
    stats->add_option("--out", stats_out, "write the stats JSON here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (judge->parsed()) {
            return cmd_judge(config_path, sessions_path, gold_path, labels_out, trace_out,
                             cache_path, scale_n, strategy_name, voters, workers, llm_segmentation,
                             judge);
        }
        if (agree->parsed()) return cmd_agree(agree_gold, agree_pred, agree_scale, agree_out);
        if (metrics->parsed()) {
            return cmd_metrics(metrics_sessions, metrics_labels, metrics_cutoff, metrics_scale,
                               metrics_gain, metrics_out);
        }
        if (satisfaction->parsed()) {
            return cmd_satisfaction(sat_sessions, sat_labels, sat_tag, sat_cutoffs, sat_scale,
                                    sat_seed, sat_out, sat_matrix_out);
        }
        if (exportft->parsed()) {
            return cmd_export_finetune(ft_sessions, ft_gold, ft_stage, ft_all, ft_scale,
                                       ft_prefix);
        }
        if (synth->parsed()) {
            return cmd_synth(synth_seed, synth_queries, synth_clicks_mean, synth_qps,
                             synth_min_clicks, synth_scale, synth_sat_scale, synth_noise,
                             synth_sessions_out, synth_gold_out, synth_rel_gold_out);
        }
        if (stats->parsed()) return cmd_stats(stats_sessions, stats_out);
    } catch (const NoOverlapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoOverlap;
    } catch (const DegenerateTargetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDegenerateTarget;
    } catch (const MissingGoldError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMissingGold;
    } catch (const BackendExhaustedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const TimeoutError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const EvenVoterCountError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const OutOfRangeError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
