#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "clue/labels.hpp"
#include "clue/prompts.hpp"
#include "clue/scale.hpp"

namespace clue {

enum class BackendKind { Http, Scripted };

struct BackendConfig {
    BackendKind kind = BackendKind::Scripted;
    std::string model_name = "scripted";
    double temperature = 0.0;
    int max_retries = 3;
    double timeout_s = 30.0;
    int max_concurrent_requests = 4;
    std::string endpoint_url;  // Http only, e.g. "http://host:8000/v1/chat/completions"
    std::string api_key_env;   // name of the env var holding the key
    double backoff_base_s = 1.0;  // exponential backoff base (factor 2)

    /// Throws ConfigError on invalid settings (temperature outside [0,2], etc.).
    void validate() const;
};

/// The parsed reply to a selection prompt.
struct ParsedSelection {
    std::string thought;  // may be empty
    std::vector<std::string> selected_ids;  // subset of the prompt's valid ids, deduplicated
    std::string raw_text;
    std::vector<std::string> dropped_ids;  // ids in the reply but not valid for the prompt
    bool used_lenient_path = false;
};

/// Strict path: the last JSON object in `raw` carrying a "selected" key (an
/// optional "thought" is kept). Lenient fallback: bracketed id tokens scanned
/// after the literal "selected". Ids not in valid_ids are dropped with a note;
/// an empty selection is valid. Throws UnparseableError when neither path
/// yields a well-formed selection.
ParsedSelection parse_selection(const std::string& raw, const std::vector<std::string>& valid_ids);

/// First integer token in `raw`. Throws UnparseableError when none exists.
int parse_integer_reply(const std::string& raw);

/// Gold lookup table for scripted rules, keyed by (query_id, doc_id).
class GoldTable {
public:
    GoldTable() = default;
    explicit GoldTable(const LabelSet& labels);  // any-source view of the set

    void set(const std::string& query_id, const std::string& doc_id, int value);

    /// Throws MissingGoldError when the pair is unknown.
    int value_of(const std::string& query_id, const std::string& doc_id) const;

    bool empty() const { return values_.empty(); }

private:
    std::map<std::pair<std::string, std::string>, int> values_;
};

/// Deterministic reply rule for the scripted backend.
///  - Oracle: selects the tags whose gold value equals the stage level.
///  - ThresholdOracle: selects tags with gold value >= the stage level.
///  - Adversarial: complements the selection of the wrapped rule (inverts
///    grades on graded prompts, reverses rankings on listwise prompts).
///  - Fixed: maps prompt digests to canned reply text, with a default reply
///    for unmatched digests.
struct ScriptRule {
    enum class Kind { Oracle, ThresholdOracle, Adversarial, Fixed };

    Kind kind = Kind::Fixed;
    std::shared_ptr<const GoldTable> gold;
    std::shared_ptr<const ScriptRule> inner;
    std::map<std::string, std::string> fixed_replies;  // prompt digest -> reply
    std::string fixed_default = R"({"thought":"","selected":[]})";

    static ScriptRule oracle(std::shared_ptr<const GoldTable> gold);
    static ScriptRule threshold_oracle(std::shared_ptr<const GoldTable> gold);
    static ScriptRule adversarial(ScriptRule inner);
    static ScriptRule fixed(std::map<std::string, std::string> replies,
                            std::string default_reply = R"({"thought":"","selected":[]})");
    static ScriptRule never_select();
};

/// SHA-256 hex digest of a prompt's rendered text; the key of Fixed rules.
std::string prompt_digest(const PromptSpec& prompt);

class Backend {
public:
    virtual ~Backend() = default;

    /// Returns the raw reply text. Throws BackendExhaustedError, AuthError or
    /// TimeoutError depending on the failure.
    virtual std::string complete(const PromptSpec& prompt) = 0;

    virtual const BackendConfig& config() const = 0;
};

/// Pure deterministic backend: the reply is a function of (prompt, rule).
class ScriptedBackend : public Backend {
public:
    ScriptedBackend(BackendConfig config, ScriptRule rule);

    std::string complete(const PromptSpec& prompt) override;
    const BackendConfig& config() const override { return config_; }

private:
    BackendConfig config_;
    ScriptRule rule_;
};

/// Chat-completion client over HTTP. POSTs {"model","temperature","messages"}
/// and reads the first choice's message content. Transient failures retry up
/// to max_retries with exponential backoff (base backoff_base_s, factor 2);
/// 401/403 raise AuthError immediately.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(BackendConfig config);

    std::string complete(const PromptSpec& prompt) override;
    const BackendConfig& config() const override { return config_; }

private:
    BackendConfig config_;
    std::string host_;
    int port_ = 80;
    std::string path_;
    std::string api_key_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;

    std::string attempt_once(const PromptSpec& prompt);
};

/// Routes each voter to its own backend: voter j uses backends[(j-1) % size].
/// Useful for robustness experiments mixing honest and adversarial voters.
class VoterDispatchBackend : public Backend {
public:
    VoterDispatchBackend(BackendConfig config, std::vector<std::shared_ptr<Backend>> voters);

    std::string complete(const PromptSpec& prompt) override;
    const BackendConfig& config() const override { return config_; }

private:
    BackendConfig config_;
    std::vector<std::shared_ptr<Backend>> voters_;
};

/// Persistent reply cache. Keys are SHA-256 digests over
/// (kind, model_name, temperature, rendered_text); storage is append-only
/// JSONL {"key","reply"}. Concurrent readers are fine; appends serialize.
class ResponseCache {
public:
    /// Opens (and loads) the cache file, creating it lazily on first put.
    /// Throws CacheIoError on a corrupted line, naming the offending key.
    explicit ResponseCache(std::filesystem::path file);

    static std::string key_for(const BackendConfig& config, const std::string& rendered_text);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& reply);

    std::size_t size() const;
    const std::filesystem::path& path() const { return file_; }

private:
    std::filesystem::path file_;
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::string> entries_;
};

/// Cumulative counters for one judging run.
struct ClientCounters {
    std::size_t backend_calls = 0;
    std::size_t cache_hits = 0;
    std::size_t anomalies = 0;       // unparseable replies downgraded to empty selections
    std::size_t clamped_grades = 0;  // out-of-range graded replies clamped onto the scale
    std::size_t repaired_rankings = 0;  // listwise replies with missing ids appended
};

/// Backend plus optional cache plus counters: the judge-side entry point.
/// Unparseable selection replies are re-asked once with a terse suffix and
/// then downgraded to an empty selection; graded and ranking replies are
/// re-asked once and then raise UnparseableError.
class JudgeClient {
public:
    explicit JudgeClient(std::shared_ptr<Backend> backend,
                         std::shared_ptr<ResponseCache> cache = nullptr);

    /// Raw completion, through the cache when one is attached.
    std::string complete(const PromptSpec& prompt);

    /// Selection prompts (cascade stages, pairwise comparisons).
    ParsedSelection select(const PromptSpec& prompt);

    /// Graded prompts (pointwise, relevance). Out-of-range grades clamp onto
    /// [1, n] and count as clamped. Throws UnparseableError after the re-ask.
    int integer_grade(const PromptSpec& prompt, const OrdinalScale& scale);

    /// Listwise prompts: tags in ranked order, deduplicated, unknown dropped.
    /// Missing tags are NOT appended here; the caller owns the repair rule.
    /// Throws UnparseableError after the re-ask when no tag parses.
    std::vector<std::string> ranking(const PromptSpec& prompt);

    ClientCounters counters() const;
    void reset_counters();
    void note_repaired_ranking() { ++repaired_rankings_; }

    Backend& backend() { return *backend_; }
    bool has_cache() const { return cache_ != nullptr; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::size_t> backend_calls_{0};
    std::atomic<std::size_t> cache_hits_{0};
    std::atomic<std::size_t> anomalies_{0};
    std::atomic<std::size_t> clamped_grades_{0};
    std::atomic<std::size_t> repaired_rankings_{0};

    PromptSpec reask_prompt(const PromptSpec& prompt, const std::string& suffix) const;
};

/// Hex-encoded SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace clue
