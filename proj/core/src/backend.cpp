#include "clue/backend.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "clue/baselines.hpp"
#include "clue/error.hpp"

namespace clue {

namespace {

using nlohmann::json;

std::string strip(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Normalizes a selection entry: strips whitespace, quotes and one bracket pair.
std::string normalize_id_token(std::string token) {
    token = strip(token);
    if (token.size() >= 2 && token.front() == '"' && token.back() == '"') {
        token = token.substr(1, token.size() - 2);
    }
    if (token.size() >= 2 && token.front() == '[' && token.back() == ']') {
        token = strip(token.substr(1, token.size() - 2));
    }
    return token;
}

// Keeps ids that are valid for the prompt, in reply order, deduplicated.
void filter_ids(const std::vector<std::string>& raw_ids, const std::vector<std::string>& valid_ids,
                std::vector<std::string>& kept, std::vector<std::string>& dropped) {
    for (const auto& id : raw_ids) {
        if (id.empty()) continue;
        const bool valid = std::find(valid_ids.begin(), valid_ids.end(), id) != valid_ids.end();
        auto& sink = valid ? kept : dropped;
        if (std::find(sink.begin(), sink.end(), id) == sink.end()) sink.push_back(id);
    }
}

// Balanced top-level {...} spans, respecting string literals and escapes.
std::vector<std::pair<std::size_t, std::size_t>> object_spans(const std::string& raw) {
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    int depth = 0;
    bool in_string = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            if (depth == 0) start = i;
            ++depth;
        } else if (c == '}') {
            if (depth > 0 && --depth == 0) spans.emplace_back(start, i + 1);
        }
    }
    return spans;
}

char to_lower_ascii(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

std::size_t find_last_selected(const std::string& raw) {
    static const std::string needle = "selected";
    if (raw.size() < needle.size()) return std::string::npos;
    for (std::size_t i = raw.size() - needle.size() + 1; i-- > 0;) {
        bool match = true;
        for (std::size_t j = 0; j < needle.size(); ++j) {
            if (to_lower_ascii(raw[i + j]) != needle[j]) {
                match = false;
                break;
            }
        }
        if (match) return i;
    }
    return std::string::npos;
}

}  // namespace

ParsedSelection parse_selection(const std::string& raw, const std::vector<std::string>& valid_ids) {
    ParsedSelection result;
    result.raw_text = raw;

    // Strict path: last JSON object carrying a "selected" array.
    const auto spans = object_spans(raw);
    for (auto it = spans.rbegin(); it != spans.rend(); ++it) {
        json obj = json::parse(raw.substr(it->first, it->second - it->first), nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("selected")) continue;
        const json& selected = obj["selected"];
        if (!selected.is_array()) continue;

        std::vector<std::string> raw_ids;
        for (const auto& entry : selected) {
            if (entry.is_string()) {
                raw_ids.push_back(normalize_id_token(entry.get<std::string>()));
            } else if (entry.is_number_integer()) {
                raw_ids.push_back(std::to_string(entry.get<long long>()));
            }
        }
        if (obj.contains("thought") && obj["thought"].is_string()) {
            result.thought = obj["thought"].get<std::string>();
        }
        filter_ids(raw_ids, valid_ids, result.selected_ids, result.dropped_ids);
        return result;
    }

    // Lenient path: bracketed tokens after the literal "selected".
    const std::size_t anchor = find_last_selected(raw);
    if (anchor != std::string::npos) {
        std::vector<std::string> raw_ids;
        bool saw_group = false;
        std::size_t pos = anchor;
        while ((pos = raw.find('[', pos)) != std::string::npos) {
            const std::size_t close = raw.find(']', pos);
            if (close == std::string::npos) break;
            saw_group = true;
            std::string inner = raw.substr(pos + 1, close - pos - 1);
            std::size_t token_start = 0;
            while (token_start <= inner.size()) {
                std::size_t comma = inner.find(',', token_start);
                if (comma == std::string::npos) comma = inner.size();
                const std::string token =
                    normalize_id_token(inner.substr(token_start, comma - token_start));
                if (!token.empty()) raw_ids.push_back(token);
                token_start = comma + 1;
            }
            pos = close + 1;
        }
        if (saw_group) {
            result.used_lenient_path = true;
            filter_ids(raw_ids, valid_ids, result.selected_ids, result.dropped_ids);
            return result;
        }
    }

    throw UnparseableError("no selection found in reply: " +
                           (raw.size() > 120 ? raw.substr(0, 120) + "…" : raw));
}

int parse_integer_reply(const std::string& raw) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(raw[i]))) {
            std::size_t start = i;
            if (start > 0 && raw[start - 1] == '-') --start;
            return std::stoi(raw.substr(start));
        }
    }
    throw UnparseableError("no integer in reply: " +
                           (raw.size() > 120 ? raw.substr(0, 120) + "…" : raw));
}

void BackendConfig::validate() const {
    if (temperature < 0.0 || temperature > 2.0) {
        throw ConfigError("temperature must lie in [0, 2]");
    }
    if (max_concurrent_requests < 1) {
        throw ConfigError("max_concurrent_requests must be >= 1");
    }
    if (max_retries < 0) {
        throw ConfigError("max_retries must be >= 0");
    }
    if (kind == BackendKind::Http && endpoint_url.empty()) {
        throw ConfigError("http backend needs an endpoint_url");
    }
}

GoldTable::GoldTable(const LabelSet& labels) {
    for (const auto& label : labels.all()) {
        values_[{label.query_id, label.doc_id}] = label.value;
    }
}

void GoldTable::set(const std::string& query_id, const std::string& doc_id, int value) {
    values_[{query_id, doc_id}] = value;
}

int GoldTable::value_of(const std::string& query_id, const std::string& doc_id) const {
    auto it = values_.find({query_id, doc_id});
    if (it == values_.end()) {
        throw MissingGoldError("no gold value for (" + query_id + ", " + doc_id + ")");
    }
    return it->second;
}

ScriptRule ScriptRule::oracle(std::shared_ptr<const GoldTable> gold) {
    ScriptRule rule;
    rule.kind = Kind::Oracle;
    rule.gold = std::move(gold);
    return rule;
}

ScriptRule ScriptRule::threshold_oracle(std::shared_ptr<const GoldTable> gold) {
    ScriptRule rule;
    rule.kind = Kind::ThresholdOracle;
    rule.gold = std::move(gold);
    return rule;
}

ScriptRule ScriptRule::adversarial(ScriptRule inner) {
    ScriptRule rule;
    rule.kind = Kind::Adversarial;
    rule.inner = std::make_shared<ScriptRule>(std::move(inner));
    return rule;
}

ScriptRule ScriptRule::fixed(std::map<std::string, std::string> replies,
                             std::string default_reply) {
    ScriptRule rule;
    rule.kind = Kind::Fixed;
    rule.fixed_replies = std::move(replies);
    rule.fixed_default = std::move(default_reply);
    return rule;
}

ScriptRule ScriptRule::never_select() { return fixed({}); }

std::string prompt_digest(const PromptSpec& prompt) { return sha256_hex(prompt.rendered_text); }

namespace {

// Structured decision of a scripted rule, rendered to text at the end.
struct ScriptDecision {
    std::vector<int> selected_tags;               // selection modes
    int grade = 0;                                // graded modes
    std::vector<int> ranked_tags;                 // listwise
    std::vector<std::vector<int>> segment_tags;   // segmentation
    std::string fixed_text;
    bool is_fixed = false;
};

int gold_for_tag(const PromptSpec& prompt, const GoldTable& gold, int tag) {
    return gold.value_of(prompt.query_id, prompt.doc_id_for_tag[static_cast<std::size_t>(tag - 1)]);
}

ScriptDecision evaluate_rule(const ScriptRule& rule, const PromptSpec& prompt) {
    ScriptDecision decision;
    const int tag_count = static_cast<int>(prompt.doc_id_for_tag.size());

    switch (rule.kind) {
        case ScriptRule::Kind::Fixed: {
            decision.is_fixed = true;
            auto it = rule.fixed_replies.find(prompt_digest(prompt));
            decision.fixed_text =
                it == rule.fixed_replies.end() ? rule.fixed_default : it->second;
            return decision;
        }
        case ScriptRule::Kind::Oracle:
        case ScriptRule::Kind::ThresholdOracle: {
            if (!rule.gold) throw MissingGoldError("oracle rule has no gold table");
            const bool threshold = rule.kind == ScriptRule::Kind::ThresholdOracle;
            switch (prompt.mode) {
                case PromptMode::UsefulnessCascade:
                    for (int tag = 1; tag <= tag_count; ++tag) {
                        const int value = gold_for_tag(prompt, *rule.gold, tag);
                        if (threshold ? value >= prompt.stage_k : value == prompt.stage_k) {
                            decision.selected_tags.push_back(tag);
                        }
                    }
                    return decision;
                case PromptMode::PointwiseUsefulness:
                case PromptMode::RelevancePointwise:
                    decision.grade = gold_for_tag(prompt, *rule.gold, 1);
                    return decision;
                case PromptMode::Pairwise: {
                    const int a = gold_for_tag(prompt, *rule.gold, 1);
                    const int b = gold_for_tag(prompt, *rule.gold, 2);
                    if (a > b) decision.selected_tags.push_back(1);
                    if (b > a) decision.selected_tags.push_back(2);
                    return decision;
                }
                case PromptMode::Listwise: {
                    std::vector<int> tags(static_cast<std::size_t>(tag_count));
                    for (int tag = 1; tag <= tag_count; ++tag)
                        tags[static_cast<std::size_t>(tag - 1)] = tag;
                    std::stable_sort(tags.begin(), tags.end(), [&](int x, int y) {
                        return gold_for_tag(prompt, *rule.gold, x) >
                               gold_for_tag(prompt, *rule.gold, y);
                    });
                    decision.ranked_tags = std::move(tags);
                    return decision;
                }
                case PromptMode::Segmentation: {
                    std::vector<int> current;
                    int current_value = 0;
                    for (int tag = 1; tag <= tag_count; ++tag) {
                        const int value = gold_for_tag(prompt, *rule.gold, tag);
                        if (!current.empty() && value != current_value) {
                            decision.segment_tags.push_back(current);
                            current.clear();
                        }
                        current.push_back(tag);
                        current_value = value;
                    }
                    if (!current.empty()) decision.segment_tags.push_back(current);
                    return decision;
                }
            }
            return decision;
        }
        case ScriptRule::Kind::Adversarial: {
            if (!rule.inner) throw ConfigError("adversarial rule has no inner rule");
            ScriptDecision inner = evaluate_rule(*rule.inner, prompt);
            if (inner.is_fixed) return inner;  // text replies pass through
            switch (prompt.mode) {
                case PromptMode::UsefulnessCascade:
                case PromptMode::Pairwise:
                    for (int tag = 1; tag <= tag_count; ++tag) {
                        if (std::find(inner.selected_tags.begin(), inner.selected_tags.end(),
                                      tag) == inner.selected_tags.end()) {
                            decision.selected_tags.push_back(tag);
                        }
                    }
                    return decision;
                case PromptMode::PointwiseUsefulness:
                case PromptMode::RelevancePointwise:
                    decision.grade =
                        prompt.scale_n > 0 ? prompt.scale_n + 1 - inner.grade : -inner.grade;
                    return decision;
                case PromptMode::Listwise:
                    decision.ranked_tags.assign(inner.ranked_tags.rbegin(),
                                                inner.ranked_tags.rend());
                    return decision;
                case PromptMode::Segmentation:
                    decision.segment_tags.assign(inner.segment_tags.rbegin(),
                                                 inner.segment_tags.rend());
                    return decision;
            }
            return decision;
        }
    }
    return decision;
}

std::string render_decision(const ScriptDecision& decision, const PromptSpec& prompt) {
    if (decision.is_fixed) return decision.fixed_text;
    switch (prompt.mode) {
        case PromptMode::UsefulnessCascade:
        case PromptMode::Pairwise: {
            json selected = json::array();
            for (int tag : decision.selected_tags) selected.push_back(std::to_string(tag));
            return json{{"thought", ""}, {"selected", selected}}.dump();
        }
        case PromptMode::PointwiseUsefulness:
        case PromptMode::RelevancePointwise:
            return std::to_string(decision.grade);
        case PromptMode::Listwise: {
            std::string out;
            for (std::size_t i = 0; i < decision.ranked_tags.size(); ++i) {
                if (i) out += ">";
                out += "[" + std::to_string(decision.ranked_tags[i]) + "]";
            }
            return out;
        }
        case PromptMode::Segmentation: {
            json segments = json::array();
            for (const auto& group : decision.segment_tags) {
                json tags = json::array();
                for (int tag : group) tags.push_back(std::to_string(tag));
                segments.push_back(tags);
            }
            return json{{"segments", segments}}.dump();
        }
    }
    return "";
}

}  // namespace

ScriptedBackend::ScriptedBackend(BackendConfig config, ScriptRule rule)
    : config_(std::move(config)), rule_(std::move(rule)) {
    config_.kind = BackendKind::Scripted;
    config_.validate();
}

std::string ScriptedBackend::complete(const PromptSpec& prompt) {
    return render_decision(evaluate_rule(rule_, prompt), prompt);
}

HttpBackend::HttpBackend(BackendConfig config) : config_(std::move(config)) {
    config_.kind = BackendKind::Http;
    config_.validate();

    std::string url = config_.endpoint_url;
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw ConfigError("endpoint_url must start with http:// (TLS termination is out of scope)");
    }
    url = url.substr(scheme.size());
    const auto slash = url.find('/');
    std::string hostport = slash == std::string::npos ? url : url.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : url.substr(slash);
    const auto colon = hostport.find(':');
    host_ = colon == std::string::npos ? hostport : hostport.substr(0, colon);
    port_ = colon == std::string::npos ? 80 : std::stoi(hostport.substr(colon + 1));

    if (!config_.api_key_env.empty()) {
        const char* key = std::getenv(config_.api_key_env.c_str());
        if (key == nullptr) {
            throw AuthError("environment variable " + config_.api_key_env + " is not set");
        }
        api_key_ = key;
    }
    in_flight_ = std::make_unique<std::counting_semaphore<>>(config_.max_concurrent_requests);
}

std::string HttpBackend::attempt_once(const PromptSpec& prompt) {
    httplib::Client client(host_, port_);
    const auto timeout_ms = static_cast<int>(config_.timeout_s * 1000);
    client.set_connection_timeout(0, timeout_ms * 1000);
    client.set_read_timeout(config_.timeout_s > 0 ? static_cast<time_t>(config_.timeout_s) : 30, 0);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const json body = {{"model", config_.model_name},
                       {"temperature", config_.temperature},
                       {"messages", json::array({json{{"role", "user"},
                                                      {"content", prompt.rendered_text}}})}};

    in_flight_->acquire();
    auto result = client.Post(path_, headers, body.dump(), "application/json");
    in_flight_->release();

    if (!result) {
        if (result.error() == httplib::Error::ConnectionTimeout ||
            result.error() == httplib::Error::Read) {
            throw TimeoutError("request timed out");
        }
        throw BackendExhaustedError("connection failed: " +
                                    std::string(httplib::to_string(result.error())));
    }
    if (result->status == 401 || result->status == 403) {
        throw AuthError("backend rejected credentials (HTTP " + std::to_string(result->status) +
                        ")");
    }
    if (result->status != 200) {
        throw BackendExhaustedError("HTTP " + std::to_string(result->status));
    }

    json reply = json::parse(result->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty()) {
        throw BackendExhaustedError("malformed completion body");
    }
    const json& message = reply["choices"][0];
    if (message.contains("message") && message["message"].contains("content") &&
        message["message"]["content"].is_string()) {
        return message["message"]["content"].get<std::string>();
    }
    if (message.contains("text") && message["text"].is_string()) {
        return message["text"].get<std::string>();
    }
    throw BackendExhaustedError("completion reply has no message content");
}

std::string HttpBackend::complete(const PromptSpec& prompt) {
    std::string last_error;
    bool last_was_timeout = false;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double delay_s = config_.backoff_base_s * static_cast<double>(1 << (attempt - 1));
            std::this_thread::sleep_for(std::chrono::duration<double>(delay_s));
        }
        try {
            return attempt_once(prompt);
        } catch (const AuthError&) {
            throw;  // non-transient
        } catch (const TimeoutError& e) {
            last_error = e.what();
            last_was_timeout = true;
        } catch (const Error& e) {
            last_error = e.what();
            last_was_timeout = false;
        }
    }
    const std::string message = "backend exhausted after " + std::to_string(config_.max_retries) +
                                " retries: " + last_error;
    if (last_was_timeout) throw TimeoutError(message);
    throw BackendExhaustedError(message);
}

VoterDispatchBackend::VoterDispatchBackend(BackendConfig config,
                                           std::vector<std::shared_ptr<Backend>> voters)
    : config_(std::move(config)), voters_(std::move(voters)) {
    if (voters_.empty()) throw ConfigError("voter dispatch needs at least one backend");
}

std::string VoterDispatchBackend::complete(const PromptSpec& prompt) {
    const std::size_t index =
        static_cast<std::size_t>(std::max(prompt.voter_j - 1, 0)) % voters_.size();
    return voters_[index]->complete(prompt);
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
    std::ifstream in(file_);
    if (!in) return;  // created lazily on first put
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj = json::parse(line, nullptr, false);
        if (obj.is_discarded() || !obj.is_object() || !obj.contains("key") ||
            !obj["key"].is_string() || !obj.contains("reply") || !obj["reply"].is_string()) {
            const std::string key = obj.is_object() && obj.contains("key") && obj["key"].is_string()
                                        ? obj["key"].get<std::string>()
                                        : "line " + std::to_string(line_no);
            throw CacheIoError(key, "corrupted cache line in " + file_.string());
        }
        entries_[obj["key"].get<std::string>()] = obj["reply"].get<std::string>();
    }
}

std::string ResponseCache::key_for(const BackendConfig& config, const std::string& rendered_text) {
    char temp[32];
    std::snprintf(temp, sizeof(temp), "%.17g", config.temperature);
    const std::string canonical = std::string(config.kind == BackendKind::Http ? "http" : "scripted") +
                                  "\x1f" + config.model_name + "\x1f" + temp + "\x1f" + rendered_text;
    return sha256_hex(canonical);
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find(key);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

void ResponseCache::put(const std::string& key, const std::string& reply) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto [it, inserted] = entries_.emplace(key, reply);
    if (!inserted) return;
    std::ofstream out(file_, std::ios::app);
    if (!out) throw CacheIoError(key, "cannot append to " + file_.string());
    out << json{{"key", key}, {"reply", reply}}.dump() << '\n';
}

std::size_t ResponseCache::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

JudgeClient::JudgeClient(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)), cache_(std::move(cache)) {
    if (!backend_) throw ConfigError("judge client needs a backend");
}

std::string JudgeClient::complete(const PromptSpec& prompt) {
    if (cache_) {
        const std::string key = ResponseCache::key_for(backend_->config(), prompt.rendered_text);
        if (auto hit = cache_->get(key)) {
            ++cache_hits_;
            return *hit;
        }
        ++backend_calls_;
        std::string reply = backend_->complete(prompt);
        cache_->put(key, reply);
        return reply;
    }
    ++backend_calls_;
    return backend_->complete(prompt);
}

PromptSpec JudgeClient::reask_prompt(const PromptSpec& prompt, const std::string& suffix) const {
    PromptSpec again = prompt;
    again.rendered_text += "\n\n" + suffix;
    return again;
}

ParsedSelection JudgeClient::select(const PromptSpec& prompt) {
    const std::string raw = complete(prompt);
    try {
        return parse_selection(raw, prompt.valid_doc_ids);
    } catch (const UnparseableError&) {
    }
    const PromptSpec again = reask_prompt(prompt, "Reply with only the JSON object.");
    const std::string raw2 = complete(again);
    try {
        return parse_selection(raw2, prompt.valid_doc_ids);
    } catch (const UnparseableError&) {
        // One bad reply must not abort a corpus run: score it as "nothing selected".
        ++anomalies_;
        ParsedSelection empty;
        empty.raw_text = raw2;
        return empty;
    }
}

int JudgeClient::integer_grade(const PromptSpec& prompt, const OrdinalScale& scale) {
    const auto clamp_grade = [&](int value) {
        const int clamped = std::clamp(value, 1, scale.n);
        if (clamped != value) ++clamped_grades_;
        return clamped;
    };
    const std::string raw = complete(prompt);
    try {
        return clamp_grade(parse_integer_reply(raw));
    } catch (const UnparseableError&) {
    }
    const PromptSpec again = reask_prompt(prompt, "Reply with only the integer grade.");
    return clamp_grade(parse_integer_reply(complete(again)));
}

std::vector<std::string> JudgeClient::ranking(const PromptSpec& prompt) {
    const std::string raw = complete(prompt);
    try {
        return parse_ranking_reply(raw, prompt.valid_doc_ids);
    } catch (const UnparseableError&) {
    }
    const PromptSpec again = reask_prompt(prompt, "Reply with only the ranking.");
    return parse_ranking_reply(complete(again), prompt.valid_doc_ids);
}

ClientCounters JudgeClient::counters() const {
    ClientCounters counters;
    counters.backend_calls = backend_calls_.load();
    counters.cache_hits = cache_hits_.load();
    counters.anomalies = anomalies_.load();
    counters.clamped_grades = clamped_grades_.load();
    counters.repaired_rankings = repaired_rankings_.load();
    return counters;
}

void JudgeClient::reset_counters() {
    backend_calls_ = 0;
    cache_hits_ = 0;
    anomalies_ = 0;
    clamped_grades_ = 0;
    repaired_rankings_ = 0;
}

}  // namespace clue
