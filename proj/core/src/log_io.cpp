#include "clue/log_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

#include "json.hpp"

#include "clue/error.hpp"

namespace clue {

namespace {

using nlohmann::json;

const json& require(const json& obj, const char* key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw SchemaError(path + "." + key, "missing field");
    }
    return *it;
}

std::string require_string(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_string()) throw SchemaError(path + "." + key, "expected string");
    return v.get<std::string>();
}

int require_int(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number_integer()) throw SchemaError(path + "." + key, "expected integer");
    return v.get<int>();
}

double require_number(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_number()) throw SchemaError(path + "." + key, "expected number");
    return v.get<double>();
}

bool require_bool(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_boolean()) throw SchemaError(path + "." + key, "expected boolean");
    return v.get<bool>();
}

const json& require_array(const json& obj, const char* key, const std::string& path) {
    const json& v = require(obj, key, path);
    if (!v.is_array()) throw SchemaError(path + "." + key, "expected array");
    return v;
}

SearchSession session_from_json(const json& obj, std::size_t line, ParseStats* stats) {
    if (!obj.is_object()) throw SchemaError("session", "expected object");
    const std::string path = "session";

    SearchSession session;
    session.session_id = require_string(obj, "session_id", path);
    session.user_id = require_string(obj, "user_id", path);
    session.task_background_text = require_string(obj, "task_background_text", path);
    session.task_goal_text = require_string(obj, "task_goal_text", path);

    const json& queries = require_array(obj, "queries", path);
    for (std::size_t qi = 0; qi < queries.size(); ++qi) {
        const json& q = queries[qi];
        const std::string qpath = path + ".queries[" + std::to_string(qi) + "]";
        if (!q.is_object()) throw SchemaError(qpath, "expected object");

        QueryRecord query;
        query.query_id = require_string(q, "query_id", qpath);
        query.query_string_text = require_string(q, "query_string_text", qpath);
        query.issue_time =
            parse_rfc3339(require_string(q, "issue_time", qpath), qpath + ".issue_time");

        if (auto it = q.find("satisfaction"); it != q.end() && !it->is_null()) {
            if (!it->is_number_integer()) throw SchemaError(qpath + ".satisfaction", "expected integer");
            query.satisfaction = it->get<int>();
        }
        if (auto it = q.find("satisfaction_scale"); it != q.end() && !it->is_null()) {
            if (!it->is_number_integer())
                throw SchemaError(qpath + ".satisfaction_scale", "expected integer");
            query.satisfaction_scale_n = it->get<int>();
        }

        const json& results = require_array(q, "results", qpath);
        for (std::size_t di = 0; di < results.size(); ++di) {
            const json& r = results[di];
            const std::string dpath = qpath + ".results[" + std::to_string(di) + "]";
            if (!r.is_object()) throw SchemaError(dpath, "expected object");
            DocRecord doc;
            doc.doc_id = require_string(r, "doc_id", dpath);
            doc.rank = require_int(r, "rank", dpath);
            doc.url = require_string(r, "url", dpath);
            doc.title = require_string(r, "title", dpath);
            doc.content_text = require_string(r, "content_text", dpath);
            query.results.push_back(std::move(doc));
        }

        const json& clicks = require_array(q, "clicks", qpath);
        std::unordered_set<std::string> seen_docs;
        for (std::size_t ci = 0; ci < clicks.size(); ++ci) {
            const json& c = clicks[ci];
            const std::string cpath = qpath + ".clicks[" + std::to_string(ci) + "]";
            if (!c.is_object()) throw SchemaError(cpath, "expected object");
            ClickEvent click;
            click.doc_id = require_string(c, "doc_id", cpath);
            click.click_order = require_int(c, "click_order", cpath);
            click.click_time =
                parse_rfc3339(require_string(c, "click_time", cpath), cpath + ".click_time");
            click.dwell_time_seconds = require_number(c, "dwell_time_seconds", cpath);
            click.is_session_end = require_bool(c, "is_session_end", cpath);

            // Duplicate clicks on a document: first one wins.
            if (!seen_docs.insert(click.doc_id).second) {
                if (stats) ++stats->duplicate_clicks_dropped;
                continue;
            }
            query.clicks.push_back(std::move(click));
        }

        // Renumber click orders after de-duplication so they stay contiguous.
        std::stable_sort(query.clicks.begin(), query.clicks.end(),
                         [](const ClickEvent& a, const ClickEvent& b) {
                             return a.click_order < b.click_order;
                         });
        for (std::size_t ci = 0; ci < query.clicks.size(); ++ci) {
            query.clicks[ci].click_order = static_cast<int>(ci + 1);
        }

        session.queries.push_back(std::move(query));
    }

    validate_session(session, "line " + std::to_string(line) + " session");
    return session;
}

json session_to_json(const SearchSession& session) {
    json queries = json::array();
    for (const auto& query : session.queries) {
        json results = json::array();
        for (const auto& doc : query.results) {
            results.push_back({{"doc_id", doc.doc_id},
                               {"rank", doc.rank},
                               {"url", doc.url},
                               {"title", doc.title},
                               {"content_text", doc.content_text}});
        }
        json clicks = json::array();
        for (const auto& click : query.clicks) {
            clicks.push_back({{"doc_id", click.doc_id},
                              {"click_order", click.click_order},
                              {"click_time", format_rfc3339(click.click_time)},
                              {"dwell_time_seconds", click.dwell_time_seconds},
                              {"is_session_end", click.is_session_end}});
        }
        json q = {{"query_id", query.query_id},
                  {"query_string_text", query.query_string_text},
                  {"issue_time", format_rfc3339(query.issue_time)},
                  {"satisfaction", query.satisfaction ? json(*query.satisfaction) : json(nullptr)},
                  {"satisfaction_scale",
                   query.satisfaction_scale_n ? json(*query.satisfaction_scale_n) : json(nullptr)},
                  {"results", std::move(results)},
                  {"clicks", std::move(clicks)}};
        queries.push_back(std::move(q));
    }
    return {{"session_id", session.session_id},
            {"user_id", session.user_id},
            {"task_background_text", session.task_background_text},
            {"task_goal_text", session.task_goal_text},
            {"queries", std::move(queries)}};
}

}  // namespace

std::vector<SearchSession> parse_sessions(std::istream& in, ParseStats* stats) {
    std::vector<SearchSession> sessions;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        sessions.push_back(session_from_json(obj, line_no, stats));
        if (stats) ++stats->sessions;
    }
    return sessions;
}

std::vector<SearchSession> parse_sessions_file(const std::string& path, ParseStats* stats) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open sessions file '" + path + "'");
    return parse_sessions(in, stats);
}

std::string session_to_json_line(const SearchSession& session) {
    return session_to_json(session).dump();
}

void write_sessions(std::ostream& out, const std::vector<SearchSession>& sessions) {
    for (const auto& session : sessions) {
        out << session_to_json_line(session) << '\n';
    }
}

LabelSet parse_labels(std::istream& in) {
    LabelSet labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        const std::string path = "label";
        UsefulnessLabel label;
        label.query_id = require_string(obj, "query_id", path);
        label.doc_id = require_string(obj, "doc_id", path);
        label.source = label_source_from_string(require_string(obj, "source", path));
        label.value = require_int(obj, "value", path);
        label.scale_n = require_int(obj, "scale_n", path);
        labels.insert(std::move(label));
    }
    return labels;
}

LabelSet parse_labels_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open labels file '" + path + "'");
    return parse_labels(in);
}

void write_labels(std::ostream& out, const LabelSet& labels, const std::string& strategy) {
    for (const auto& label : labels.all()) {
        json obj = {{"query_id", label.query_id},
                    {"doc_id", label.doc_id},
                    {"source", std::string(to_string(label.source))},
                    {"value", label.value},
                    {"scale_n", label.scale_n}};
        if (!strategy.empty()) obj["strategy"] = strategy;
        out << obj.dump() << '\n';
    }
}

void write_labels_file(const std::string& path, const LabelSet& labels,
                       const std::string& strategy) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open labels file for writing '" + path + "'");
    write_labels(out, labels, strategy);
}

CorpusStats corpus_stats(const std::vector<SearchSession>& sessions) {
    CorpusStats stats;
    std::set<std::pair<std::string, std::string>> tasks;
    std::set<std::string> users;
    for (const auto& session : sessions) {
        users.insert(session.user_id);
        if (!session.task_background_text.empty() || !session.task_goal_text.empty()) {
            tasks.emplace(session.task_background_text, session.task_goal_text);
        }
        for (const auto& query : session.queries) {
            ++stats.num_queries;
            stats.num_docs += query.results.size();
            stats.num_clicked_docs += query.clicks.size();
        }
    }
    stats.num_tasks = tasks.size();
    stats.num_users = users.size();
    stats.clicks_per_query =
        stats.num_queries == 0
            ? 0.0
            : static_cast<double>(stats.num_clicked_docs) / static_cast<double>(stats.num_queries);
    return stats;
}

int normalize_label_value(int raw, int raw_min, const OrdinalScale& scale) {
    if (raw < raw_min || raw > raw_min + scale.n - 1) {
        throw OutOfRangeError("raw value " + std::to_string(raw) + " outside [" +
                              std::to_string(raw_min) + ", " + std::to_string(raw_min + scale.n - 1) +
                              "]");
    }
    return raw - raw_min + 1;
}

}  // namespace clue
