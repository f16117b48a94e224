#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace clue {

/// Milliseconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

/// Parses an RFC 3339 timestamp ("2024-07-01T12:00:00.250Z", offsets allowed).
/// Throws SchemaError on malformed input; `field` names the offending location.
Timestamp parse_rfc3339(const std::string& text, const std::string& field = "timestamp");

/// Formats as UTC with millisecond precision; round-trips through parse_rfc3339.
std::string format_rfc3339(Timestamp ts);

struct DocRecord {
    std::string doc_id;
    int rank = 1;  // 1-based SERP position
    std::string url;
    std::string title;
    std::string content_text;
};

struct ClickEvent {
    std::string doc_id;
    int click_order = 1;  // 1-based position in the query's click sequence
    Timestamp click_time = 0;
    double dwell_time_seconds = 0.0;
    bool is_session_end = false;  // this click is the final logged action of the session
};

struct QueryRecord {
    std::string query_id;
    std::string query_string_text;
    Timestamp issue_time = 0;
    std::vector<DocRecord> results;  // at most 10 per SERP, ranks contiguous 1..|results|
    std::vector<ClickEvent> clicks;  // ordered by click_order
    std::optional<int> satisfaction;          // query-level ordinal rating
    std::optional<int> satisfaction_scale_n;  // arity of the rating scale
};

struct SearchSession {
    std::string session_id;
    std::string user_id;
    std::string task_background_text;
    std::string task_goal_text;
    std::vector<QueryRecord> queries;  // issue times non-decreasing
};

/// A clicked document paired with its click event. Pointers refer into the
/// QueryRecord passed to clicked_documents and share its lifetime.
struct ClickedDoc {
    const DocRecord* doc = nullptr;
    const ClickEvent* click = nullptr;
};

/// Clicked documents of a query in click order. Empty list when nothing was clicked.
/// Throws DanglingClickError if a click references a doc_id absent from results.
std::vector<ClickedDoc> clicked_documents(const QueryRecord& query);

/// Checks every structural invariant of a session (rank contiguity, click order
/// contiguity, click/doc referential integrity, doc_id uniqueness, non-decreasing
/// issue times). Throws SchemaError or DanglingClickError; `path` prefixes messages.
void validate_session(const SearchSession& session, const std::string& path = "session");

}  // namespace clue
