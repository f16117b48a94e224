#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "clue/labels.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

namespace clue {

/// Corpus-level counts in the shape of the usual dataset-statistics table.
struct CorpusStats {
    std::size_t num_tasks = 0;  // distinct non-empty (background, goal) pairs
    std::size_t num_users = 0;
    std::size_t num_queries = 0;
    std::size_t num_docs = 0;
    std::size_t num_clicked_docs = 0;
    double clicks_per_query = 0.0;  // num_clicked_docs / num_queries, 0 if no queries
};

/// Side counters produced while parsing.
struct ParseStats {
    std::size_t sessions = 0;
    std::size_t duplicate_clicks_dropped = 0;
};

/// Parses one session per JSONL line and validates every structural invariant.
/// Duplicate clicks on the same (query, doc) are dropped (first kept) and the
/// remaining click_order values renumbered to stay contiguous.
/// Throws ParseError (malformed JSON, with line number) or SchemaError (missing
/// or ill-typed field, with field path).
std::vector<SearchSession> parse_sessions(std::istream& in, ParseStats* stats = nullptr);
std::vector<SearchSession> parse_sessions_file(const std::string& path, ParseStats* stats = nullptr);

/// Inverse of parse_sessions; writes one session per line. Round-trips exactly.
void write_sessions(std::ostream& out, const std::vector<SearchSession>& sessions);
std::string session_to_json_line(const SearchSession& session);

/// Label JSONL: {"query_id","doc_id","source","value","scale_n"} per line.
/// Lines may carry extra keys (e.g. "strategy"); they are ignored on read.
LabelSet parse_labels(std::istream& in);
LabelSet parse_labels_file(const std::string& path);
void write_labels(std::ostream& out, const LabelSet& labels, const std::string& strategy = "");
void write_labels_file(const std::string& path, const LabelSet& labels,
                       const std::string& strategy = "");

CorpusStats corpus_stats(const std::vector<SearchSession>& sessions);

/// Shifts a raw ordinal value whose range starts at raw_min onto the internal
/// 1..n convention: returns raw - raw_min + 1. Throws OutOfRangeError when raw
/// falls outside [raw_min, raw_min + n - 1].
int normalize_label_value(int raw, int raw_min, const OrdinalScale& scale);

}  // namespace clue
