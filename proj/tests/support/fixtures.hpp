#pragma once

// Shared hand-built fixtures for the unit suites.

#include <string>
#include <vector>

#include "clue/features.hpp"
#include "clue/labels.hpp"
#include "clue/session.hpp"

namespace clue::test {

inline DocRecord make_doc(const std::string& id, int rank, const std::string& content = "") {
    DocRecord doc;
    doc.doc_id = id;
    doc.rank = rank;
    doc.url = "https://example.org/" + id;
    doc.title = "title " + id;
    doc.content_text = content.empty() ? "content of " + id : content;
    return doc;
}

inline ClickEvent make_click(const std::string& doc_id, int order, Timestamp time, double dwell,
                             bool session_end = false) {
    ClickEvent click;
    click.doc_id = doc_id;
    click.click_order = order;
    click.click_time = time;
    click.dwell_time_seconds = dwell;
    click.is_session_end = session_end;
    return click;
}

// One query with 10 results; clicks on ranks 3 then 7 with dwells 30 s and 12 s.
inline SearchSession two_click_session() {
    SearchSession session;
    session.session_id = "s1";
    session.user_id = "u1";
    session.task_background_text = "You are researching local history.";
    session.task_goal_text = "Find two reliable sources about the old town hall.";

    QueryRecord query;
    query.query_id = "q1";
    query.query_string_text = "old town hall history";
    query.issue_time = parse_rfc3339("2024-07-01T10:00:00Z");
    for (int rank = 1; rank <= 10; ++rank) {
        query.results.push_back(make_doc("d" + std::to_string(rank), rank));
    }
    query.clicks.push_back(make_click("d3", 1, parse_rfc3339("2024-07-01T10:00:05Z"), 30.0));
    query.clicks.push_back(make_click("d7", 2, parse_rfc3339("2024-07-01T10:00:50Z"), 12.0, true));
    query.satisfaction = 4;
    query.satisfaction_scale_n = 5;
    session.queries.push_back(std::move(query));
    return session;
}

// Instances for the clicked docs of the first query of a session.
inline std::vector<JudgmentInstance> first_query_instances(const SearchSession& session) {
    return instances_for_query(session.queries.front(), session);
}

inline LabelSet label_set(const std::vector<UsefulnessLabel>& labels) {
    LabelSet set;
    for (const auto& label : labels) set.insert(label);
    return set;
}

}  // namespace clue::test
