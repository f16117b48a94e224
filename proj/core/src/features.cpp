#include "clue/features.hpp"

#include <algorithm>

#include "clue/error.hpp"

namespace clue {

const std::array<const char*, 10>& BehaviorVector::feature_names() {
    static const std::array<const char*, 10> names = {
        "session_duration_s",   "num_queries_in_session", "query_length_chars",
        "query_dwell_time_s",   "num_clicks",             "time_to_first_click_s",
        "avg_click_dwell_s",    "max_click_dwell_s",      "max_clicked_rank",
        "is_last_query_in_session"};
    return names;
}

std::array<double, 10> BehaviorVector::values() const {
    return {session_duration_s,    num_queries_in_session, query_length_chars,
            query_dwell_time_s,    num_clicks,             time_to_first_click_s,
            avg_click_dwell_s,     max_click_dwell_s,      max_clicked_rank,
            is_last_query_in_session};
}

namespace {

std::string task_description(const SearchSession& session) {
    if (session.task_background_text.empty() && session.task_goal_text.empty()) return "";
    if (session.task_background_text.empty()) return session.task_goal_text;
    if (session.task_goal_text.empty()) return session.task_background_text;
    return session.task_background_text + " " + session.task_goal_text;
}

}  // namespace

FeatureBundle extract_prompt_features(const QueryRecord& query, const ClickEvent& click,
                                      const SearchSession& session) {
    const auto clicked = clicked_documents(query);

    FeatureBundle bundle;
    bundle.query_string_text = query.query_string_text;
    bundle.task_description_text = task_description(session);
    bundle.query_total_click_number = static_cast<int>(clicked.size());

    double dwell_sum = 0.0;
    const DocRecord* target_doc = nullptr;
    for (const auto& cd : clicked) {
        bundle.query_clicked_ranks_list.push_back(cd.doc->rank);
        dwell_sum += cd.click->dwell_time_seconds;
        if (cd.click->doc_id == click.doc_id && cd.click->click_order == click.click_order) {
            target_doc = cd.doc;
        }
    }
    if (target_doc == nullptr) {
        throw DanglingClickError("query " + query.query_id + ": click on '" + click.doc_id +
                                 "' does not belong to this query");
    }
    if (!bundle.query_clicked_ranks_list.empty()) {
        bundle.query_max_clicked_rank = *std::max_element(bundle.query_clicked_ranks_list.begin(),
                                                          bundle.query_clicked_ranks_list.end());
        bundle.avg_doc_dwell_time_in_query = dwell_sum / static_cast<double>(clicked.size());
    }

    bundle.doc_content_text = target_doc->content_text;
    bundle.doc_click_order = click.click_order;
    bundle.doc_dwell_time = click.dwell_time_seconds;
    bundle.session_end = click.is_session_end;
    return bundle;
}

std::vector<JudgmentInstance> instances_for_query(const QueryRecord& query,
                                                  const SearchSession& session) {
    std::vector<JudgmentInstance> out;
    for (const auto& cd : clicked_documents(query)) {
        JudgmentInstance instance;
        instance.query_ref = query.query_id;
        instance.doc_ref = cd.doc->doc_id;
        instance.features = extract_prompt_features(query, *cd.click, session);
        out.push_back(std::move(instance));
    }
    return out;
}

BehaviorVector extract_behavior_vector(const QueryRecord& query, const SearchSession& session) {
    BehaviorVector v;

    // Session span: first query issue to the last logged event.
    if (!session.queries.empty()) {
        const Timestamp start = session.queries.front().issue_time;
        Timestamp last = start;
        for (const auto& q : session.queries) {
            last = std::max(last, q.issue_time);
            for (const auto& c : q.clicks) {
                last = std::max(last, c.click_time +
                                          static_cast<Timestamp>(c.dwell_time_seconds * 1000.0));
            }
        }
        v.session_duration_s = static_cast<double>(last - start) / 1000.0;
    }
    v.num_queries_in_session = static_cast<double>(session.queries.size());
    v.query_length_chars = static_cast<double>(query.query_string_text.size());

    std::size_t index = session.queries.size();
    for (std::size_t i = 0; i < session.queries.size(); ++i) {
        if (session.queries[i].query_id == query.query_id) {
            index = i;
            break;
        }
    }
    const bool is_last = index + 1 >= session.queries.size();
    v.is_last_query_in_session = is_last ? 1.0 : 0.0;

    if (!is_last) {
        v.query_dwell_time_s =
            static_cast<double>(session.queries[index + 1].issue_time - query.issue_time) / 1000.0;
    } else if (!query.clicks.empty()) {
        // No next query; fall back to the span covered by this query's clicks.
        Timestamp last = query.issue_time;
        for (const auto& c : query.clicks) {
            last = std::max(last,
                            c.click_time + static_cast<Timestamp>(c.dwell_time_seconds * 1000.0));
        }
        v.query_dwell_time_s = static_cast<double>(last - query.issue_time) / 1000.0;
    }

    v.num_clicks = static_cast<double>(query.clicks.size());
    if (!query.clicks.empty()) {
        const auto clicked = clicked_documents(query);
        v.time_to_first_click_s =
            static_cast<double>(clicked.front().click->click_time - query.issue_time) / 1000.0;
        double sum = 0.0;
        for (const auto& cd : clicked) {
            sum += cd.click->dwell_time_seconds;
            v.max_click_dwell_s = std::max(v.max_click_dwell_s, cd.click->dwell_time_seconds);
            v.max_clicked_rank = std::max(v.max_clicked_rank, static_cast<double>(cd.doc->rank));
        }
        v.avg_click_dwell_s = sum / static_cast<double>(clicked.size());
    }
    return v;
}

}  // namespace clue
