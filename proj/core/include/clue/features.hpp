#pragma once

#include <array>
#include <string>
#include <vector>

#include "clue/session.hpp"

namespace clue {

/// The per-click feature bundle fed to the judge prompt: content factors,
/// query-level context factors, and per-click behavior factors.
struct FeatureBundle {
    std::string doc_content_text;
    std::string query_string_text;
    std::string task_description_text;
    int query_total_click_number = 0;
    std::vector<int> query_clicked_ranks_list;
    int query_max_clicked_rank = 0;        // 0 when the query has no clicks
    double avg_doc_dwell_time_in_query = 0.0;
    int doc_click_order = 0;
    double doc_dwell_time = 0.0;
    bool session_end = false;
};

/// One judgeable unit: a clicked document of a query plus its feature bundle.
struct JudgmentInstance {
    std::string query_ref;  // query_id
    std::string doc_ref;    // doc_id
    FeatureBundle features;
};

/// Query-level behavior features for satisfaction prediction. Degenerate values
/// (no clicks, single query) are encoded as 0, never NaN; is_last_query_in_session
/// doubles as the presence flag for the next-query dwell gap.
struct BehaviorVector {
    double session_duration_s = 0.0;
    double num_queries_in_session = 0.0;
    double query_length_chars = 0.0;
    double query_dwell_time_s = 0.0;
    double num_clicks = 0.0;
    double time_to_first_click_s = 0.0;
    double avg_click_dwell_s = 0.0;
    double max_click_dwell_s = 0.0;
    double max_clicked_rank = 0.0;
    double is_last_query_in_session = 0.0;

    static const std::array<const char*, 10>& feature_names();
    std::array<double, 10> values() const;
};

/// Builds the prompt feature bundle for one click of a query.
/// task_description_text is "<background> <goal>", or empty when the session has no task.
/// Throws DanglingClickError when the click does not belong to the query.
FeatureBundle extract_prompt_features(const QueryRecord& query, const ClickEvent& click,
                                      const SearchSession& session);

/// Judgment instances for every clicked document of a query, in click order.
std::vector<JudgmentInstance> instances_for_query(const QueryRecord& query,
                                                  const SearchSession& session);

/// Deterministic query-level behavior vector; degenerate inputs encode as zeros.
BehaviorVector extract_behavior_vector(const QueryRecord& query, const SearchSession& session);

}  // namespace clue
