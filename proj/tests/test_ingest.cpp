#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "clue/error.hpp"
#include "clue/features.hpp"
#include "clue/log_io.hpp"

#include "support/fixtures.hpp"

using namespace clue;

namespace {

std::string valid_line() {
    return R"({"session_id":"s1","user_id":"u1","task_background_text":"bg","task_goal_text":"goal",)"
           R"("queries":[{"query_id":"q1","query_string_text":"test query","issue_time":"2024-07-01T10:00:00Z",)"
           R"("satisfaction":3,"satisfaction_scale":5,)"
           R"("results":[{"doc_id":"d1","rank":1,"url":"https://x/1","title":"t1","content_text":"c1"},)"
           R"({"doc_id":"d2","rank":2,"url":"https://x/2","title":"t2","content_text":"c2"}],)"
           R"("clicks":[{"doc_id":"d1","click_order":1,"click_time":"2024-07-01T10:00:05Z","dwell_time_seconds":8.5,"is_session_end":false},)"
           R"({"doc_id":"d2","click_order":2,"click_time":"2024-07-01T10:00:20Z","dwell_time_seconds":3.0,"is_session_end":true}]}]})";
}

}  // namespace

TEST_CASE("parse_sessions maps one valid line onto one session") {
    std::istringstream in(valid_line());
    const auto sessions = parse_sessions(in);
    REQUIRE(sessions.size() == 1);
    REQUIRE(sessions[0].queries.size() == 1);
    const auto& query = sessions[0].queries[0];
    CHECK(query.clicks.size() == 2);
    CHECK(query.satisfaction == 3);
    CHECK(query.results[1].title == "t2");
}

TEST_CASE("parse_sessions on empty input returns no sessions") {
    std::istringstream in("");
    CHECK(parse_sessions(in).empty());
}

TEST_CASE("parse_sessions reports the missing field path") {
    std::string line = valid_line();
    const auto pos = line.find("\"query_string_text\":\"test query\",");
    line.erase(pos, std::string("\"query_string_text\":\"test query\",").size());
    std::istringstream in(line);
    try {
        parse_sessions(in);
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(e.field_path() == "session.queries[0].query_string_text");
    }
}

TEST_CASE("parse_sessions reports the malformed line number") {
    std::istringstream in(valid_line() + "\n{not json\n");
    try {
        parse_sessions(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("duplicate clicks keep the first event and stay contiguous") {
    std::string line = valid_line();
    // Duplicate click on d1 with order 3 — dropped, orders renumbered.
    const std::string extra =
        R"(,{"doc_id":"d1","click_order":3,"click_time":"2024-07-01T10:00:30Z","dwell_time_seconds":9.0,"is_session_end":false})";
    const auto pos = line.rfind("]}]}");
    line.insert(pos, extra);

    std::istringstream in(line);
    ParseStats stats;
    const auto sessions = parse_sessions(in, &stats);
    CHECK(stats.duplicate_clicks_dropped == 1);
    const auto& clicks = sessions[0].queries[0].clicks;
    REQUIRE(clicks.size() == 2);
    CHECK(clicks[0].doc_id == "d1");
    CHECK(clicks[0].dwell_time_seconds == doctest::Approx(8.5));
    CHECK(clicks[1].click_order == 2);
}

TEST_CASE("sessions round-trip through serialize + parse") {
    const SearchSession session = test::two_click_session();
    std::ostringstream out;
    write_sessions(out, {session});
    std::istringstream in(out.str());
    const auto parsed = parse_sessions(in);
    REQUIRE(parsed.size() == 1);
    // Byte-identical re-serialization is the structural-equality check.
    std::ostringstream out2;
    write_sessions(out2, parsed);
    CHECK(out.str() == out2.str());
}

TEST_CASE("labels round-trip and tolerate a strategy field") {
    LabelSet labels = test::label_set({
        UsefulnessLabel{"q1", "d1", LabelSource::LlmUsefulness, 4, 4},
        UsefulnessLabel{"q1", "d2", LabelSource::LlmUsefulness, 1, 4},
    });
    std::ostringstream out;
    write_labels(out, labels, "cascade");
    std::istringstream in(out.str());
    const LabelSet parsed = parse_labels(in);
    CHECK(parsed.size() == 2);
    CHECK(parsed.find("q1", "d1", LabelSource::LlmUsefulness)->value == 4);
}

TEST_CASE("extract_prompt_features on the two-click fixture") {
    const SearchSession session = test::two_click_session();
    const auto& query = session.queries.front();

    const FeatureBundle first = extract_prompt_features(query, query.clicks[0], session);
    CHECK(first.query_total_click_number == 2);
    CHECK(first.query_clicked_ranks_list == std::vector<int>{3, 7});
    CHECK(first.query_max_clicked_rank == 7);
    CHECK(first.avg_doc_dwell_time_in_query == doctest::Approx(21.0));
    CHECK(first.doc_click_order == 1);
    CHECK(first.doc_dwell_time == doctest::Approx(30.0));
    CHECK(first.session_end == false);
    CHECK(first.task_description_text ==
          "You are researching local history. Find two reliable sources about the old town hall.");

    const FeatureBundle second = extract_prompt_features(query, query.clicks[1], session);
    CHECK(second.session_end == true);
    CHECK(second.doc_click_order == 2);
}

TEST_CASE("extract_prompt_features on a single click at rank 1") {
    SearchSession session = test::two_click_session();
    auto& query = session.queries.front();
    query.clicks.clear();
    query.clicks.push_back(test::make_click("d1", 1, query.issue_time + 2000, 5.0));

    const FeatureBundle bundle = extract_prompt_features(query, query.clicks[0], session);
    CHECK(bundle.query_total_click_number == 1);
    CHECK(bundle.query_clicked_ranks_list == std::vector<int>{1});
    CHECK(bundle.query_max_clicked_rank == 1);
    CHECK(bundle.avg_doc_dwell_time_in_query == doctest::Approx(5.0));
}

TEST_CASE("extract_prompt_features is pure") {
    const SearchSession session = test::two_click_session();
    const auto& query = session.queries.front();
    const FeatureBundle a = extract_prompt_features(query, query.clicks[0], session);
    const FeatureBundle b = extract_prompt_features(query, query.clicks[0], session);
    CHECK(a.doc_content_text == b.doc_content_text);
    CHECK(a.query_clicked_ranks_list == b.query_clicked_ranks_list);
    CHECK(a.avg_doc_dwell_time_in_query == b.avg_doc_dwell_time_in_query);
}

TEST_CASE("extract_prompt_features rejects a click from another query") {
    const SearchSession session = test::two_click_session();
    const auto& query = session.queries.front();
    const ClickEvent foreign = test::make_click("nope", 1, query.issue_time, 1.0);
    CHECK_THROWS_AS(extract_prompt_features(query, foreign, session), DanglingClickError);
}

TEST_CASE("behavior vector encodes the degenerate zero-click query") {
    SearchSession session = test::two_click_session();
    session.queries.front().clicks.clear();
    const BehaviorVector v = extract_behavior_vector(session.queries.front(), session);
    CHECK(v.num_clicks == 0.0);
    CHECK(v.time_to_first_click_s == 0.0);
    CHECK(v.avg_click_dwell_s == 0.0);
    CHECK(v.max_clicked_rank == 0.0);
}

TEST_CASE("behavior vector flags a single-query session as last") {
    const SearchSession session = test::two_click_session();
    const BehaviorVector v = extract_behavior_vector(session.queries.front(), session);
    CHECK(v.num_queries_in_session == 1.0);
    CHECK(v.is_last_query_in_session == 1.0);
}

TEST_CASE("behavior vector dwell aggregates on the two-click fixture") {
    const SearchSession session = test::two_click_session();
    const BehaviorVector v = extract_behavior_vector(session.queries.front(), session);
    CHECK(v.avg_click_dwell_s == doctest::Approx(21.0));
    CHECK(v.max_click_dwell_s == doctest::Approx(30.0));
    CHECK(v.num_clicks == 2.0);
    CHECK(v.time_to_first_click_s == doctest::Approx(5.0));
    CHECK(v.max_clicked_rank == 7.0);
    // All ten features present and finite.
    for (double value : v.values()) {
        CHECK(std::isfinite(value));
    }
    CHECK(BehaviorVector::feature_names().size() == 10);
}

TEST_CASE("corpus_stats matches the 935-query / 1512-click shape") {
    // 935 queries, 1512 clicked docs: the ratio reports 1.6 at one decimal.
    std::vector<SearchSession> sessions;
    int clicks_left = 1512;
    for (int qi = 0; qi < 935; ++qi) {
        SearchSession session;
        session.session_id = "s" + std::to_string(qi);
        session.user_id = "u" + std::to_string(qi % 25);
        session.task_background_text = "task " + std::to_string(qi % 9);
        session.task_goal_text = "goal";
        QueryRecord query;
        query.query_id = "q" + std::to_string(qi);
        query.query_string_text = "q";
        query.issue_time = 0;
        const int clicks_here = std::min(clicks_left, (qi % 3 == 0) ? 2 : ((qi % 3 == 1) ? 1 : 2));
        for (int rank = 1; rank <= 3; ++rank) {
            query.results.push_back(test::make_doc("d" + std::to_string(rank), rank));
        }
        for (int c = 0; c < clicks_here; ++c) {
            query.clicks.push_back(
                test::make_click("d" + std::to_string(c + 1), c + 1, 1000 * (c + 1), 4.0));
        }
        clicks_left -= clicks_here;
        session.queries.push_back(std::move(query));
        sessions.push_back(std::move(session));
    }
    REQUIRE(clicks_left == 0);

    const CorpusStats stats = corpus_stats(sessions);
    CHECK(stats.num_queries == 935);
    CHECK(stats.num_clicked_docs == 1512);
    CHECK(stats.num_tasks == 9);
    CHECK(stats.num_users == 25);
    const double rounded = std::round(stats.clicks_per_query * 10.0) / 10.0;
    CHECK(rounded == doctest::Approx(1.6));
}

TEST_CASE("corpus_stats of an empty corpus is all zeros") {
    const CorpusStats stats = corpus_stats({});
    CHECK(stats.num_queries == 0);
    CHECK(stats.num_clicked_docs == 0);
    CHECK(stats.clicks_per_query == 0.0);
}

TEST_CASE("corpus_stats of one query with two clicks") {
    const SearchSession session = test::two_click_session();
    const CorpusStats stats = corpus_stats({session});
    CHECK(stats.num_queries == 1);
    CHECK(stats.num_clicked_docs == 2);
    CHECK(stats.clicks_per_query == doctest::Approx(2.0));
}

TEST_CASE("corpus_stats counts are additive over disjoint corpora") {
    SearchSession a = test::two_click_session();
    SearchSession b = test::two_click_session();
    b.session_id = "s2";
    b.user_id = "u2";
    b.task_background_text = "different";
    b.queries[0].query_id = "q2";

    const CorpusStats whole = corpus_stats({a, b});
    const CorpusStats first = corpus_stats({a});
    const CorpusStats second = corpus_stats({b});
    CHECK(whole.num_queries == first.num_queries + second.num_queries);
    CHECK(whole.num_docs == first.num_docs + second.num_docs);
    CHECK(whole.num_clicked_docs == first.num_clicked_docs + second.num_clicked_docs);
    CHECK(whole.num_users == first.num_users + second.num_users);
    CHECK(whole.num_tasks == first.num_tasks + second.num_tasks);
}

TEST_CASE("normalize_label_value shifts raw ranges onto 1..n") {
    const OrdinalScale scale = make_scale(4);
    CHECK(normalize_label_value(0, 0, scale) == 1);  // 0-based relevance onto 4 levels
    CHECK(normalize_label_value(4, 1, scale) == 4);  // identity when raw_min = 1
    CHECK_THROWS_AS(normalize_label_value(5, 0, scale), OutOfRangeError);
}
