#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "clue/error.hpp"
#include "clue/labels.hpp"
#include "clue/scale.hpp"
#include "clue/session.hpp"

#include "support/fixtures.hpp"

using namespace clue;

TEST_CASE("make_scale defaults to C1..Cn") {
    const OrdinalScale scale = make_scale(4);
    CHECK(scale.n == 4);
    REQUIRE(scale.level_names.size() == 4);
    CHECK(scale.level_names[0] == "C1");
    CHECK(scale.level_names[3] == "C4");
    CHECK(scale.name_of(4) == "C4");
}

TEST_CASE("make_scale accepts a minimal binary scale with custom names") {
    const OrdinalScale scale = make_scale(2, std::vector<std::string>{"not useful", "useful"});
    CHECK(scale.n == 2);
    CHECK(scale.name_of(1) == "not useful");
    CHECK(scale.name_of(2) == "useful");
}

TEST_CASE("make_scale rejects out-of-range arity and name mismatches") {
    CHECK_THROWS_AS(make_scale(1), OutOfRangeError);
    CHECK_THROWS_AS(make_scale(11), OutOfRangeError);
    CHECK_THROWS_AS(make_scale(3, std::vector<std::string>{"a", "b"}), ArityMismatchError);
    CHECK_THROWS_AS(make_scale(4).name_of(5), OutOfRangeError);
}

TEST_CASE("label source round-trips through its string names") {
    for (LabelSource source :
         {LabelSource::UserUsefulness, LabelSource::ThirdPartyUsefulness,
          LabelSource::ThirdPartyRelevance, LabelSource::LlmUsefulness, LabelSource::LlmRelevance}) {
        CHECK(label_source_from_string(to_string(source)) == source);
    }
    CHECK_THROWS_AS(label_source_from_string("gold"), SchemaError);
}

TEST_CASE("clicked_documents returns pairs in click order") {
    const SearchSession session = test::two_click_session();
    const auto clicked = clicked_documents(session.queries.front());
    REQUIRE(clicked.size() == 2);
    CHECK(clicked[0].doc->rank == 3);
    CHECK(clicked[0].click->click_order == 1);
    CHECK(clicked[1].doc->rank == 7);
    CHECK(clicked[1].click->click_order == 2);
}

TEST_CASE("clicked_documents on a clickless query is empty") {
    SearchSession session = test::two_click_session();
    session.queries.front().clicks.clear();
    CHECK(clicked_documents(session.queries.front()).empty());
}

TEST_CASE("clicked_documents raises on a dangling click") {
    SearchSession session = test::two_click_session();
    session.queries.front().clicks.front().doc_id = "ghost";
    CHECK_THROWS_AS(clicked_documents(session.queries.front()), DanglingClickError);
}

TEST_CASE("clicked_documents size always matches the click list") {
    // |clicked_documents| = |clicks| and ordering equals click_order order.
    SearchSession session = test::two_click_session();
    auto& query = session.queries.front();
    for (int extra = 0; extra < 5; ++extra) {
        query.clicks.push_back(test::make_click("d" + std::to_string(extra + 1),
                                                static_cast<int>(query.clicks.size()) + 1,
                                                query.issue_time + 60000 + extra * 1000, 5.0));
        const auto clicked = clicked_documents(query);
        CHECK(clicked.size() == query.clicks.size());
        for (std::size_t i = 0; i < clicked.size(); ++i) {
            CHECK(clicked[i].click->click_order == static_cast<int>(i + 1));
        }
    }
}

TEST_CASE("label sets reject duplicate (query, doc, source) keys") {
    LabelSet set;
    set.insert(UsefulnessLabel{"q1", "d1", LabelSource::UserUsefulness, 3, 4});
    CHECK_THROWS_AS(set.insert(UsefulnessLabel{"q1", "d1", LabelSource::UserUsefulness, 2, 4}),
                    DuplicateLabelError);
    // Same key under a different source is a distinct label.
    set.insert(UsefulnessLabel{"q1", "d1", LabelSource::LlmUsefulness, 2, 4});
    CHECK(set.size() == 2);
    CHECK(set.find("q1", "d1", LabelSource::LlmUsefulness)->value == 2);
    CHECK(set.find_any("q1", "d1")->source == LabelSource::UserUsefulness);
}

TEST_CASE("label values must sit inside the scale") {
    LabelSet set;
    CHECK_THROWS_AS(set.insert(UsefulnessLabel{"q", "d", LabelSource::UserUsefulness, 5, 4}),
                    OutOfRangeError);
    CHECK_THROWS_AS(set.insert(UsefulnessLabel{"q", "d", LabelSource::UserUsefulness, 0, 4}),
                    OutOfRangeError);
}

TEST_CASE("validate_session catches rank gaps and bad click orders") {
    SearchSession session = test::two_click_session();
    session.queries.front().results[2].rank = 12;
    CHECK_THROWS_AS(validate_session(session), SchemaError);

    session = test::two_click_session();
    session.queries.front().clicks[1].click_order = 5;
    CHECK_THROWS_AS(validate_session(session), SchemaError);

    session = test::two_click_session();
    session.queries.front().clicks[1].dwell_time_seconds = -1.0;
    CHECK_THROWS_AS(validate_session(session), SchemaError);

    CHECK_NOTHROW(validate_session(test::two_click_session()));
}

TEST_CASE("timestamps round-trip at millisecond precision") {
    for (const char* text : {"2024-07-01T10:00:00.000Z", "1999-12-31T23:59:59.999Z",
                             "2024-02-29T00:00:00.250Z"}) {
        const Timestamp ts = parse_rfc3339(text);
        CHECK(format_rfc3339(ts) == text);
    }
    // Offsets normalize to UTC.
    CHECK(format_rfc3339(parse_rfc3339("2024-07-01T12:00:00+02:00")) == "2024-07-01T10:00:00.000Z");
    CHECK_THROWS_AS(parse_rfc3339("yesterday"), SchemaError);
}
