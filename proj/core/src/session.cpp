#include "clue/session.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "clue/error.hpp"

namespace clue {

namespace {

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yr = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

bool read_digits(const std::string& s, std::size_t pos, std::size_t count, int& out) {
    if (pos + count > s.size()) return false;
    int value = 0;
    for (std::size_t i = 0; i < count; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        value = value * 10 + (c - '0');
    }
    out = value;
    return true;
}

}  // namespace

Timestamp parse_rfc3339(const std::string& text, const std::string& field) {
    const auto fail = [&](const char* why) -> Timestamp {
        throw SchemaError(field, std::string(why) + " in '" + text + "'");
    };

    int year, month, day, hour, minute, second;
    if (!read_digits(text, 0, 4, year) || text.size() < 20) return fail("bad RFC3339 timestamp");
    if (text[4] != '-' || !read_digits(text, 5, 2, month)) return fail("bad month");
    if (text[7] != '-' || !read_digits(text, 8, 2, day)) return fail("bad day");
    if (text[10] != 'T' && text[10] != 't' && text[10] != ' ') return fail("missing 'T'");
    if (!read_digits(text, 11, 2, hour) || text[13] != ':') return fail("bad hour");
    if (!read_digits(text, 14, 2, minute) || text[16] != ':') return fail("bad minute");
    if (!read_digits(text, 17, 2, second)) return fail("bad second");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 60)
        return fail("field out of range");

    std::size_t pos = 19;
    std::int64_t millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        std::int64_t frac = 0;
        int digits = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            if (digits < 3) frac = frac * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return fail("empty fraction");
        while (digits < 3) {
            frac *= 10;
            ++digits;
        }
        millis = frac;
    }

    std::int64_t offset_min = 0;
    if (pos >= text.size()) return fail("missing timezone");
    const char tz = text[pos];
    if (tz == 'Z' || tz == 'z') {
        ++pos;
    } else if (tz == '+' || tz == '-') {
        int oh, om;
        if (!read_digits(text, pos + 1, 2, oh) || pos + 3 >= text.size() || text[pos + 3] != ':' ||
            !read_digits(text, pos + 4, 2, om))
            return fail("bad timezone offset");
        offset_min = oh * 60 + om;
        if (tz == '-') offset_min = -offset_min;
        pos += 6;
    } else {
        return fail("bad timezone");
    }
    if (pos != text.size()) return fail("trailing characters");

    const std::int64_t days = days_from_civil(year, month, day);
    std::int64_t secs = days * 86400 + hour * 3600 + minute * 60 + second;
    secs -= offset_min * 60;
    return secs * 1000 + millis;
}

std::string format_rfc3339(Timestamp ts) {
    std::int64_t millis = ts % 1000;
    std::int64_t secs = ts / 1000;
    if (millis < 0) {
        millis += 1000;
        secs -= 1;
    }
    std::int64_t days = secs / 86400;
    std::int64_t sod = secs % 86400;
    if (sod < 0) {
        sod += 86400;
        days -= 1;
    }
    int y, m, d;
    civil_from_days(days, y, m, d);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", y, m, d,
                  static_cast<int>(sod / 3600), static_cast<int>((sod % 3600) / 60),
                  static_cast<int>(sod % 60), static_cast<int>(millis));
    return buf;
}

std::vector<ClickedDoc> clicked_documents(const QueryRecord& query) {
    std::unordered_map<std::string, const DocRecord*> by_id;
    by_id.reserve(query.results.size());
    for (const auto& doc : query.results) {
        by_id.emplace(doc.doc_id, &doc);
    }

    std::vector<ClickedDoc> out;
    out.reserve(query.clicks.size());
    for (const auto& click : query.clicks) {
        auto it = by_id.find(click.doc_id);
        if (it == by_id.end()) {
            throw DanglingClickError("query " + query.query_id + ": click references unknown doc '" +
                                     click.doc_id + "'");
        }
        out.push_back(ClickedDoc{it->second, &click});
    }
    std::stable_sort(out.begin(), out.end(), [](const ClickedDoc& a, const ClickedDoc& b) {
        return a.click->click_order < b.click->click_order;
    });
    return out;
}

void validate_session(const SearchSession& session, const std::string& path) {
    Timestamp prev_issue = std::numeric_limits<Timestamp>::min();
    for (std::size_t qi = 0; qi < session.queries.size(); ++qi) {
        const auto& query = session.queries[qi];
        const std::string qpath = path + ".queries[" + std::to_string(qi) + "]";

        if (query.issue_time < prev_issue) {
            throw SchemaError(qpath + ".issue_time", "query issue times must be non-decreasing");
        }
        prev_issue = query.issue_time;

        if (query.results.size() > 10) {
            throw SchemaError(qpath + ".results", "more than 10 results on one SERP");
        }

        std::unordered_set<std::string> doc_ids;
        std::vector<bool> rank_seen(query.results.size(), false);
        for (std::size_t di = 0; di < query.results.size(); ++di) {
            const auto& doc = query.results[di];
            const std::string dpath = qpath + ".results[" + std::to_string(di) + "]";
            if (!doc_ids.insert(doc.doc_id).second) {
                throw SchemaError(dpath + ".doc_id", "duplicate doc_id '" + doc.doc_id + "'");
            }
            if (doc.rank < 1 || doc.rank > static_cast<int>(query.results.size())) {
                throw SchemaError(dpath + ".rank", "ranks must form a contiguous 1..N sequence");
            }
            if (rank_seen[static_cast<std::size_t>(doc.rank - 1)]) {
                throw SchemaError(dpath + ".rank", "duplicate rank " + std::to_string(doc.rank));
            }
            rank_seen[static_cast<std::size_t>(doc.rank - 1)] = true;
        }

        std::vector<bool> order_seen(query.clicks.size(), false);
        std::unordered_set<std::string> clicked_ids;
        for (std::size_t ci = 0; ci < query.clicks.size(); ++ci) {
            const auto& click = query.clicks[ci];
            const std::string cpath = qpath + ".clicks[" + std::to_string(ci) + "]";
            if (!doc_ids.count(click.doc_id)) {
                throw DanglingClickError(cpath + ".doc_id: click references unknown doc '" +
                                         click.doc_id + "'");
            }
            if (!clicked_ids.insert(click.doc_id).second) {
                throw SchemaError(cpath + ".doc_id",
                                  "duplicate click on doc '" + click.doc_id + "'");
            }
            if (click.click_order < 1 || click.click_order > static_cast<int>(query.clicks.size())) {
                throw SchemaError(cpath + ".click_order",
                                  "click_order values must be 1..|clicks| without gaps");
            }
            if (order_seen[static_cast<std::size_t>(click.click_order - 1)]) {
                throw SchemaError(cpath + ".click_order",
                                  "duplicate click_order " + std::to_string(click.click_order));
            }
            order_seen[static_cast<std::size_t>(click.click_order - 1)] = true;
            if (click.dwell_time_seconds < 0.0) {
                throw SchemaError(cpath + ".dwell_time_seconds", "dwell time must be >= 0");
            }
        }

        if (query.satisfaction) {
            const int scale_n = query.satisfaction_scale_n.value_or(0);
            if (scale_n < 2) {
                throw SchemaError(qpath + ".satisfaction_scale", "satisfaction needs a scale >= 2");
            }
            if (*query.satisfaction < 1 || *query.satisfaction > scale_n) {
                throw SchemaError(qpath + ".satisfaction", "satisfaction outside [1, scale]");
            }
        }
    }
}

}  // namespace clue
