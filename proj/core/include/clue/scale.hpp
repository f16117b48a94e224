#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace clue {

/// An ordered set of judgment levels C_1 < C_2 < ... < C_n. Level values are 1..n.
struct OrdinalScale {
    int n = 0;
    std::vector<std::string> level_names;

    /// Display name of a level. Throws OutOfRangeError for level outside [1, n].
    const std::string& name_of(int level) const;

    bool contains(int level) const { return level >= 1 && level <= n; }
};

/// Builds a validated scale. Default names are "C1".."Cn".
/// Throws OutOfRangeError unless 2 <= n <= 10, ArityMismatchError if names has wrong length.
OrdinalScale make_scale(int n, const std::optional<std::vector<std::string>>& names = std::nullopt);

/// Where a label came from (user feedback, third-party annotation, or an LLM judge).
enum class LabelSource {
    UserUsefulness,
    ThirdPartyUsefulness,
    ThirdPartyRelevance,
    LlmUsefulness,
    LlmRelevance,
};

std::string_view to_string(LabelSource source);

/// Inverse of to_string. Throws SchemaError on unknown names.
LabelSource label_source_from_string(std::string_view name);

}  // namespace clue
