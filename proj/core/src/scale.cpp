#include "clue/scale.hpp"

#include <string>

#include "clue/error.hpp"

namespace clue {

const std::string& OrdinalScale::name_of(int level) const {
    if (!contains(level)) {
        throw OutOfRangeError("level " + std::to_string(level) + " outside [1, " +
                              std::to_string(n) + "]");
    }
    return level_names[static_cast<std::size_t>(level - 1)];
}

OrdinalScale make_scale(int n, const std::optional<std::vector<std::string>>& names) {
    if (n < 2 || n > 10) {
        throw OutOfRangeError("scale arity " + std::to_string(n) + " outside [2, 10]");
    }
    OrdinalScale scale;
    scale.n = n;
    if (names) {
        if (static_cast<int>(names->size()) != n) {
            throw ArityMismatchError("expected " + std::to_string(n) + " level names, got " +
                                     std::to_string(names->size()));
        }
        scale.level_names = *names;
    } else {
        scale.level_names.reserve(static_cast<std::size_t>(n));
        for (int i = 1; i <= n; ++i) {
            scale.level_names.push_back("C" + std::to_string(i));
        }
    }
    return scale;
}

std::string_view to_string(LabelSource source) {
    switch (source) {
        case LabelSource::UserUsefulness: return "user_usefulness";
        case LabelSource::ThirdPartyUsefulness: return "third_party_usefulness";
        case LabelSource::ThirdPartyRelevance: return "third_party_relevance";
        case LabelSource::LlmUsefulness: return "llm_usefulness";
        case LabelSource::LlmRelevance: return "llm_relevance";
    }
    return "unknown";
}

LabelSource label_source_from_string(std::string_view name) {
    if (name == "user_usefulness") return LabelSource::UserUsefulness;
    if (name == "third_party_usefulness") return LabelSource::ThirdPartyUsefulness;
    if (name == "third_party_relevance") return LabelSource::ThirdPartyRelevance;
    if (name == "llm_usefulness") return LabelSource::LlmUsefulness;
    if (name == "llm_relevance") return LabelSource::LlmRelevance;
    throw SchemaError("source", "unknown label source '" + std::string(name) + "'");
}

}  // namespace clue
