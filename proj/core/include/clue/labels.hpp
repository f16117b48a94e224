#pragma once

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "clue/scale.hpp"

namespace clue {

/// One graded judgment of a (query, document) pair. `value` is normalized to 1..scale_n.
struct UsefulnessLabel {
    std::string query_id;
    std::string doc_id;
    LabelSource source = LabelSource::LlmUsefulness;
    int value = 1;
    int scale_n = 0;
};

/// A collection of labels with (query_id, doc_id, source) as the unique key.
class LabelSet {
public:
    /// Throws DuplicateLabelError on a repeated key, OutOfRangeError when
    /// value falls outside [1, scale_n].
    void insert(UsefulnessLabel label);

    const std::vector<UsefulnessLabel>& all() const { return labels_; }
    std::size_t size() const { return labels_.size(); }
    bool empty() const { return labels_.empty(); }

    const UsefulnessLabel* find(const std::string& query_id, const std::string& doc_id,
                                LabelSource source) const;

    /// First label inserted for (query_id, doc_id), any source. nullptr when absent.
    const UsefulnessLabel* find_any(const std::string& query_id, const std::string& doc_id) const;

    LabelSet filtered(LabelSource source) const;

    /// Orders labels by (query_id, doc_id, source) for deterministic output.
    void sort_by_key();

private:
    std::vector<UsefulnessLabel> labels_;
    std::map<std::tuple<std::string, std::string, int>, std::size_t> index_;
    std::map<std::pair<std::string, std::string>, std::size_t> first_by_doc_;

    void rebuild_index();
};

}  // namespace clue
