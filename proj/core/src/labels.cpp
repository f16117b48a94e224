#include "clue/labels.hpp"

#include <algorithm>

#include "clue/error.hpp"

namespace clue {

void LabelSet::insert(UsefulnessLabel label) {
    if (label.scale_n < 2 || label.value < 1 || label.value > label.scale_n) {
        throw OutOfRangeError("label (" + label.query_id + ", " + label.doc_id + ") value " +
                              std::to_string(label.value) + " outside [1, " +
                              std::to_string(label.scale_n) + "]");
    }
    auto key = std::make_tuple(label.query_id, label.doc_id, static_cast<int>(label.source));
    if (index_.count(key)) {
        throw DuplicateLabelError("duplicate label for (" + label.query_id + ", " + label.doc_id +
                                  ", " + std::string(to_string(label.source)) + ")");
    }
    index_.emplace(std::move(key), labels_.size());
    first_by_doc_.emplace(std::make_pair(label.query_id, label.doc_id), labels_.size());
    labels_.push_back(std::move(label));
}

const UsefulnessLabel* LabelSet::find(const std::string& query_id, const std::string& doc_id,
                                      LabelSource source) const {
    auto it = index_.find(std::make_tuple(query_id, doc_id, static_cast<int>(source)));
    return it == index_.end() ? nullptr : &labels_[it->second];
}

const UsefulnessLabel* LabelSet::find_any(const std::string& query_id,
                                          const std::string& doc_id) const {
    auto it = first_by_doc_.find(std::make_pair(query_id, doc_id));
    return it == first_by_doc_.end() ? nullptr : &labels_[it->second];
}

LabelSet LabelSet::filtered(LabelSource source) const {
    LabelSet out;
    for (const auto& label : labels_) {
        if (label.source == source) out.insert(label);
    }
    return out;
}

void LabelSet::sort_by_key() {
    std::sort(labels_.begin(), labels_.end(), [](const UsefulnessLabel& a, const UsefulnessLabel& b) {
        return std::tie(a.query_id, a.doc_id, a.source) < std::tie(b.query_id, b.doc_id, b.source);
    });
    rebuild_index();
}

void LabelSet::rebuild_index() {
    index_.clear();
    first_by_doc_.clear();
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        const auto& label = labels_[i];
        index_.emplace(std::make_tuple(label.query_id, label.doc_id, static_cast<int>(label.source)),
                       i);
        first_by_doc_.emplace(std::make_pair(label.query_id, label.doc_id), i);
    }
}

}  // namespace clue
