#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "scitext/errors.hpp"

namespace scitext {

// Index into a LabelSpace. Ordering (tie-breaking, matrix axes) always follows
// label-space order.
using LabelId = std::int32_t;

// Fixed, ordered set of domain labels. Every labeled document, prediction and
// vote in a run refers to the same space.
class LabelSpace {
public:
    LabelSpace() = default;

    explicit LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
        for (std::size_t i = 0; i < names_.size(); ++i) {
            if (names_[i].empty()) {
                throw ValidationError("label space contains an empty label name");
            }
            auto [it, inserted] = index_.emplace(names_[i], static_cast<LabelId>(i));
            if (!inserted) {
                throw ValidationError("duplicate label in label space: " + names_[i]);
            }
        }
    }

    std::size_t size() const { return names_.size(); }
    bool empty() const { return names_.empty(); }

    const std::string& name(LabelId id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= names_.size()) {
            throw ValidationError("label id out of range: " + std::to_string(id));
        }
        return names_[static_cast<std::size_t>(id)];
    }

    std::optional<LabelId> find(std::string_view name) const {
        auto it = index_.find(std::string(name));
        return it == index_.end() ? std::nullopt : std::optional<LabelId>(it->second);
    }

    LabelId require(std::string_view name) const {
        if (auto id = find(name)) return *id;
        throw ValidationError("label not in label space: " + std::string(name));
    }

    bool contains(std::string_view name) const { return find(name).has_value(); }

    const std::vector<std::string>& names() const { return names_; }

    friend bool operator==(const LabelSpace& a, const LabelSpace& b) {
        return a.names_ == b.names_;
    }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, LabelId> index_;
};

} // namespace scitext
