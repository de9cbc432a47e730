#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecx/error.hpp"

namespace ecx {

/// Bijection between stable string codes and dense indices.
template <typename Tag>
class Registry {
public:
    Registry() = default;

    static Registry from_codes(std::vector<std::string> codes) {
        Registry r;
        for (auto& c : codes) {
            if (r.find(c)) throw ValidationError("duplicate code in registry: " + c);
            r.add(std::move(c));
        }
        return r;
    }

    /// Index of `code`, appending it when new.
    std::size_t add(std::string code) {
        if (auto it = index_.find(code); it != index_.end()) return it->second;
        const std::size_t idx = codes_.size();
        index_.emplace(code, idx);
        codes_.push_back(std::move(code));
        return idx;
    }

    std::optional<std::size_t> find(std::string_view code) const {
        auto it = index_.find(std::string(code));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index(std::string_view code) const {
        if (auto i = find(code)) return *i;
        throw ValidationError("unknown code: " + std::string(code));
    }

    const std::string& code(std::size_t i) const { return codes_.at(i); }
    std::span<const std::string> codes() const noexcept { return codes_; }
    std::size_t size() const noexcept { return codes_.size(); }
    bool empty() const noexcept { return codes_.empty(); }

    bool operator==(const Registry& other) const { return codes_ == other.codes_; }

private:
    std::vector<std::string> codes_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct CountryTag {};
struct ProductTag {};
using CountryRegistry = Registry<CountryTag>;
using ProductRegistry = Registry<ProductTag>;

}  // namespace ecx
