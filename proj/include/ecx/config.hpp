#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace ecx {

/// Flat key=value run configuration. Every key has a fixed type and a
/// default; `write` emits all keys in schema order so that two equal
/// configurations serialize to identical bytes.
class RunConfig {
public:
    enum class Kind { Text, Path, Integer, Count, Seed, Real, IntegerList, CountList, Choice, ChoiceList };

    struct Key {
        std::string name;
        Kind kind;
        std::string default_value;
        std::string help;
        std::vector<std::string> choices;
    };

    static const std::vector<Key>& schema();
    static const Key* find_key(const std::string& name);

    RunConfig();

    /// Validates and stores a value. Throws ValidationError for unknown keys
    /// or values that do not parse as the key's type.
    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;

    std::string text(const std::string& key) const { return get(key); }
    long long integer(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    std::uint64_t seed() const;
    double real(const std::string& key) const;
    std::vector<long long> integers(const std::string& key) const;
    std::vector<std::size_t> counts(const std::string& key) const;
    std::vector<std::string> list(const std::string& key) const;

    /// `key=value` lines; blank lines and lines starting with '#' are ignored.
    static RunConfig parse(std::istream& in, const std::string& source = "<stream>");
    static RunConfig load(const std::filesystem::path& path);
    void write(std::ostream& out) const;
    void save(const std::filesystem::path& path) const;

    bool operator==(const RunConfig&) const = default;

private:
    std::map<std::string, std::string> values_;
};

/// Splits a comma-separated list, trimming blanks and dropping empty items.
std::vector<std::string> split_list(const std::string& s);

}  // namespace ecx
