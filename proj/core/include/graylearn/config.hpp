#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "graylearn/errors.hpp"

namespace graylearn {

/// Parse error that names the offending line and field.
class ConfigError : public ParseError {
public:
    using ParseError::ParseError;
};

/// Flat INI-style text:
///
///     # comment
///     [section]
///     key = value   # trailing comment
///
/// Keys are addressed as "section.key". Keys before any section header live
/// in the "" section and are addressed by bare name.
class ConfigFile {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& key) const;
    const Entry* find(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    std::size_t get_size(const std::string& key, std::size_t fallback) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const;
    std::vector<std::size_t> get_size_list(const std::string& key, std::vector<std::size_t> fallback) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key, std::vector<std::uint64_t> fallback) const;
    std::vector<std::string> get_string_list(const std::string& key, std::vector<std::string> fallback) const;

    /// Throws ConfigError for the first key not in `known`.
    void reject_unknown(const std::set<std::string>& known) const;

    /// Set or override a key (e.g. from a command-line flag).
    void set(const std::string& key, const std::string& value);

    /// FNV-1a 64 over the sorted "key=value" lines, as 16 hex digits.
    std::string hash() const;

    /// ConfigError mentioning the key's line.
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    const std::string& origin() const { return origin_; }

private:
    std::string origin_;
    std::map<std::string, Entry> entries_;
};

/// Parse "a,b,c" (also accepts ';' separators).
std::vector<std::string> split_list(const std::string& text);

}  // namespace graylearn
