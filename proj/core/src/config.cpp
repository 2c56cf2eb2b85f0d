#include "graylearn/config.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "graylearn/csv.hpp"

namespace graylearn {

namespace {

template <typename T>
std::optional<T> parse_integer(std::string_view text) {
    text = trim(text);
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

}  // namespace

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ';') {
            out.emplace_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!trim(current).empty() || !out.empty()) out.emplace_back(trim(current));
    return out;
}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
    ConfigFile cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw ConfigError(where() + "empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where() + "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty()) throw ConfigError(where() + "missing key before '='");
        const std::string full = section.empty() ? key : section + "." + key;
        if (cfg.entries_.count(full)) throw ConfigError(where() + "duplicate field '" + full + "'");
        cfg.entries_[full] = {std::string(trim(line.substr(eq + 1))), line_no};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) { return parse(read_file(path), path); }

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) != 0; }

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

void ConfigFile::fail(const std::string& key, const std::string& message) const {
    const Entry* e = find(key);
    const std::string where = e ? origin_ + ":" + std::to_string(e->line) : origin_;
    throw ConfigError(where + ": field '" + key + "': " + message);
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    auto v = parse_double(e->value);
    if (!v) fail(key, "expected a number, found '" + e->value + "'");
    return *v;
}

std::size_t ConfigFile::get_size(const std::string& key, std::size_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    auto v = parse_integer<std::size_t>(e->value);
    if (!v) fail(key, "expected a non-negative integer, found '" + e->value + "'");
    return *v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    auto v = parse_integer<std::uint64_t>(e->value);
    if (!v) fail(key, "expected a non-negative integer, found '" + e->value + "'");
    return *v;
}

bool ConfigFile::get_bool(const std::string& key, bool fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(key, "expected true or false, found '" + e->value + "'");
}

std::vector<double> ConfigFile::get_double_list(const std::string& key, std::vector<double> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(e->value)) {
        auto v = parse_double(item);
        if (!v) fail(key, "expected a list of numbers, found '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::size_t> ConfigFile::get_size_list(const std::string& key, std::vector<std::size_t> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<std::size_t> out;
    for (const auto& item : split_list(e->value)) {
        auto v = parse_integer<std::size_t>(item);
        if (!v) fail(key, "expected a list of non-negative integers, found '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::uint64_t> ConfigFile::get_u64_list(const std::string& key,
                                                    std::vector<std::uint64_t> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<std::uint64_t> out;
    for (const auto& item : split_list(e->value)) {
        auto v = parse_integer<std::uint64_t>(item);
        if (!v) fail(key, "expected a list of non-negative integers, found '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& key,
                                                     std::vector<std::string> fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    return split_list(e->value);
}

void ConfigFile::reject_unknown(const std::set<std::string>& known) const {
    for (const auto& [key, entry] : entries_) {
        if (!known.count(key)) {
            throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": unknown field '" + key + "'");
        }
    }
}

void ConfigFile::set(const std::string& key, const std::string& value) {
    auto& e = entries_[key];
    e.value = value;
}

std::string ConfigFile::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [key, entry] : entries_) {
        const std::string line = key + "=" + entry.value + "\n";
        for (unsigned char c : line) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace graylearn
