#pragma once

// Line-oriented [section] / key = value text format shared by experiment
// configs and bench files. Parsing here is purely syntactic; key vocabularies
// are enforced by the typed loaders, which report unknown keys as errors with
// the original line number. '#' starts a comment anywhere on a line.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace noisesearch {

struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
    mutable bool consumed = false;  // typed loaders mark keys they understood
};

struct ConfigSection {
    std::string name;
    int line = 0;
    std::vector<ConfigEntry> entries;

    const ConfigEntry* find(std::string_view key) const {
        for (const auto& e : entries) {
            if (e.key == key) {
                e.consumed = true;
                return &e;
            }
        }
        return nullptr;
    }
};

struct ParsedConfig {
    std::vector<ConfigSection> sections;

    ConfigSection* find(std::string_view name) {
        for (auto& s : sections) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }
    const ConfigSection* find(std::string_view name) const {
        for (const auto& s : sections) {
            if (s.name == name) return &s;
        }
        return nullptr;
    }
};

namespace cfg {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string line_msg(int line, const std::string& msg) {
    return "line " + std::to_string(line) + ": " + msg;
}

}  // namespace cfg

inline ParsedConfig parse_config_text(std::string_view text) {
    ParsedConfig out;
    ConfigSection* current = nullptr;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const std::size_t hash = raw.find('#');
        if (hash != std::string_view::npos) raw = raw.substr(0, hash);
        const std::string line = cfg::trim(raw);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(cfg::line_msg(line_no, "unterminated section header"));
            }
            const std::string name = cfg::trim(std::string_view(line).substr(1, line.size() - 2));
            if (name.empty()) throw ConfigError(cfg::line_msg(line_no, "empty section name"));
            if (out.find(name)) {
                throw ConfigError(cfg::line_msg(line_no, "duplicate section [" + name + "]"));
            }
            out.sections.push_back(ConfigSection{name, line_no, {}});
            current = &out.sections.back();
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(cfg::line_msg(line_no, "expected 'key = value'"));
        }
        if (!current) {
            throw ConfigError(cfg::line_msg(line_no, "key outside of any [section]"));
        }
        ConfigEntry e;
        e.key = cfg::trim(std::string_view(line).substr(0, eq));
        e.value = cfg::trim(std::string_view(line).substr(eq + 1));
        e.line = line_no;
        if (e.key.empty()) throw ConfigError(cfg::line_msg(line_no, "empty key"));
        for (const auto& prev : current->entries) {
            if (prev.key == e.key) {
                throw ConfigError(cfg::line_msg(
                    line_no, "duplicate key '" + e.key + "' in [" + current->name + "]"));
            }
        }
        current->entries.push_back(std::move(e));
    }
    return out;
}

// ---- typed value parsing ------------------------------------------------

namespace cfg {

inline long long to_int(const ConfigEntry& e) {
    long long v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(line_msg(e.line, "'" + e.key + "' expects an integer, got '" +
                                               e.value + "'"));
    }
    return v;
}

inline std::uint64_t to_u64(const ConfigEntry& e) {
    std::uint64_t v = 0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(line_msg(e.line, "'" + e.key + "' expects a non-negative integer, got '" +
                                               e.value + "'"));
    }
    return v;
}

inline double to_real(const ConfigEntry& e) {
    double v = 0.0;
    const char* b = e.value.data();
    const char* end = b + e.value.size();
    const auto res = std::from_chars(b, end, v);
    if (res.ec != std::errc{} || res.ptr != end) {
        throw ConfigError(line_msg(e.line, "'" + e.key + "' expects a number, got '" +
                                               e.value + "'"));
    }
    return v;
}

inline bool to_bool(const ConfigEntry& e) {
    if (e.value == "true") return true;
    if (e.value == "false") return false;
    throw ConfigError(line_msg(e.line, "'" + e.key + "' expects true or false, got '" +
                                           e.value + "'"));
}

inline std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= value.size()) {
        const std::size_t c = value.find(',', pos);
        const std::string item =
            trim(std::string_view(value).substr(pos, c == std::string::npos ? std::string::npos
                                                                            : c - pos));
        out.push_back(item);
        if (c == std::string::npos) break;
        pos = c + 1;
    }
    if (out.size() == 1 && out[0].empty()) out.clear();
    return out;
}

template <typename T, typename F>
inline std::vector<T> to_list(const ConfigEntry& e, F&& convert) {
    std::vector<T> out;
    for (const auto& item : split_list(e.value)) {
        if (item.empty()) {
            throw ConfigError(line_msg(e.line, "'" + e.key + "' has an empty list item"));
        }
        ConfigEntry tmp{e.key, item, e.line};
        out.push_back(convert(tmp));
    }
    if (out.empty()) {
        throw ConfigError(line_msg(e.line, "'" + e.key + "' expects a non-empty list"));
    }
    return out;
}

// After a typed loader has pulled out everything it knows, any entry still
// unconsumed is a typo and gets reported with its location.
inline void reject_unknown(const ConfigSection& s) {
    for (const auto& e : s.entries) {
        if (!e.consumed) {
            throw ConfigError(line_msg(e.line, "unknown key '" + e.key + "' in [" +
                                                   s.name + "]"));
        }
    }
}

}  // namespace cfg

// Applies "section.key=value" overrides on top of a parsed config. The last
// dot before '=' splits section from key, so [strategy.vt] delta0 is
// addressed as strategy.vt.delta0=0.01.
inline void apply_overrides(ParsedConfig& parsed, const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("override '" + s + "' must look like section.key=value");
        }
        const std::string path = cfg::trim(std::string_view(s).substr(0, eq));
        const std::string value = cfg::trim(std::string_view(s).substr(eq + 1));
        const std::size_t dot = path.rfind('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
            throw ConfigError("override '" + s + "' must name section.key");
        }
        const std::string section = path.substr(0, dot);
        const std::string key = path.substr(dot + 1);
        ConfigSection* sec = parsed.find(section);
        if (!sec) {
            parsed.sections.push_back(ConfigSection{section, 0, {}});
            sec = &parsed.sections.back();
        }
        for (auto& e : sec->entries) {
            if (e.key == key) {
                e.value = value;
                goto next;
            }
        }
        sec->entries.push_back(ConfigEntry{key, value, 0});
    next:;
    }
}

}  // namespace noisesearch
