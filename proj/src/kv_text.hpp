#pragma once

// Internal helpers for the flat `key = value` text files (run configs and
// the reference constants). Not part of the public headers.

#include <functional>
#include <istream>
#include <string>

#include "mp2rec/error.hpp"

namespace mp2rec::kv {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Calls fn(key, value, where) per entry; enforces the line grammar.
inline void for_each_entry(std::istream& in, const std::string& name,
                           const std::function<void(const std::string&, const std::string&,
                                                    const std::string&)>& fn) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const std::string where = name + ": line " + std::to_string(line_no);
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty()) throw ParseError(where + ": empty key");
        if (value.empty()) throw ParseError(where + ": empty value for key '" + key + "'");
        fn(key, value, where);
    }
}

}  // namespace mp2rec::kv
