#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vano/errors.hpp"

namespace vano {

// Flat `key = value` configuration with '#' comments. Keys are ordered
// alphabetically on serialization so round-trips are stable.
using ConfigMap = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline ConfigMap parse_config_text(const std::string& text) {
    ConfigMap m;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        m[key] = val;
    }
    return m;
}

inline ConfigMap load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline std::string serialize_config(const ConfigMap& m) {
    std::ostringstream out;
    for (const auto& [k, v] : m) out << k << " = " << v << "\n";
    return out.str();
}

// Full-precision double formatting so value -> text -> value is exact.
inline std::string fmt_double(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

inline std::string fmt_int_list(const std::vector<int>& xs) {
    std::ostringstream ss;
    for (size_t i = 0; i < xs.size(); ++i) ss << (i ? "," : "") << xs[i];
    return ss.str();
}

namespace cfgdetail {

inline const std::string& get(const ConfigMap& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

} // namespace cfgdetail

inline std::string cfg_str(const ConfigMap& m, const std::string& key) {
    return cfgdetail::get(m, key);
}

inline double cfg_double(const ConfigMap& m, const std::string& key) {
    const std::string& s = cfgdetail::get(m, key);
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + s);
    }
}

inline int64_t cfg_int(const ConfigMap& m, const std::string& key) {
    const std::string& s = cfgdetail::get(m, key);
    try {
        size_t pos = 0;
        const int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + s);
    }
}

inline bool cfg_bool(const ConfigMap& m, const std::string& key) {
    const std::string& s = cfgdetail::get(m, key);
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw ConfigError("config key " + key + ": expected true/false: " + s);
}

inline std::vector<int> cfg_int_list(const ConfigMap& m, const std::string& key) {
    const std::string& s = cfgdetail::get(m, key);
    std::vector<int> out;
    std::istringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        out.push_back(static_cast<int>(std::stoll(tok)));
    }
    if (out.empty()) throw ConfigError("config key " + key + ": empty list");
    return out;
}

} // namespace vano
