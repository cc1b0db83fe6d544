#include "nav/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "nav/errors.hpp"

namespace nav {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

Config Config::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return from_string(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

Config Config::from_string(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key=value, got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        }
        c.kv_[key] = value;
    }
    return c;
}

bool Config::has(const std::string& key) const { return kv_.count(key) != 0; }

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double Config::get_num(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(it->second.c_str(), &end);
    if (end == it->second.c_str() || *end != '\0' || errno == ERANGE) {
        throw ConfigError("key '" + key + "': not a number: '" + it->second + "'");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "': not a boolean: '" + v + "'");
}

void Config::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void Config::require_known(const std::vector<std::string>& allowed,
                           const std::string& context) const {
    for (const auto& [key, value] : kv_) {
        (void)value;
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(context + ": unknown key '" + key + "'");
        }
    }
}

void Config::write_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    for (const auto& [key, value] : kv_) {
        out << key << " = " << value << "\n";
    }
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw ConfigError("cannot write file: " + path);
    std::fprintf(f, "%s\n", header.c_str());
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            std::fprintf(f, i + 1 == row.size() ? "%.17g" : "%.17g,", row[i]);
        }
        std::fputc('\n', f);
    }
    std::fclose(f);
}

std::vector<std::vector<double>> read_csv(const std::string& path,
                                          const std::string& expected_header) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty file");
    if (trim(line) != expected_header) {
        throw ConfigError(path + ": unexpected header '" + trim(line) + "', want '" +
                          expected_header + "'");
    }
    const std::size_t cols = static_cast<std::size_t>(
        std::count(expected_header.begin(), expected_header.end(), ',')) + 1;

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty()) continue;
        std::vector<double> row;
        row.reserve(cols);
        std::size_t start = 0;
        while (true) {
            const auto comma = t.find(',', start);
            const std::string field =
                comma == std::string::npos ? t.substr(start) : t.substr(start, comma - start);
            errno = 0;
            char* end = nullptr;
            const double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || errno == ERANGE) {
                throw ConfigError(path + ":" + std::to_string(lineno) + ": bad number '" + field + "'");
            }
            row.push_back(v);
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (row.size() != cols) {
            throw ConfigError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(cols) + " columns, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace nav
