#pragma once

#include <map>
#include <string>
#include <vector>

namespace nav {

// Flat key=value text file. Lines starting with '#' and blank lines are
// ignored. Values keep everything after the first '='.
class Config {
public:
    Config() = default;

    static Config from_file(const std::string& path);
    static Config from_string(const std::string& text);

    bool has(const std::string& key) const;

    std::string get_str(const std::string& key, const std::string& fallback) const;
    double get_num(const std::string& key, double fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    void set(const std::string& key, const std::string& value);

    // Fails when a key outside the allowed set is present; catches typos
    // before they silently fall back to defaults.
    void require_known(const std::vector<std::string>& allowed,
                       const std::string& context) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

    void write_file(const std::string& path) const;

private:
    std::map<std::string, std::string> kv_;
};

// Fixed-schema numeric CSV with one header line. Values are written with
// %.17g so a re-run with the same seed reproduces files byte for byte.
void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows);

// Reads a numeric CSV and checks the header matches the expected schema.
std::vector<std::vector<double>> read_csv(const std::string& path, const std::string& expected_header);

}  // namespace nav
