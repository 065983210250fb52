#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ddmodem {

// Structured text configuration: "[section.sub]" headers, "key = value"
// lines, comments from '#' to end of line. Values are quoted strings, bare
// booleans, numbers, or one-level lists "[a, b, c]". Keys flatten to
// "section.sub.key". Physical quantities carry their unit in the key name
// (…_hz, …_s, …_db); bare counts do not.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;

    double num(const std::string& key) const;
    double num_or(const std::string& key, double fallback) const;
    const std::string& str(const std::string& key) const;
    std::string str_or(const std::string& key, const std::string& fallback) const;
    bool flag_or(const std::string& key, bool fallback) const;
    const std::vector<double>& num_list(const std::string& key) const;
    const std::vector<std::string>& str_list(const std::string& key) const;

    // Section headers that appeared directly under `prefix`, in declaration
    // order: with sections [waveform.cpofdm] and [waveform.zak_over_cpofdm],
    // sections_under("waveform") yields {"cpofdm", "zak_over_cpofdm"}.
    std::vector<std::string> sections_under(const std::string& prefix) const;

    // Raw text and its origin, kept for hashing and manifest echo.
    const std::string& text() const { return text_; }
    const std::string& origin() const { return origin_; }
    // Directory of the config file ("" when parsed from a string); relative
    // resource paths inside the config resolve against it.
    const std::string& base_dir() const { return base_dir_; }
    std::string resolve_path(const std::string& p) const;

private:
    struct Value {
        enum class Kind { number, boolean, string, num_list, str_list } kind;
        double d = 0.0;
        bool b = false;
        std::string s;
        std::vector<double> dl;
        std::vector<std::string> sl;
    };

    const Value& lookup(const std::string& key, Value::Kind want) const;

    std::map<std::string, Value> values_;
    std::vector<std::string> sections_;  // declaration order
    std::string text_, origin_, base_dir_;
};

// FNV-1a over bytes; used for config provenance hashes.
std::uint64_t fnv1a(const std::string& s);

}  // namespace ddmodem
