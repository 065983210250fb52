#include "ddmodem/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ddmodem {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& what) {
    throw std::runtime_error(origin + ":" + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Cuts an unquoted '#' comment.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool parse_number(const std::string& s, double& out) {
    const char* c = s.c_str();
    char* end = nullptr;
    out = std::strtod(c, &end);
    return end != c && *end == '\0';
}

// Splits a bracketed list body on top-level commas.
std::vector<std::string> split_list(const std::string& body) {
    std::vector<std::string> parts;
    std::string cur;
    bool quoted = false;
    for (char ch : body) {
        if (ch == '"') quoted = !quoted;
        if (ch == ',' && !quoted) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    std::string last = trim(cur);
    if (!last.empty() || !parts.empty()) parts.push_back(last);
    return parts;
}

std::string unquote(const std::string& s, const std::string& origin, int line) {
    if (s.size() < 2 || s.back() != '"') fail(origin, line, "unterminated string: " + s);
    return s.substr(1, s.size() - 2);
}

std::string kind_name(int k) {
    switch (k) {
        case 0: return "number";
        case 1: return "boolean";
        case 2: return "string";
        case 3: return "number list";
        default: return "string list";
    }
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.text_ = text;
    cfg.origin_ = origin;

    std::istringstream in(text);
    std::string raw, section;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, lineno, "unterminated section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) fail(origin, lineno, "empty section name");
            if (std::find(cfg.sections_.begin(), cfg.sections_.end(), section) ==
                cfg.sections_.end())
                cfg.sections_.push_back(section);
            continue;
        }

        size_t eq = line.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected 'key = value': " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) fail(origin, lineno, "expected 'key = value': " + line);
        if (section.empty()) fail(origin, lineno, "key outside of any [section]: " + key);
        std::string full = section + "." + key;
        if (cfg.values_.count(full)) fail(origin, lineno, "duplicate key: " + full);

        Value v;
        double d;
        if (val.front() == '"') {
            v.kind = Value::Kind::string;
            v.s = unquote(val, origin, lineno);
        } else if (val == "true" || val == "false") {
            v.kind = Value::Kind::boolean;
            v.b = val == "true";
        } else if (val.front() == '[') {
            if (val.back() != ']') fail(origin, lineno, "unterminated list: " + val);
            auto parts = split_list(val.substr(1, val.size() - 2));
            if (parts.empty()) fail(origin, lineno, "empty list: " + full);
            if (parts.front().front() == '"') {
                v.kind = Value::Kind::str_list;
                for (const auto& p : parts) v.sl.push_back(unquote(p, origin, lineno));
            } else {
                v.kind = Value::Kind::num_list;
                for (const auto& p : parts) {
                    if (!parse_number(p, d)) fail(origin, lineno, "bad number in list: " + p);
                    v.dl.push_back(d);
                }
            }
        } else if (parse_number(val, d)) {
            v.kind = Value::Kind::number;
            v.d = d;
        } else {
            fail(origin, lineno, "cannot parse value '" + val + "' for key " + full);
        }
        cfg.values_.emplace(std::move(full), std::move(v));
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    Config cfg = parse_string(buf.str(), path);
    size_t slash = path.find_last_of('/');
    cfg.base_dir_ = slash == std::string::npos ? "" : path.substr(0, slash);
    return cfg;
}

std::string Config::resolve_path(const std::string& p) const {
    if (p.empty() || p.front() == '/' || base_dir_.empty()) return p;
    return base_dir_ + "/" + p;
}

bool Config::has(const std::string& key) const { return values_.count(key) != 0; }

const Config::Value& Config::lookup(const std::string& key, Value::Kind want) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw std::runtime_error(origin_ + ": missing key " + key);
    if (it->second.kind != want)
        throw std::runtime_error(origin_ + ": key " + key + " is a " +
                                 kind_name((int)it->second.kind) + ", wanted " +
                                 kind_name((int)want));
    return it->second;
}

double Config::num(const std::string& key) const { return lookup(key, Value::Kind::number).d; }
double Config::num_or(const std::string& key, double fallback) const {
    return has(key) ? num(key) : fallback;
}
const std::string& Config::str(const std::string& key) const {
    return lookup(key, Value::Kind::string).s;
}
std::string Config::str_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? str(key) : fallback;
}
bool Config::flag_or(const std::string& key, bool fallback) const {
    return has(key) ? lookup(key, Value::Kind::boolean).b : fallback;
}
const std::vector<double>& Config::num_list(const std::string& key) const {
    return lookup(key, Value::Kind::num_list).dl;
}
const std::vector<std::string>& Config::str_list(const std::string& key) const {
    return lookup(key, Value::Kind::str_list).sl;
}

std::vector<std::string> Config::sections_under(const std::string& prefix) const {
    std::vector<std::string> out;
    const std::string p = prefix + ".";
    for (const auto& s : sections_) {
        if (s.rfind(p, 0) != 0) continue;
        std::string rest = s.substr(p.size());
        if (rest.find('.') == std::string::npos) out.push_back(rest);
    }
    return out;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace ddmodem
