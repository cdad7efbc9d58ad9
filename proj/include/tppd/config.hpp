#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <tppd/error.hpp>

namespace tppd {

/// Flat key-value configuration in a TOML-like text format:
///
///     # comment
///     top_key = 1.5
///     [section]
///     name = "quoted string"
///     ranges = [0.5, 3.0]
///
/// Section headers namespace keys as "section.key". Values are kept as raw
/// tokens and parsed by the typed getters, which name the offending key on
/// error. Later duplicates overwrite earlier ones.
class config {
public:
    config() = default;

    static config parse(std::string_view text, const std::string& origin = "<string>") {
        config c;
        std::string section;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            std::size_t eol = text.find('\n', pos);
            if (eol == std::string_view::npos) eol = text.size();
            std::string line(text.substr(pos, eol - pos));
            pos = eol + 1;
            ++line_no;

            strip_comment(line);
            trim(line);
            if (line.empty()) continue;

            if (line.front() == '[') {
                if (line.back() != ']')
                    throw error(origin + ":" + std::to_string(line_no) + ": malformed section header");
                section = line.substr(1, line.size() - 2);
                trim(section);
                continue;
            }

            std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw error(origin + ":" + std::to_string(line_no) + ": expected key = value");
            std::string key = line.substr(0, eq);
            std::string value = line.substr(eq + 1);
            trim(key);
            trim(value);
            if (key.empty())
                throw error(origin + ":" + std::to_string(line_no) + ": empty key");
            if (!section.empty()) key = section + "." + key;
            c.values_[key] = value;
        }
        return c;
    }

    static config parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw error("config: cannot open '" + path + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path);
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    void set(const std::string& key, const std::string& raw_value) { values_[key] = raw_value; }

    double get_double(const std::string& key) const {
        return parse_double(raw(key), key);
    }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? get_double(key) : fallback;
    }

    std::int64_t get_int(const std::string& key) const {
        const std::string& v = raw(key);
        char* end = nullptr;
        long long r = std::strtoll(v.c_str(), &end, 10);
        if (end != v.c_str() + v.size() || v.empty())
            throw error("config: key '" + key + "' is not an integer: '" + v + "'");
        return r;
    }
    std::int64_t get_int(const std::string& key, std::int64_t fallback) const {
        return has(key) ? get_int(key) : fallback;
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = raw(key);
        if (v == "true") return true;
        if (v == "false") return false;
        throw error("config: key '" + key + "' is not a bool: '" + v + "'");
    }
    bool get_bool(const std::string& key, bool fallback) const {
        return has(key) ? get_bool(key) : fallback;
    }

    std::string get_string(const std::string& key) const {
        return unquote(raw(key), key);
    }
    std::string get_string(const std::string& key, const std::string& fallback) const {
        return has(key) ? get_string(key) : fallback;
    }

    std::vector<double> get_double_list(const std::string& key) const {
        std::vector<double> out;
        for (const std::string& tok : list_tokens(raw(key), key))
            out.push_back(parse_double(tok, key));
        return out;
    }
    std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const {
        return has(key) ? get_double_list(key) : std::move(fallback);
    }

    std::vector<std::string> get_string_list(const std::string& key) const {
        std::vector<std::string> out;
        for (const std::string& tok : list_tokens(raw(key), key))
            out.push_back(unquote(tok, key));
        return out;
    }
    std::vector<std::string> get_string_list(const std::string& key, std::vector<std::string> fallback) const {
        return has(key) ? get_string_list(key) : std::move(fallback);
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;

    const std::string& raw(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end())
            throw error("config: missing key '" + key + "'");
        return it->second;
    }

    static double parse_double(const std::string& v, const std::string& key) {
        char* end = nullptr;
        double r = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size())
            throw error("config: key '" + key + "' is not a number: '" + v + "'");
        return r;
    }

    static std::string unquote(const std::string& v, const std::string& key) {
        if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
            return v.substr(1, v.size() - 2);
        if (!v.empty() && v.front() == '"')
            throw error("config: key '" + key + "' has an unterminated string");
        return v;
    }

    static std::vector<std::string> list_tokens(const std::string& v, const std::string& key) {
        if (v.size() < 2 || v.front() != '[' || v.back() != ']')
            throw error("config: key '" + key + "' is not a list: '" + v + "'");
        std::vector<std::string> out;
        std::string body = v.substr(1, v.size() - 2);
        std::string tok;
        bool in_quotes = false;
        for (char ch : body) {
            if (ch == '"') in_quotes = !in_quotes;
            if (ch == ',' && !in_quotes) {
                trim(tok);
                if (!tok.empty()) out.push_back(tok);
                tok.clear();
            } else {
                tok.push_back(ch);
            }
        }
        trim(tok);
        if (!tok.empty()) out.push_back(tok);
        return out;
    }

    static void strip_comment(std::string& line) {
        bool in_quotes = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') in_quotes = !in_quotes;
            if (line[i] == '#' && !in_quotes) {
                line.erase(i);
                return;
            }
        }
    }

    static void trim(std::string& s) {
        const char* ws = " \t\r";
        std::size_t b = s.find_first_not_of(ws);
        std::size_t e = s.find_last_not_of(ws);
        s = (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    }
};

} // namespace tppd
