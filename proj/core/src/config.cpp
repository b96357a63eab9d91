#include "posture/config.hpp"

#include <charconv>
#include <fstream>

#include "posture/errors.hpp"

namespace posture {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = s.find(sep, pos);
        out.emplace_back(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
        if (next == std::string_view::npos) return out;
        pos = next + 1;
    }
}

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
    KeyValueConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos) {
            throw ParseError(ParseError::Kind::bad_field_count, line_no, "expected 'key = value'");
        }
        const std::string key = trim(std::string_view(text).substr(0, eq));
        if (key.empty()) throw ParseError(ParseError::Kind::bad_field_count, line_no, "empty key");
        cfg.values_[key] = trim(std::string_view(text).substr(eq + 1));
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path.string());
    return parse(in);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
}

std::optional<double> KeyValueConfig::get_double(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    double d = 0.0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), d);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) {
        throw DataError("config key '" + key + "' is not a number: '" + *v + "'");
    }
    return d;
}

std::optional<long long> KeyValueConfig::get_int(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    long long i = 0;
    const auto res = std::from_chars(v->data(), v->data() + v->size(), i);
    if (res.ec != std::errc{} || res.ptr != v->data() + v->size()) {
        throw DataError("config key '" + key + "' is not an integer: '" + *v + "'");
    }
    return i;
}

std::optional<bool> KeyValueConfig::get_bool(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
    if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
    throw DataError("config key '" + key + "' is not a boolean: '" + *v + "'");
}

std::optional<std::vector<std::string>> KeyValueConfig::get_list(const std::string& key) const {
    const auto v = get(key);
    if (!v) return std::nullopt;
    std::vector<std::string> items;
    for (auto& item : split(*v, ',')) {
        auto t = trim(item);
        if (!t.empty()) items.push_back(std::move(t));
    }
    return items;
}

std::vector<std::string> KeyValueConfig::unknown_keys(const std::set<std::string>& known) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) {
        if (!known.count(k)) out.push_back(k);
    }
    return out;
}

}  // namespace posture
