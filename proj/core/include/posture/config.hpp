#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace posture {

/// Flat `key = value` file. `#` starts a comment; blank lines are ignored.
/// Later duplicates override earlier ones.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::istream& in);
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    std::optional<double> get_double(const std::string& key) const;
    std::optional<long long> get_int(const std::string& key) const;
    std::optional<bool> get_bool(const std::string& key) const;
    /// Comma-separated list, items trimmed.
    std::optional<std::vector<std::string>> get_list(const std::string& key) const;

    const std::map<std::string, std::string>& entries() const { return values_; }

    /// Keys not in `known`; used to reject typos.
    std::vector<std::string> unknown_keys(const std::set<std::string>& known) const;

private:
    std::map<std::string, std::string> values_;
};

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

}  // namespace posture
