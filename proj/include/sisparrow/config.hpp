#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace sisparrow {

/// Sectioned key = value configuration.
///
///     [geometry]
///     Lx = 4
///     delta_x = [0, 1, 2, 3]   # lists are comma separated in brackets
///     Delta_x = unknown
///
/// `#` and `;` start a comment. Keys are addressed as "section.key".
class Config
{
public:
    Config() = default;

    static Config parse(std::istream& in);
    static Config parse_string(const std::string& text);
    static Config load(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_real(const std::string& key) const;
    double get_real(const std::string& key, double fallback) const;
    long long get_int(const std::string& key) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::vector<double> get_reals(const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& key) const;

    /// Empty when the value is the literal `unknown`.
    std::optional<std::vector<double>> get_optional_reals(const std::string& key) const;

    /// All entries as (section.key, raw value), in file order.
    std::vector<std::pair<std::string, std::string>> entries() const;

    void set(const std::string& key, const std::string& value);

private:
    boost::property_tree::ptree tree_;
};

/// Split "[a, b, c]" (brackets optional) into trimmed items.
std::vector<std::string> split_list(const std::string& value);

} // namespace sisparrow
