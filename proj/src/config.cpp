#include "sisparrow/config.hpp"

#include <fstream>
#include <sstream>

#include <boost/algorithm/string/trim.hpp>
#include <boost/property_tree/ini_parser.hpp>

#include "sisparrow/errors.hpp"

namespace sisparrow {

namespace pt = boost::property_tree;

Config Config::parse(std::istream& in)
{
    // the INI reader only knows full-line ';' comments; strip '#' and
    // trailing comments here
    std::ostringstream cleaned;
    std::string line;
    while (std::getline(in, line)) {
        auto cut = line.find_first_of("#;");
        if (cut != std::string::npos)
            line.erase(cut);
        cleaned << line << '\n';
    }
    Config c;
    std::istringstream src(cleaned.str());
    try {
        pt::read_ini(src, c.tree_);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    return c;
}

Config Config::parse_string(const std::string& text)
{
    std::istringstream in(text);
    return parse(in);
}

Config Config::load(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open " + path);
    return parse(in);
}

bool Config::has(const std::string& key) const
{
    return tree_.get_optional<std::string>(key).has_value();
}

std::string Config::get_string(const std::string& key) const
{
    auto v = tree_.get_optional<std::string>(key);
    if (!v)
        throw ConfigError("config: missing key " + key);
    std::string s = boost::algorithm::trim_copy(*v);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
        s = s.substr(1, s.size() - 2);
    return s;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const
{
    return has(key) ? get_string(key) : fallback;
}

namespace {

double to_real(const std::string& key, const std::string& s)
{
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects a number, got '" + s + "'");
    }
}

long long to_int(const std::string& key, const std::string& s)
{
    try {
        std::size_t used = 0;
        long long v = std::stoll(s, &used);
        if (used != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + s + "'");
    }
}

} // namespace

double Config::get_real(const std::string& key) const { return to_real(key, get_string(key)); }

double Config::get_real(const std::string& key, double fallback) const
{
    return has(key) ? get_real(key) : fallback;
}

long long Config::get_int(const std::string& key) const { return to_int(key, get_string(key)); }

long long Config::get_int(const std::string& key, long long fallback) const
{
    return has(key) ? get_int(key) : fallback;
}

std::vector<double> Config::get_reals(const std::string& key) const
{
    std::vector<double> out;
    for (const auto& item : split_list(get_string(key)))
        out.push_back(to_real(key, item));
    return out;
}

std::vector<std::string> Config::get_strings(const std::string& key) const
{
    return split_list(get_string(key));
}

std::optional<std::vector<double>> Config::get_optional_reals(const std::string& key) const
{
    if (get_string(key) == "unknown")
        return std::nullopt;
    return get_reals(key);
}

std::vector<std::pair<std::string, std::string>> Config::entries() const
{
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [section, child] : tree_) {
        if (child.empty()) {
            out.emplace_back(section, child.data());
            continue;
        }
        for (const auto& [key, value] : child)
            out.emplace_back(section + "." + key, boost::algorithm::trim_copy(value.data()));
    }
    return out;
}

void Config::set(const std::string& key, const std::string& value) { tree_.put(key, value); }

std::vector<std::string> split_list(const std::string& value)
{
    std::string s = boost::algorithm::trim_copy(value);
    if (!s.empty() && s.front() == '[') {
        if (s.back() != ']')
            throw ConfigError("config: unterminated list '" + value + "'");
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        boost::algorithm::trim(item);
        if (!item.empty() && item.front() == '"' && item.back() == '"' && item.size() >= 2)
            item = item.substr(1, item.size() - 2);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

} // namespace sisparrow
