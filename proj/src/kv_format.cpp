#include "attncsf/kv_format.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace attncsf {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

} // namespace

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::runtime_error("cannot format double");
    return std::string(buf, end);
}

void KeyValues::set(const std::string& key, const std::string& value) {
    if (key.empty() || key.find_first_of("=#\n") != std::string::npos)
        throw ParseError("invalid key '" + key + "'");
    auto it = index_.find(key);
    if (it != index_.end()) {
        entries_[it->second].second = value;
        return;
    }
    index_.emplace(key, entries_.size());
    entries_.emplace_back(key, value);
}

void KeyValues::set(const std::string& key, double value) { set(key, format_double(value)); }

void KeyValues::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

std::optional<std::string> KeyValues::find(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return entries_[it->second].second;
}

std::string KeyValues::get_string(const std::string& key) const {
    auto v = find(key);
    if (!v) throw ParseError("missing key '" + key + "'");
    return *v;
}

double KeyValues::get_double(const std::string& key) const {
    const std::string v = get_string(key);
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ParseError("key '" + key + "': not a number: '" + v + "'");
    return out;
}

long long KeyValues::get_int(const std::string& key) const {
    const std::string v = get_string(key);
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ParseError("key '" + key + "': not an integer: '" + v + "'");
    return out;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
    return contains(key) ? get_string(key) : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
    return contains(key) ? get_double(key) : fallback;
}

long long KeyValues::get_int(const std::string& key, long long fallback) const {
    return contains(key) ? get_int(key) : fallback;
}

KeyValues KeyValues::section(const std::string& prefix) const {
    KeyValues out;
    const std::string p = prefix + ".";
    for (const auto& [k, v] : entries_)
        if (k.compare(0, p.size(), p) == 0) out.set(k.substr(p.size()), v);
    return out;
}

void KeyValues::merge(const std::string& prefix, const KeyValues& other) {
    for (const auto& [k, v] : other.entries_) set(prefix.empty() ? k : prefix + "." + k, v);
}

KeyValues KeyValues::parse(std::istream& in) {
    KeyValues kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
        kv.set(key, trim(line.substr(eq + 1)));
    }
    return kv;
}

KeyValues KeyValues::parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

KeyValues KeyValues::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return parse(in);
}

void KeyValues::write(std::ostream& out) const {
    for (const auto& [k, v] : entries_) out << k << " = " << v << '\n';
}

std::string KeyValues::str() const {
    std::ostringstream out;
    write(out);
    return out.str();
}

void KeyValues::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    write(out);
}

} // namespace attncsf
