#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace attncsf {

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Flat `key = value` records, one per line. `#` starts a comment. Keys keep
/// insertion order when written so files diff cleanly.
class KeyValues {
public:
    void set(const std::string& key, const std::string& value);
    void set(const std::string& key, double value);
    void set(const std::string& key, long long value);
    void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }

    bool contains(const std::string& key) const { return index_.count(key) != 0; }
    std::optional<std::string> find(const std::string& key) const;

    std::string get_string(const std::string& key) const;
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    /// Copy of the entries whose key starts with `prefix.`, with the prefix removed.
    KeyValues section(const std::string& prefix) const;
    void merge(const std::string& prefix, const KeyValues& other);

    static KeyValues parse(std::istream& in);
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::string& path);

    void write(std::ostream& out) const;
    std::string str() const;
    void save(const std::string& path) const;

private:
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

/// Shortest representation that round-trips a double exactly.
std::string format_double(double value);

} // namespace attncsf
