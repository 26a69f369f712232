#pragma once

#include <map>
#include <string>
#include <vector>

namespace evcosim::kv {

// Sectioned key=value text format used for grid cases, load profiles and
// scenario files.  Sections repeat; keys within one section do not.
struct Section {
    std::string name;
    int line_no = 0;
    std::map<std::string, std::string> values;

    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key) const;
    double get_double_or(const std::string& key, double fallback) const;
    int get_int(const std::string& key) const;
    int get_int_or(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
};

struct Document {
    std::vector<Section> sections;

    std::vector<const Section*> all(const std::string& name) const;
    const Section* first(const std::string& name) const;
    // Throws if the section is absent or appears more than once.
    const Section& only(const std::string& name) const;
};

Document parse_string(const std::string& text, const std::string& origin);
Document parse_file(const std::string& path);

std::vector<double> parse_number_list(const std::string& value);

// Stable 64-bit content hash (FNV-1a), used for run config hashes.
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed = 0xcbf29ce484222325ull);

std::string read_file(const std::string& path);

} // namespace evcosim::kv
