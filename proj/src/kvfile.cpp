#include "evcosim/kvfile.hpp"

#include "evcosim/error.hpp"

#include <cctype>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace evcosim::kv {

namespace {

std::string strip(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    std::ostringstream os;
    os << origin << ":" << line << ": " << msg;
    throw Error(Errc::BadFile, os.str());
}

} // namespace

bool Section::has(const std::string& key) const { return values.count(key) > 0; }

const std::string& Section::get(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
        throw Error(Errc::BadFile, "section [" + name + "] missing key '" + key + "'");
    return it->second;
}

std::string Section::get_or(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

double Section::get_double(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw Error(Errc::BadFile, "section [" + name + "] key '" + key + "': not a number: '" + v + "'");
    }
}

double Section::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

int Section::get_int(const std::string& key) const {
    const std::string& v = get(key);
    try {
        size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw Error(Errc::BadFile, "section [" + name + "] key '" + key + "': not an integer: '" + v + "'");
    }
}

int Section::get_int_or(const std::string& key, int fallback) const {
    return has(key) ? get_int(key) : fallback;
}

bool Section::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error(Errc::BadFile, "section [" + name + "] key '" + key + "': not a boolean: '" + v + "'");
}

bool Section::get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
}

std::vector<const Section*> Document::all(const std::string& name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections)
        if (s.name == name) out.push_back(&s);
    return out;
}

const Section* Document::first(const std::string& name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

const Section& Document::only(const std::string& name) const {
    auto v = all(name);
    if (v.empty()) throw Error(Errc::BadFile, "missing required section [" + name + "]");
    if (v.size() > 1) throw Error(Errc::BadFile, "section [" + name + "] must appear exactly once");
    return *v.front();
}

Document parse_string(const std::string& text, const std::string& origin) {
    Document doc;
    Section* cur = nullptr;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto pos = line.find('#'); pos != std::string::npos) line.erase(pos);
        line = strip(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(origin, line_no, "unterminated section header");
            std::string name = strip(line.substr(1, line.size() - 2));
            if (name.empty()) fail(origin, line_no, "empty section name");
            doc.sections.push_back(Section{name, line_no, {}});
            cur = &doc.sections.back();
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value'");
        if (!cur) fail(origin, line_no, "key outside any section");
        std::string key = strip(line.substr(0, eq));
        std::string value = strip(line.substr(eq + 1));
        if (key.empty()) fail(origin, line_no, "empty key");
        if (!cur->values.emplace(key, value).second)
            fail(origin, line_no, "duplicate key '" + key + "' in section [" + cur->name + "]");
    }
    return doc;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::BadFile, "cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Document parse_file(const std::string& path) { return parse_string(read_file(path), path); }

std::vector<double> parse_number_list(const std::string& value) {
    std::vector<double> out;
    std::istringstream in(value);
    std::string tok;
    while (in >> tok) {
        size_t pos = 0;
        double d;
        try {
            d = std::stod(tok, &pos);
        } catch (const std::exception&) {
            throw Error(Errc::BadFile, "not a number in list: '" + tok + "'");
        }
        if (pos != tok.size()) throw Error(Errc::BadFile, "not a number in list: '" + tok + "'");
        out.push_back(d);
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed) {
    std::uint64_t h = seed;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace evcosim::kv
