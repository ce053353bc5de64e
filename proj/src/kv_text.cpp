#include "mlaperf/kv_text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace mlaperf {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

KvText KvText::parse(std::string_view text) {
    KvText out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);

        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument(fmt::format("line {}: expected 'key = value'", line_no));
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw std::invalid_argument(fmt::format("line {}: empty key or value", line_no));
        }
        const auto [it, inserted] = out.entries_.emplace(std::string(key), std::string(value));
        if (!inserted) {
            throw std::invalid_argument(fmt::format("line {}: duplicate key '{}'", line_no, key));
        }
    }
    return out;
}

KvText KvText::load(const std::string& path) { return parse(read_text_file(path)); }

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error(fmt::format("cannot open '{}'", path));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool KvText::has(const std::string& key) const { return entries_.count(key) != 0; }

const std::string& KvText::str(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) {
        throw std::invalid_argument(fmt::format("missing key '{}'", key));
    }
    return it->second;
}

std::int64_t KvText::integer(const std::string& key) const {
    const auto& s = str(key);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::invalid_argument(fmt::format("key '{}': '{}' is not an integer", key, s));
    }
    return v;
}

double KvText::real(const std::string& key) const {
    const auto& s = str(key);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) {
        throw std::invalid_argument(fmt::format("key '{}': '{}' is not a number", key, s));
    }
    return v;
}

void KvText::require_only(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, value] : entries_) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw std::invalid_argument(fmt::format("unknown key '{}'", key));
        }
    }
}

std::string fnv1a_hex(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

}  // namespace mlaperf
