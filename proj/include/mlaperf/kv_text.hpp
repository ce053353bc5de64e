#pragma once

#include <cstdint>
#include <initializer_list>
#include <map>
#include <string>
#include <string_view>

namespace mlaperf {

// Flat key-value text used for attention configs and platform files:
//
//   # comment
//   key = value
//
// Keys are unique; blank lines and '#' comments are ignored. Whitespace around
// keys and values is trimmed.
class KvText {
public:
    static KvText parse(std::string_view text);
    static KvText load(const std::string& path);

    [[nodiscard]] bool has(const std::string& key) const;
    [[nodiscard]] const std::string& str(const std::string& key) const;
    [[nodiscard]] std::int64_t integer(const std::string& key) const;
    [[nodiscard]] double real(const std::string& key) const;

    // Throws if any key outside `allowed` is present.
    void require_only(std::initializer_list<std::string_view> allowed) const;

    [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

std::string read_text_file(const std::string& path);

// FNV-1a over the bytes of `text`, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace mlaperf
