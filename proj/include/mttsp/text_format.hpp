#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mttsp {

/// Raised when a text file in the `key value...` dialect is malformed.
/// `line` is 1-based; 0 means the problem is not tied to a single line
/// (e.g. a required key never appeared).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::string field, const std::string& what);

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

/// One non-empty, non-comment line split on whitespace.
struct TextLine {
    std::size_t number = 0;
    std::vector<std::string> tokens;

    const std::string& key() const { return tokens.front(); }
};

std::vector<TextLine> tokenize_lines(std::string_view text);

/// 17 significant digits; reads back to the identical double.
std::string format_number(double value);

double parse_number(const TextLine& line, std::size_t index, const std::string& field);
long long parse_integer(const TextLine& line, std::size_t index, const std::string& field);

/// Throws unless `line` has exactly `count` tokens (including the key).
void expect_tokens(const TextLine& line, std::size_t count, const std::string& field);

}  // namespace mttsp
