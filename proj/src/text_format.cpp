#include "mttsp/text_format.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace mttsp {

namespace {

std::string describe(std::size_t line, const std::string& field, const std::string& what)
{
    std::ostringstream os;
    if (line > 0)
        os << "line " << line << ": ";
    if (!field.empty())
        os << "field '" << field << "': ";
    os << what;
    return os.str();
}

}  // namespace

ParseError::ParseError(std::size_t line, std::string field, const std::string& what)
    : std::runtime_error(describe(line, field, what)), line_(line), field_(std::move(field))
{
}

std::vector<TextLine> tokenize_lines(std::string_view text)
{
    std::vector<TextLine> lines;
    std::size_t number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view raw = text.substr(pos, end - pos);
        ++number;
        if (auto hash = raw.find('#'); hash != std::string_view::npos)
            raw = raw.substr(0, hash);

        TextLine line;
        line.number = number;
        std::istringstream is{std::string(raw)};
        for (std::string tok; is >> tok;)
            line.tokens.push_back(std::move(tok));
        if (!line.tokens.empty())
            lines.push_back(std::move(line));
        if (end == text.size())
            break;
        pos = end + 1;
    }
    return lines;
}

std::string format_number(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

double parse_number(const TextLine& line, std::size_t index, const std::string& field)
{
    if (index >= line.tokens.size())
        throw ParseError(line.number, field, "missing value");
    const std::string& tok = line.tokens[index];
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(value))
        throw ParseError(line.number, field, "not a finite number: '" + tok + "'");
    return value;
}

long long parse_integer(const TextLine& line, std::size_t index, const std::string& field)
{
    if (index >= line.tokens.size())
        throw ParseError(line.number, field, "missing value");
    const std::string& tok = line.tokens[index];
    long long value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line.number, field, "not an integer: '" + tok + "'");
    return value;
}

void expect_tokens(const TextLine& line, std::size_t count, const std::string& field)
{
    if (line.tokens.size() != count)
        throw ParseError(line.number, field,
                         "expected " + std::to_string(count - 1) + " value(s), got " +
                             std::to_string(line.tokens.size() - 1));
}

}  // namespace mttsp
