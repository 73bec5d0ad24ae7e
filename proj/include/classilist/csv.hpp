#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace classilist::csv {

/// One parsed CSV row and the 1-based line on which it starts.
struct Row {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct ParseResult {
    std::vector<Row> rows;
    /// Set when the text ends inside a quoted field.
    std::optional<std::size_t> unterminated_quote_line;
};

/// Comma separated, `"`-quoted with `""` escapes, LF or CRLF line endings.
/// Blank lines are skipped and a leading UTF-8 BOM is ignored.
ParseResult parse(std::string_view text);

/// Quotes the field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

/// Writes one LF-terminated row.
void append_row(std::string& out, const std::vector<std::string>& fields);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_number(double v);

/// Parses a whole field (surrounding blanks allowed) as a double. Accepts
/// "inf"/"nan" so that callers can report them as non-finite.
std::optional<double> parse_number(std::string_view field);

}  // namespace classilist::csv
