#include "classilist/csv.hpp"

#include <charconv>
#include <system_error>

namespace classilist::csv {

ParseResult parse(std::string_view text) {
    ParseResult result;
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

    std::size_t line = 1;
    std::size_t i = 0;
    const std::size_t n = text.size();

    while (i < n) {
        Row row;
        row.line = line;
        std::string field;
        bool quoted_row_content = false;

        for (;;) {
            if (i < n && text[i] == '"') {
                // quoted field
                quoted_row_content = true;
                ++i;
                const std::size_t quote_line = line;
                bool closed = false;
                while (i < n) {
                    char c = text[i];
                    if (c == '"') {
                        if (i + 1 < n && text[i + 1] == '"') {
                            field += '"';
                            i += 2;
                            continue;
                        }
                        ++i;
                        closed = true;
                        break;
                    }
                    if (c == '\n') ++line;
                    field += c;
                    ++i;
                }
                if (!closed) {
                    result.unterminated_quote_line = quote_line;
                    row.fields.push_back(std::move(field));
                    result.rows.push_back(std::move(row));
                    return result;
                }
                // anything up to the next separator is kept verbatim
                while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
                    field += text[i++];
            } else {
                while (i < n && text[i] != ',' && text[i] != '\n' && text[i] != '\r')
                    field += text[i++];
            }

            row.fields.push_back(std::move(field));
            field.clear();

            if (i < n && text[i] == ',') {
                ++i;
                continue;
            }
            // end of record
            if (i < n && text[i] == '\r') ++i;
            if (i < n && text[i] == '\n') ++i;
            ++line;
            break;
        }

        const bool blank = row.fields.size() == 1 && row.fields[0].empty() && !quoted_row_content;
        if (!blank) result.rows.push_back(std::move(row));
    }
    return result;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out += '"';
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += escape(fields[i]);
    }
    out += '\n';
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

std::optional<double> parse_number(std::string_view field) {
    auto is_blank = [](char c) { return c == ' ' || c == '\t'; };
    while (!field.empty() && is_blank(field.front())) field.remove_prefix(1);
    while (!field.empty() && is_blank(field.back())) field.remove_suffix(1);
    if (field.empty()) return std::nullopt;
    if (field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || end != field.data() + field.size()) return std::nullopt;
    return v;
}

}  // namespace classilist::csv
