#include "wattrank/csv.hpp"

#include <charconv>
#include <cmath>
#include <system_error>

#include "wattrank/error.hpp"

namespace wattrank::csv {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool is_blank(const Row& row) {
    return row.fields.size() == 1 && trim(row.fields.front()).empty();
}

}  // namespace

std::vector<Row> read(std::istream& in) {
    std::vector<Row> rows;
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    if (text.size() >= 3 && text.compare(0, 3, "\xEF\xBB\xBF") == 0) text.erase(0, 3);

    std::size_t line = 1;
    Row row{line, {}};
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    std::size_t quote_line = 0;

    auto end_row = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
        if (!is_blank(row)) rows.push_back(std::move(row));
        row = Row{line, {}};
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (field.empty() && !field_was_quoted) {
                    quoted = true;
                    field_was_quoted = true;
                    quote_line = line;
                } else {
                    field.push_back(c);
                }
                break;
            case ',':
                row.fields.push_back(std::move(field));
                field.clear();
                field_was_quoted = false;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') break;
                field.push_back(c);
                break;
            case '\n':
                ++line;
                end_row();
                break;
            default:
                field.push_back(c);
        }
    }
    if (quoted) throw ParseError("unterminated quoted field", quote_line);
    if (!field.empty() || !row.fields.empty() || field_was_quoted) end_row();
    return rows;
}

std::string escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out;
    out.reserve(field.size() + 2);
    out.push_back('"');
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string join(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i != 0) out.push_back(',');
        out += escape(fields[i]);
    }
    return out;
}

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view what, std::size_t line) {
    auto s = trim(text);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double value = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(value)) {
        throw ParseError("invalid number for " + std::string(what) + ": '" + std::string(text) + "'", line);
    }
    return value;
}

std::int64_t parse_int(std::string_view text, std::string_view what, std::size_t line) {
    auto s = trim(text);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    std::int64_t value = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ParseError("invalid integer for " + std::string(what) + ": '" + std::string(text) + "'", line);
    }
    return value;
}

}  // namespace wattrank::csv
