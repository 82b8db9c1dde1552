#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gravitykg/errors.hpp"

namespace gravitykg::csv {

// RFC 4180 field quoting: quote when the value contains a comma, quote or
// newline; embedded quotes are doubled.
inline std::string quote_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

struct Row {
    std::vector<std::string> fields;
    std::size_t line; // 1-based line where the row started
};

// Streaming RFC 4180 reader. Handles quoted fields with embedded commas,
// doubled quotes and newlines; accepts both LF and CRLF line endings.
class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw IoError("cannot open file: " + path);
    }

    // Reads one record; returns false at end of input.
    bool next(Row& row) {
        row.fields.clear();
        int c = in_.get();
        if (c == EOF) return false;
        row.line = line_;
        std::string field;
        bool quoted = false;
        for (;; c = in_.get()) {
            if (quoted) {
                if (c == EOF) throw RowError(row.line, "unterminated quoted field");
                if (c == '"') {
                    const int peek = in_.peek();
                    if (peek == '"') {
                        in_.get();
                        field += '"';
                    } else {
                        quoted = false;
                    }
                } else {
                    if (c == '\n') ++line_;
                    field += static_cast<char>(c);
                }
                continue;
            }
            if (c == '"' && field.empty()) {
                quoted = true;
            } else if (c == ',') {
                row.fields.push_back(std::move(field));
                field.clear();
            } else if (c == '\r') {
                // swallow; the newline that follows ends the record
            } else if (c == '\n' || c == EOF) {
                row.fields.push_back(std::move(field));
                if (c == '\n') ++line_;
                return true;
            } else {
                field += static_cast<char>(c);
            }
        }
    }

private:
    std::ifstream in_;
    std::size_t line_ = 1;
};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw IoError("cannot open file for writing: " + path);
    }

    void write_row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote_field(fields[i]);
        }
        out_ << '\n';
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

// Shortest representation that round-trips the double exactly.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& what) {
    double v = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw RowError(line, "non-numeric " + what + ": '" + s + "'");
    return v;
}

inline long parse_long(const std::string& s, std::size_t line, const std::string& what) {
    long v = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) throw RowError(line, "non-integer " + what + ": '" + s + "'");
    return v;
}

inline void expect_header(const Row& got, const std::vector<std::string>& want, const std::string& path) {
    if (got.fields != want) {
        std::string expect;
        for (std::size_t i = 0; i < want.size(); ++i) {
            if (i) expect += ',';
            expect += want[i];
        }
        throw SchemaError("header mismatch in " + path + " (expected: " + expect + ")");
    }
}

} // namespace gravitykg::csv
