#include "vevo/csv.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>

#include "vevo/common.hpp"

namespace vevo::csv {

Reader::Reader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw ValidationError("cannot open '" + path + "' for reading");
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') continue;  // header comments
        fields.clear();
        std::size_t start = 0;
        while (true) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, comma - start));
            start = comma + 1;
        }
        return true;
    }
    return false;
}

void Reader::expect_header(const std::string& expected) {
    std::vector<std::string> fields;
    if (!next(fields))
        throw ValidationError(path_ + ": empty file, expected header '" + expected + "'");
    std::string got;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) got += ',';
        got += fields[i];
    }
    if (got != expected)
        throw ValidationError(path_ + ":" + std::to_string(line_) + ": expected header '" + expected +
                              "', got '" + got + "'");
}

Writer::Writer(const std::string& path) : out_(path), path_(path) {
    if (!out_) throw ValidationError("cannot open '" + path + "' for writing");
}

void Writer::comment(const std::string& text) { out_ << "# " << text << '\n'; }

void Writer::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
}

void Writer::raw_line(const std::string& line) { out_ << line << '\n'; }

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::string format_int(std::int64_t v) { return std::to_string(v); }

double parse_double(const std::string& s, const std::string& context, int line) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError(context + ":" + std::to_string(line) + ": '" + s + "' is not a number");
    return v;
}

std::int64_t parse_int(const std::string& s, const std::string& context, int line) {
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0' || errno == ERANGE)
        throw ValidationError(context + ":" + std::to_string(line) + ": '" + s + "' is not an integer");
    return v;
}

}  // namespace vevo::csv
