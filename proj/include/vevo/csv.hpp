#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace vevo::csv {

/// Line-oriented CSV reader that tracks line numbers for error reporting.
/// Handles trailing '\r'; no quoting (none of the artifact's formats need it).
class Reader {
public:
    explicit Reader(const std::string& path);

    /// Reads the next row into `fields`. Returns false at end of file.
    bool next(std::vector<std::string>& fields);

    int line_number() const { return line_; }
    const std::string& path() const { return path_; }

    /// Reads the header row and throws ValidationError unless it equals `expected`.
    void expect_header(const std::string& expected);

private:
    std::ifstream in_;
    std::string path_;
    int line_ = 0;
};

class Writer {
public:
    explicit Writer(const std::string& path);

    void comment(const std::string& text);  // written as "# text"
    void row(const std::vector<std::string>& fields);
    void raw_line(const std::string& line);

private:
    std::ofstream out_;
    std::string path_;
};

std::string format_double(double v);
std::string format_int(std::int64_t v);

double parse_double(const std::string& s, const std::string& context, int line);
std::int64_t parse_int(const std::string& s, const std::string& context, int line);

}  // namespace vevo::csv
