#include "ldp/csv.hpp"

#include <charconv>
#include <cmath>

namespace ldp {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

CsvWriter::CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header) : os_(os) {
    bool first = true;
    for (auto h : header) {
        put_sep(first);
        put(h);
    }
    os_ << '\n';
}

void CsvWriter::put(double v) { os_ << format_double(v); }

void CsvWriter::put(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) {
        os_ << s;
        return;
    }
    os_ << '"';
    for (char c : s) {
        if (c == '"') os_ << '"';
        os_ << c;
    }
    os_ << '"';
}

}  // namespace ldp
