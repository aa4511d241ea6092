#pragma once

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

namespace ldp {

/// Minimal RFC-4180 writer: header row, comma separator, CRLF-free line ends,
/// quoting only when a field needs it. Doubles use the shortest round-trip form.
class CsvWriter {
public:
    CsvWriter(std::ostream& os, std::initializer_list<std::string_view> header);

    template <class... T>
    void row(const T&... fields) {
        bool first = true;
        ((put_sep(first), put(fields)), ...);
        os_ << '\n';
    }

private:
    void put_sep(bool& first) {
        if (!first) os_ << ',';
        first = false;
    }
    void put(double v);
    void put(std::string_view s);
    void put(const std::string& s) { put(std::string_view(s)); }
    void put(const char* s) { put(std::string_view(s)); }
    void put(bool b) { os_ << (b ? '1' : '0'); }
    template <class I, std::enable_if_t<std::is_integral_v<I> && !std::is_same_v<I, bool>, int> = 0>
    void put(I v) {
        os_ << +v;
    }

    std::ostream& os_;
};

/// Shortest decimal text that round-trips the double.
std::string format_double(double v);

}  // namespace ldp
