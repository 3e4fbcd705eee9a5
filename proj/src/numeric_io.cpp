#include "procqx/numeric_io.hpp"

#include "procqx/errors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <system_error>

namespace procqx {

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    if (ec != std::errc{}) {
        return "nan";
    }
    return std::string(buf.data(), ptr);
}

std::string format_fixed(double v, int decimals) {
    std::array<char, 64> buf{};
    const int n = std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
    return std::string(buf.data(), n > 0 ? static_cast<std::size_t>(n) : 0);
}

double parse_double(std::string_view text, const std::string& what) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError(what + ": not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::int64_t parse_int(std::string_view text, const std::string& what) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
        throw ValidationError(what + ": not an integer: '" + std::string(text) + "'");
    }
    return v;
}

namespace {

// Howard Hinnant's days-from-civil: days since 1970-01-01 for a proleptic
// Gregorian date.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

bool all_digits(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
    }
    return true;
}

} // namespace

double parse_iso8601_utc(std::string_view text, const std::string& what) {
    // YYYY-MM-DDThh:mm:ss[.fff]Z
    const auto fail = [&]() -> double {
        throw ValidationError(what + ": not an ISO-8601 UTC timestamp: '" + std::string(text) + "'");
    };
    if (text.size() < 20 || text.back() != 'Z') fail();
    if (text[4] != '-' || text[7] != '-' || text[10] != 'T' || text[13] != ':' || text[16] != ':') fail();
    const std::string_view ys = text.substr(0, 4), mos = text.substr(5, 2), ds = text.substr(8, 2);
    const std::string_view hs = text.substr(11, 2), mis = text.substr(14, 2), ss = text.substr(17, 2);
    if (!all_digits(ys) || !all_digits(mos) || !all_digits(ds) || !all_digits(hs) ||
        !all_digits(mis) || !all_digits(ss)) {
        fail();
    }
    double frac = 0.0;
    if (text.size() > 20) {
        const std::string_view rest = text.substr(19, text.size() - 20);
        if (rest.size() < 2 || rest[0] != '.' || !all_digits(rest.substr(1))) fail();
        frac = parse_double(std::string("0") + std::string(rest), what);
    }
    const auto num = [&](std::string_view s) { return parse_int(s, what); };
    const std::int64_t mo = num(mos), d = num(ds), h = num(hs), mi = num(mis), sec = num(ss);
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) fail();
    const std::int64_t days = days_from_civil(num(ys), static_cast<unsigned>(mo), static_cast<unsigned>(d));
    return static_cast<double>(days * 86400 + h * 3600 + mi * 60 + sec) + frac;
}

} // namespace procqx
