#include "dualstate/common.hpp"

#include <charconv>
#include <chrono>
#include <cmath>

namespace dualstate {

void throw_data(const std::string& what) { throw Error(ErrorKind::Data, what); }
void throw_numeric(const std::string& what) { throw Error(ErrorKind::Numeric, what); }
void throw_usage(const std::string& what) { throw Error(ErrorKind::Usage, what); }

std::int64_t Date::serial() const {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                             std::chrono::day{static_cast<unsigned>(day)}};
    return sys_days{ymd}.time_since_epoch().count();
}

Date Date::from_serial(std::int64_t s) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{days{s}}};
    return {int(ymd.year()), static_cast<int>(unsigned(ymd.month())), static_cast<int>(unsigned(ymd.day()))};
}

int Date::weekday() const {
    using namespace std::chrono;
    return static_cast<int>(std::chrono::weekday{sys_days{days{serial()}}}.c_encoding());
}

std::string Date::iso() const {
    char buf[16];
    auto put = [&](char* p, int v, int width) {
        for (int i = width - 1; i >= 0; --i) {
            p[i] = static_cast<char>('0' + v % 10);
            v /= 10;
        }
    };
    put(buf, year, 4);
    buf[4] = '-';
    put(buf + 5, month, 2);
    buf[7] = '-';
    put(buf + 8, day, 2);
    return std::string(buf, 10);
}

std::optional<Date> parse_iso_date(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '"')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '"' || s.back() == '\r')) s.remove_suffix(1);
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int y = 0, m = 0, d = 0;
    auto num = [&](std::string_view part, int& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && p == part.data() + part.size();
    };
    if (!num(s.substr(0, 4), y) || !num(s.substr(5, 2), m) || !num(s.substr(8, 2), d)) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                          std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{y, m, d};
}

Date date_from_month_key(int key) { return {key / 12, key % 12 + 1, 1}; }

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string fmt_double(double v) {
    if (std::isnan(v)) return "NA";
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "NA";
    return std::string(buf, p);
}

const char* version() { return DUALSTATE_VERSION; }

}  // namespace dualstate
