#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dualstate {

// Error categories map onto CLI exit codes (usage 1, data 2, numeric 3).
enum class ErrorKind { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void throw_data(const std::string& what);
[[noreturn]] void throw_numeric(const std::string& what);
[[noreturn]] void throw_usage(const std::string& what);

// Serial runs the same loops without OpenMP; kept as the reference path.
enum class Exec { Serial, Parallel };

struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    auto operator<=>(const Date&) const = default;

    // Days since 1970-01-01.
    std::int64_t serial() const;
    static Date from_serial(std::int64_t s);
    // 0 = Sunday.
    int weekday() const;
    int month_key() const { return year * 12 + (month - 1); }
    std::string iso() const;
};

std::optional<Date> parse_iso_date(std::string_view s);
Date date_from_month_key(int key);

// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

// Shortest round-trip decimal form.
std::string fmt_double(double v);

const char* version();

}  // namespace dualstate
