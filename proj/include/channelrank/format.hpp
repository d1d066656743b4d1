#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <string>

namespace channelrank {

enum class Precision {
    six_significant, ///< stable golden files
    full,            ///< shortest exact round-trip
};

/// Shortest decimal (non-exponent) text that reads back to exactly `value`.
inline std::string format_exact(double value)
{
    std::array<char, 512> buffer{};
    const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value, std::chars_format::fixed);
    return {buffer.data(), result.ptr};
}

inline std::string format_number(double value, Precision precision)
{
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    if (precision == Precision::full) {
        std::array<char, 64> buffer{};
        const auto result = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
        return {buffer.data(), result.ptr};
    }
    std::array<char, 64> buffer{};
    const auto result =
        std::to_chars(buffer.data(), buffer.data() + buffer.size(), value, std::chars_format::general, 6);
    return {buffer.data(), result.ptr};
}

} // namespace channelrank
