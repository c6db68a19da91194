#include "lcpred/common.hpp"

#include <array>

namespace lcpred {

std::string_view to_string(Side side) noexcept { return side == Side::left ? "left" : "right"; }

std::string_view to_string(Label label) noexcept {
    return label == Label::lane_change ? "lane_change" : "lane_keep";
}

std::string_view to_string(DrivingStyle style) noexcept {
    switch (style) {
        case DrivingStyle::aggressive: return "aggressive";
        case DrivingStyle::general: return "general";
        case DrivingStyle::cautious: return "cautious";
    }
    return "general";
}

Side parse_side(std::string_view text) {
    if (text == "left") return Side::left;
    if (text == "right") return Side::right;
    throw DataError("unknown side '" + std::string(text) + "'");
}

Label parse_label(std::string_view text) {
    if (text == "lane_change" || text == "1") return Label::lane_change;
    if (text == "lane_keep" || text == "0") return Label::lane_keep;
    throw DataError("unknown label '" + std::string(text) + "'");
}

DrivingStyle parse_style(std::string_view text) {
    if (text == "aggressive") return DrivingStyle::aggressive;
    if (text == "general") return DrivingStyle::general;
    if (text == "cautious") return DrivingStyle::cautious;
    throw DataError("unknown driving style '" + std::string(text) + "'");
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) noexcept {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    static constexpr std::array<char, 16> digits{'0', '1', '2', '3', '4', '5', '6', '7',
                                                 '8', '9', 'a', 'b', 'c', 'd', 'e', 'f'};
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[value & 0xF];
        value >>= 4;
    }
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) noexcept {
    return splitmix64(seed ^ fnv1a(stage));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ splitmix64(index + 1));
}

}  // namespace lcpred
