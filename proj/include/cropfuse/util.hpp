#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace cropfuse {

/// splitmix64 step; used to derive independent sub-seeds so that
/// per-unit work (county, repetition, pixel) is seeded by index and
/// therefore schedule-independent.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream));
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return mix_seed(mix_seed(seed, a), b);
}

inline bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

/// Day-of-year of the first day of `month` (1..12).
int month_start_doy(int year, int month);

/// Day-of-year of the last day of `month` (1..12).
int month_end_doy(int year, int month);

/// Runs fn(0..n-1) on up to `threads` worker threads. Units must be
/// independent and write only to index-addressed slots; with that
/// contract the result is identical for any thread count.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

std::vector<std::string> split(const std::string& s, char sep);
std::string trim(const std::string& s);
std::string lower(std::string s);

/// Consistent float formatting for machine-readable CSV output.
std::string fmt_double(double v);
/// Fixed-decimal formatting for report tables.
std::string fmt_fixed(double v, int decimals);

} // namespace cropfuse
