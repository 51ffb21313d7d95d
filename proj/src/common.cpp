#include "trieplan/common.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <thread>

namespace trieplan {

std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double u01(std::uint64_t h) {
    return static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;
}

double std_normal(std::uint64_t h) {
    double u1 = u01(hash_combine(h, 0x5bf03635ULL));
    double u2 = u01(hash_combine(h, 0xc2b2ae35ULL));
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

double lognormal_unit_mean(double sigma, std::uint64_t h) {
    if (sigma <= 0.0) return 1.0;
    return std::exp(-0.5 * sigma * sigma + sigma * std_normal(h));
}

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string csv_escape(std::string_view field) {
    bool needs_quote = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs_quote) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t, std::size_t)>& fn, std::size_t chunk) {
    if (n == 0) return;
    if (chunk == 0) chunk = 1;
    if (threads <= 1 || n <= chunk) {
        fn(0, n);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t begin = next.fetch_add(chunk);
            if (begin >= n) return;
            fn(begin, std::min(begin + chunk, n));
        }
    };
    std::vector<std::thread> pool;
    unsigned count = std::min<unsigned>(threads, std::thread::hardware_concurrency());
    if (count == 0) count = 2;
    pool.reserve(count);
    for (unsigned i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace trieplan
