#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace dfv {

inline constexpr const char* kToolkitVersion = "0.1.0";

uint64_t splitmix64(uint64_t x);

// Derives an independent stream seed from a master seed. Streams are stable
// under reordering, so work scheduled in any order reproduces bit-identically.
uint64_t derive_seed(uint64_t master, uint64_t stream);

// Seeded RNG with self-contained distributions. The mt19937_64 core sequence
// is pinned by the standard, and uniform/normal/shuffle are implemented here,
// so draws are reproducible across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), unbiased
    uint64_t bounded(uint64_t n);

    // standard normal via Box-Muller; pairs are cached
    double normal();

    double normal(double mean, double sd) { return mean + sd * normal(); }

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(bounded(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

uint64_t fnv1a(std::string_view s);

std::string read_file(const std::string& path);

// Write-temp-then-rename so readers never observe partial files.
void write_file_atomic(const std::string& path, std::string_view content);

std::string to_lower(std::string s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);

// Splits one CSV record; handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);

// Quotes a field iff it contains a comma, quote, or newline.
std::string csv_field(std::string_view value);

// Runs fn(i) for i in [0, n) across up to max_threads workers. Blocking;
// rethrows the first worker exception.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned max_threads = 0);

double mean_of(const std::vector<double>& v);

// Sample standard deviation (n-1 denominator); 0 when fewer than two values.
double sample_sd(const std::vector<double>& v);

}  // namespace dfv
