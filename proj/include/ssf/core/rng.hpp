#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace ssf::core {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed derived from a root seed, a component name and integer keys. Adding a new
/// stream never shifts the values drawn by an existing one.
std::uint64_t stream_seed(std::uint64_t root, std::string_view component,
                          std::initializer_list<std::uint64_t> keys);

/// One keyed draw, uniform in [lo, hi]; for hot paths where a full engine is too costly.
std::int64_t keyed_uniform(std::uint64_t root, std::string_view component,
                           std::initializer_list<std::uint64_t> keys, std::int64_t lo, std::int64_t hi);

/// Stream keyed by (component, keys...), backed by mt19937_64.
class RngStream {
public:
   RngStream(std::uint64_t root, std::string_view component, std::initializer_list<std::uint64_t> keys)
       : engine_(stream_seed(root, component, keys)) {}

   std::mt19937_64& engine() { return engine_; }

   /// Uniform integer in [lo, hi].
   std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
      return std::uniform_int_distribution<std::int64_t>(lo, hi)(engine_);
   }
   double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

private:
   std::mt19937_64 engine_;
};

} // namespace ssf::core
