#include <ssf/core/rng.hpp>

namespace ssf::core {

std::uint64_t splitmix64(std::uint64_t x) {
   x += 0x9e3779b97f4a7c15ULL;
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t root, std::string_view component,
                          std::initializer_list<std::uint64_t> keys) {
   std::uint64_t h = splitmix64(root);
   for (unsigned char c : component)
      h = splitmix64(h ^ c);
   h = splitmix64(h ^ 0xff);
   for (auto k : keys)
      h = splitmix64(h ^ k);
   return h;
}

std::int64_t keyed_uniform(std::uint64_t root, std::string_view component,
                           std::initializer_list<std::uint64_t> keys, std::int64_t lo, std::int64_t hi) {
   if (hi <= lo) return lo;
   const auto span = static_cast<unsigned __int128>(static_cast<std::uint64_t>(hi - lo) + 1);
   const auto wide = static_cast<unsigned __int128>(stream_seed(root, component, keys)) * span;
   return lo + static_cast<std::int64_t>(wide >> 64);
}

} // namespace ssf::core
