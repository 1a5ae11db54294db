#include <ssf/core/block.hpp>

#include <cstring>

namespace ssf {

std::string BlockId::hex() const {
   static constexpr char digits[] = "0123456789abcdef";
   std::string out;
   out.reserve(64);
   for (auto b : bytes) {
      out.push_back(digits[b >> 4]);
      out.push_back(digits[b & 0xf]);
   }
   return out;
}

BlockId BlockId::from_hex(std::string_view hex) {
   if (hex.size() != 64)
      throw Error("block id must be 64 hex digits, got " + std::to_string(hex.size()));
   auto nibble = [](char c) -> std::uint8_t {
      if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
      if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
      if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
      throw Error(std::string("invalid hex digit '") + c + "'");
   };
   BlockId id;
   for (std::size_t i = 0; i < 32; ++i)
      id.bytes[i] = static_cast<std::uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
   return id;
}

bool BlockId::is_zero() const {
   for (auto b : bytes)
      if (b != 0) return false;
   return true;
}

} // namespace ssf

namespace ssf::core {

namespace {

std::uint64_t mix(std::uint64_t x) {
   x += 0x9e3779b97f4a7c15ULL;
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

struct Lane {
   std::uint64_t h;
   void feed(std::uint64_t v) { h = mix(h ^ v) * 0x100000001b3ULL; }
};

} // namespace

BlockId stable_hash(const BlockId& parent, Slot slot, ValidatorId proposer, const std::string& payload) {
   static constexpr std::uint64_t seeds[4] = {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL,
                                              0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL};
   BlockId out;
   for (std::size_t lane = 0; lane < 4; ++lane) {
      Lane l{seeds[lane]};
      for (std::size_t i = 0; i < 32; i += 8) {
         std::uint64_t w = 0;
         std::memcpy(&w, parent.bytes.data() + i, 8);
         l.feed(w);
      }
      l.feed(slot);
      l.feed(proposer);
      l.feed(payload.size());
      for (unsigned char c : payload)
         l.feed(c);
      l.feed(lane);
      std::uint64_t h = mix(l.h);
      for (std::size_t b = 0; b < 8; ++b)
         out.bytes[lane * 8 + b] = static_cast<std::uint8_t>(h >> (56 - 8 * b));
   }
   return out;
}

Block make_block(const BlockId& parent, Slot slot, ValidatorId proposer, std::string payload,
                 const BlockHasher& hasher) {
   Block b;
   b.parent = parent;
   b.slot = slot;
   b.proposer = proposer;
   b.payload = std::move(payload);
   b.id = hasher(b.parent, b.slot, b.proposer, b.payload);
   return b;
}

const Block& genesis_block() {
   static const Block g = make_block(BlockId{}, 0, 0, "genesis");
   return g;
}

} // namespace ssf::core
