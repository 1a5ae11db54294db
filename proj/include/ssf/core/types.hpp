#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace ssf {

using ValidatorId = std::uint32_t;
using Slot = std::uint64_t;
using Tick = std::int64_t;

/// Opaque 256-bit block identifier.
struct BlockId {
   std::array<std::uint8_t, 32> bytes{};

   std::string hex() const;
   static BlockId from_hex(std::string_view hex);
   bool is_zero() const;

   auto operator<=>(const BlockId&) const = default;
};

struct BlockIdHash {
   std::size_t operator()(const BlockId& id) const noexcept {
      std::size_t h = 0;
      for (int i = 0; i < 8; ++i)
         h = (h << 8) | id.bytes[static_cast<std::size_t>(i)];
      return h;
   }
};

/// Base for errors raised by the library; `what()` carries the detail.
struct Error : std::runtime_error {
   using std::runtime_error::runtime_error;
};

struct UnknownBlock : Error {
   using Error::Error;
};

struct ConflictingContent : Error {
   using Error::Error;
};

/// Invalid configuration; `field` names the offending key path.
struct ConfigError : Error {
   ConfigError(std::string field_path, const std::string& what)
       : Error(field_path.empty() ? what : field_path + ": " + what), field(std::move(field_path)) {}
   std::string field;
};

} // namespace ssf
