#pragma once

#include <ssf/core/types.hpp>

#include <functional>
#include <string>

namespace ssf::core {

/// A proposal in the block tree. `parent` is the zero id for genesis.
struct Block {
   BlockId     id;
   BlockId     parent;
   Slot        slot = 0;
   ValidatorId proposer = 0;
   std::string payload;

   bool is_genesis() const { return slot == 0 && parent.is_zero(); }

   bool operator==(const Block&) const = default;
};

/// Maps (parent, slot, proposer, payload) to an id. Must be a pure function.
using BlockHasher = std::function<BlockId(const BlockId& parent, Slot slot, ValidatorId proposer,
                                          const std::string& payload)>;

/// Stable non-cryptographic 256-bit hash: four independently seeded 64-bit lanes.
BlockId stable_hash(const BlockId& parent, Slot slot, ValidatorId proposer, const std::string& payload);

Block make_block(const BlockId& parent, Slot slot, ValidatorId proposer, std::string payload,
                 const BlockHasher& hasher = stable_hash);

/// The single genesis block shared by every tree.
const Block& genesis_block();

} // namespace ssf::core
