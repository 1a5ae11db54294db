#pragma once

#include <ssf/core/block.hpp>

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace ssf::core {

struct InvalidBlock : Error {
   using Error::Error;
};

/// Higher slot first, then lexicographically smaller id. Returns true when `a` ranks above `b`.
bool ranks_higher(const Block& a, const Block& b);

/**
 * Append-only block tree rooted at genesis.
 *
 * Blocks whose parent is unknown are buffered and attached as soon as the parent
 * arrives, so only fully connected blocks are visible to readers. Each attached
 * node carries a skip pointer giving O(log depth) ancestor queries.
 */
class BlockTree {
public:
   enum class InsertStatus { attached, buffered, duplicate };

   struct InsertResult {
      InsertStatus         status;
      std::vector<BlockId> attached; ///< every block that became attached, in attach order
   };

   BlockTree();

   /// @throws ConflictingContent when the id is known with different fields
   /// @throws InvalidBlock when the block's slot does not exceed its parent's
   InsertResult insert(const Block& b);

   bool contains(const BlockId& id) const { return index_.count(id) != 0; }
   bool is_buffered(const BlockId& id) const { return buffered_ids_.count(id) != 0; }
   std::size_t size() const { return nodes_.size(); }
   std::size_t buffered_count() const { return buffered_ids_.size(); }

   const Block& genesis() const { return nodes_.front().block; }

   /// @throws UnknownBlock
   const Block& get(const BlockId& id) const;
   const Block* find(const BlockId& id) const;

   /// Distance from genesis. @throws UnknownBlock
   std::uint32_t depth(const BlockId& id) const;

   /// True iff `a` lies on the path from genesis to `b` (a == b included). @throws UnknownBlock
   bool is_prefix(const BlockId& a, const BlockId& b) const;

   /// Ancestor of `id` at the given depth, or nullopt when depth exceeds id's depth.
   std::optional<BlockId> ancestor_at_depth(const BlockId& id, std::uint32_t depth) const;

   /// Children in insertion order.
   std::vector<BlockId> children(const BlockId& id) const;

   /// All attached ids in insertion order (genesis first).
   std::vector<BlockId> ids() const;

   /// See the free function of the same name.
   std::optional<BlockId> highest_with_support(std::span<const BlockId> votes, std::size_t min_count,
                                               const std::optional<BlockId>& base = std::nullopt) const;

private:
   struct Node {
      Block                block;
      std::int64_t         parent = -1;
      std::int64_t         skip = -1;
      std::uint32_t        depth = 0;
      std::vector<std::size_t> children;
   };

   std::size_t node_index(const BlockId& id) const;
   std::size_t ancestor_index(std::size_t from, std::uint32_t depth) const;
   void attach(const Block& b, std::size_t parent_index);

   std::vector<Node>                                      nodes_;
   std::unordered_map<BlockId, std::size_t, BlockIdHash>  index_;
   std::unordered_map<BlockId, std::vector<Block>, BlockIdHash> orphans_; // keyed by missing parent
   std::unordered_map<BlockId, Block, BlockIdHash>        buffered_ids_;
};

/// Maximal element under the tie-break order, or nullopt for an empty set.
/// @throws UnknownBlock when a candidate is not in the tree
std::optional<BlockId> highest(std::span<const BlockId> candidates, const BlockTree& tree);

/**
 * Highest block whose subtree contains at least `min_count` of `votes`.
 * Votes on unknown blocks are ignored. When `base` is given only votes extending
 * it are considered and the result, if any, extends `base`.
 */
std::optional<BlockId> highest_with_support(const BlockTree& tree, std::span<const BlockId> votes,
                                            std::size_t min_count,
                                            const std::optional<BlockId>& base = std::nullopt);

/// Number of votes that extend `block` (votes on unknown blocks are ignored).
std::size_t subtree_support(const BlockTree& tree, std::span<const BlockId> votes, const BlockId& block);

} // namespace ssf::core
