#include <ssf/core/block_tree.hpp>

#include <algorithm>
#include <map>

namespace ssf::core {

namespace {

std::uint32_t invert_lowest_one(std::uint32_t n) { return n & (n - 1); }

std::uint32_t skip_depth(std::uint32_t depth) {
   if (depth < 2) return 0;
   return (depth & 1) ? invert_lowest_one(invert_lowest_one(depth - 1)) + 1 : invert_lowest_one(depth);
}

} // namespace

bool ranks_higher(const Block& a, const Block& b) {
   if (a.slot != b.slot) return a.slot > b.slot;
   return a.id < b.id;
}

BlockTree::BlockTree() {
   Node g;
   g.block = genesis_block();
   nodes_.push_back(std::move(g));
   index_.emplace(nodes_.front().block.id, 0);
}

std::size_t BlockTree::node_index(const BlockId& id) const {
   auto it = index_.find(id);
   if (it == index_.end()) throw UnknownBlock("unknown block " + id.hex());
   return it->second;
}

const Block& BlockTree::get(const BlockId& id) const { return nodes_[node_index(id)].block; }

const Block* BlockTree::find(const BlockId& id) const {
   auto it = index_.find(id);
   return it == index_.end() ? nullptr : &nodes_[it->second].block;
}

std::uint32_t BlockTree::depth(const BlockId& id) const { return nodes_[node_index(id)].depth; }

std::size_t BlockTree::ancestor_index(std::size_t from, std::uint32_t depth) const {
   std::size_t walk = from;
   std::uint32_t walk_depth = nodes_[walk].depth;
   while (walk_depth > depth) {
      const auto& node = nodes_[walk];
      std::uint32_t sd = skip_depth(walk_depth);
      std::uint32_t sd_prev = skip_depth(walk_depth - 1);
      if (node.skip >= 0 && (sd == depth || (sd > depth && !(sd_prev + 2 < sd && sd_prev >= depth)))) {
         walk = static_cast<std::size_t>(node.skip);
         walk_depth = sd;
      } else {
         walk = static_cast<std::size_t>(node.parent);
         --walk_depth;
      }
   }
   return walk;
}

std::optional<BlockId> BlockTree::ancestor_at_depth(const BlockId& id, std::uint32_t depth) const {
   std::size_t i = node_index(id);
   if (depth > nodes_[i].depth) return std::nullopt;
   return nodes_[ancestor_index(i, depth)].block.id;
}

bool BlockTree::is_prefix(const BlockId& a, const BlockId& b) const {
   std::size_t ia = node_index(a);
   std::size_t ib = node_index(b);
   if (nodes_[ia].depth > nodes_[ib].depth) return false;
   return ancestor_index(ib, nodes_[ia].depth) == ia;
}

std::vector<BlockId> BlockTree::children(const BlockId& id) const {
   std::vector<BlockId> out;
   for (auto c : nodes_[node_index(id)].children)
      out.push_back(nodes_[c].block.id);
   return out;
}

std::vector<BlockId> BlockTree::ids() const {
   std::vector<BlockId> out;
   out.reserve(nodes_.size());
   for (const auto& n : nodes_)
      out.push_back(n.block.id);
   return out;
}

void BlockTree::attach(const Block& b, std::size_t parent_index) {
   Node n;
   n.block = b;
   n.parent = static_cast<std::int64_t>(parent_index);
   n.depth = nodes_[parent_index].depth + 1;
   n.skip = static_cast<std::int64_t>(ancestor_index(parent_index, skip_depth(n.depth)));
   std::size_t idx = nodes_.size();
   nodes_.push_back(std::move(n));
   nodes_[parent_index].children.push_back(idx);
   index_.emplace(b.id, idx);
}

BlockTree::InsertResult BlockTree::insert(const Block& b) {
   InsertResult result{InsertStatus::duplicate, {}};
   if (const Block* known = find(b.id)) {
      if (!(*known == b)) throw ConflictingContent("id collision with different content: " + b.id.hex());
      return result;
   }
   if (auto it = buffered_ids_.find(b.id); it != buffered_ids_.end()) {
      if (!(it->second == b)) throw ConflictingContent("id collision with different content: " + b.id.hex());
      return result;
   }
   if (b.is_genesis()) throw ConflictingContent("second genesis block " + b.id.hex());

   auto parent_it = index_.find(b.parent);
   if (parent_it == index_.end()) {
      orphans_[b.parent].push_back(b);
      buffered_ids_.emplace(b.id, b);
      result.status = InsertStatus::buffered;
      return result;
   }
   if (b.slot <= nodes_[parent_it->second].block.slot)
      throw InvalidBlock("block " + b.id.hex() + " slot " + std::to_string(b.slot) +
                         " does not exceed parent slot");

   result.status = InsertStatus::attached;
   std::vector<std::pair<Block, std::size_t>> pending{{b, parent_it->second}};
   while (!pending.empty()) {
      auto [blk, pidx] = std::move(pending.back());
      pending.pop_back();
      if (blk.slot <= nodes_[pidx].block.slot) {
         // Invalid buffered descendant: drop it rather than attach.
         continue;
      }
      attach(blk, pidx);
      result.attached.push_back(blk.id);
      std::size_t idx = nodes_.size() - 1;
      auto orphan_it = orphans_.find(blk.id);
      if (orphan_it != orphans_.end()) {
         auto waiting = std::move(orphan_it->second);
         orphans_.erase(orphan_it);
         for (auto it = waiting.rbegin(); it != waiting.rend(); ++it) {
            buffered_ids_.erase(it->id);
            pending.emplace_back(std::move(*it), idx);
         }
      }
   }
   return result;
}

std::optional<BlockId> highest(std::span<const BlockId> candidates, const BlockTree& tree) {
   const Block* best = nullptr;
   for (const auto& id : candidates) {
      const Block& b = tree.get(id);
      if (!best || ranks_higher(b, *best)) best = &b;
   }
   if (!best) return std::nullopt;
   return best->id;
}

std::size_t subtree_support(const BlockTree& tree, std::span<const BlockId> votes, const BlockId& block) {
   if (!tree.contains(block)) return 0;
   std::size_t count = 0;
   for (const auto& v : votes)
      if (tree.contains(v) && tree.is_prefix(block, v)) ++count;
   return count;
}

std::optional<BlockId> highest_with_support(const BlockTree& tree, std::span<const BlockId> votes,
                                            std::size_t min_count, const std::optional<BlockId>& base) {
   return tree.highest_with_support(votes, min_count, base);
}

std::optional<BlockId> BlockTree::highest_with_support(std::span<const BlockId> votes, std::size_t min_count,
                                                       const std::optional<BlockId>& base) const {
   if (min_count == 0) min_count = 1;
   std::vector<std::size_t> counted;
   counted.reserve(votes.size());
   std::uint32_t lo = 0;
   std::size_t base_index = 0;
   if (base) {
      auto it = index_.find(*base);
      if (it == index_.end()) return std::nullopt;
      base_index = it->second;
      lo = nodes_[base_index].depth;
   }
   std::uint32_t hi = lo;
   for (const auto& v : votes) {
      auto it = index_.find(v);
      if (it == index_.end()) continue;
      const std::size_t i = it->second;
      if (nodes_[i].depth < lo || (base && ancestor_index(i, lo) != base_index)) continue;
      counted.push_back(i);
      hi = std::max(hi, nodes_[i].depth);
   }
   if (counted.size() < min_count) return std::nullopt;

   if (2 * min_count <= counted.size()) {
      // Several branches may qualify: count every ancestor down to the base.
      std::unordered_map<std::size_t, std::size_t> support;
      for (auto v : counted)
         for (std::int64_t i = static_cast<std::int64_t>(v); i >= 0 && nodes_[i].depth >= lo; i = nodes_[i].parent)
            ++support[static_cast<std::size_t>(i)];
      std::optional<std::size_t> best;
      for (const auto& [i, c] : support)
         if (c >= min_count && (!best || ranks_higher(nodes_[i].block, nodes_[*best].block))) best = i;
      if (!best) return std::nullopt;
      return nodes_[*best].block.id;
   }

   // A strict majority of the counted votes qualifies one chain only; binary search its tip. at a given depth: monotone in depth, so binary search the deepest.
   std::vector<std::size_t> at;
   auto qualifying_at = [&](std::uint32_t d) -> std::optional<std::size_t> {
      at.clear();
      for (auto v : counted)
         if (nodes_[v].depth >= d) at.push_back(ancestor_index(v, d));
      std::sort(at.begin(), at.end());
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < at.size();) {
         std::size_t j = i;
         while (j < at.size() && at[j] == at[i])
            ++j;
         if (j - i >= min_count && (!best || ranks_higher(nodes_[at[i]].block, nodes_[*best].block))) best = at[i];
         i = j;
      }
      return best;
   };

   std::optional<std::size_t> best = qualifying_at(lo);
   if (!best) return std::nullopt;
   while (lo < hi) {
      std::uint32_t mid = lo + (hi - lo + 1) / 2;
      if (auto q = qualifying_at(mid)) {
         best = q;
         lo = mid;
      } else {
         hi = mid - 1;
      }
   }
   return nodes_[*best].block.id;
}

} // namespace ssf::core
