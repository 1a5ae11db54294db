#include <ssf/ga/graded_agreement.hpp>

namespace ssf::ga {

void GAConfig::validate() const {
   if (grades != 2 && grades != 3) throw Error("GA grades must be 2 or 3");
   if (delta < 1) throw Error("GA delta must be >= 1");
   if (eta && *eta == 0) throw Error("GA eta must be positive");
}

GAInstance::GAInstance(GAConfig config, std::uint64_t index, const core::BlockTree& tree)
    : config_(config), index_(index), tree_(&tree) {
   config_.validate();
}

GAMessage GAInstance::input(ValidatorId sender, const BlockId& log, Tick local_time) {
   if (local_time != 0)
      throw LateInput("GA input at local time " + std::to_string(local_time) + " (must be 0)");
   GAMessage m{sender, index_, log, local_time};
   receive(m);
   return m;
}

bool GAInstance::in_window(std::uint64_t instance) const {
   if (instance > index_) return false;
   if (!config_.eta) return instance == index_;
   return index_ - instance < *config_.eta;
}

bool GAInstance::receive(const GAMessage& m) {
   if (!in_window(m.instance)) return false;
   if (finished()) return false;
   senders_.insert(m.sender);
   auto key = std::make_pair(m.sender, m.instance);
   auto [it, fresh] = first_log_.emplace(key, m.log);
   if (!fresh) {
      if (it->second != m.log) equivocators_.insert(m.sender);
      return true;
   }
   auto cur = latest_.find(m.sender);
   if (cur == latest_.end() || cur->second.instance < m.instance) latest_[m.sender] = m;
   return true;
}

std::vector<BlockId> GAInstance::live_votes(std::optional<std::uint64_t> only_instance) const {
   std::vector<BlockId> out;
   for (const auto& [sender, m] : latest_) {
      if (equivocators_.count(sender)) continue;
      if (only_instance && m.instance != *only_instance) continue;
      out.push_back(m.log);
   }
   return out;
}

std::vector<ValidatorId> GAInstance::live_voters(const BlockId& extending,
                                                 std::optional<std::uint64_t> only_instance) const {
   std::vector<ValidatorId> out;
   if (!tree_->contains(extending)) return out;
   for (const auto& [sender, m] : latest_) {
      if (equivocators_.count(sender)) continue;
      if (only_instance && m.instance != *only_instance) continue;
      if (tree_->contains(m.log) && tree_->is_prefix(extending, m.log)) out.push_back(sender);
   }
   return out;
}

std::vector<BlockId> GAInstance::snapshot_votes(const std::map<ValidatorId, BlockId>& snap,
                                                bool intersect_live) const {
   std::vector<BlockId> out;
   for (const auto& [sender, log] : snap) {
      if (equivocators_.count(sender)) continue;
      if (!intersect_live) {
         out.push_back(log);
         continue;
      }
      // V_t ∩ V_Λ: the stored and the current log must both extend Λ, so only
      // their common prefix is supported.
      auto cur = latest_.find(sender);
      if (cur == latest_.end()) continue;
      const BlockId& now = cur->second.log;
      if (now == log) {
         out.push_back(log);
      } else if (tree_->contains(now) && tree_->contains(log)) {
         std::uint32_t d = std::min(tree_->depth(now), tree_->depth(log));
         while (true) {
            auto a = tree_->ancestor_at_depth(now, d);
            auto b = tree_->ancestor_at_depth(log, d);
            if (a && b && *a == *b) {
               out.push_back(*a);
               break;
            }
            if (d == 0) break;
            --d;
         }
      }
   }
   return out;
}

void GAInstance::emit(int grade, std::span<const BlockId> votes, Tick at, std::vector<GradedOutput>& out) {
   if (senders_.empty()) return;
   if (auto best = core::highest_with_support(*tree_, votes, majority())) {
      GradedOutput o{*best, grade, at};
      outputs_.push_back(o);
      out.push_back(o);
   }
}

std::vector<GradedOutput> GAInstance::tick(Tick local_time) {
   std::vector<GradedOutput> out;
   const Tick d = config_.delta;
   const Tick end = end_time();
   for (Tick t = last_tick_ + 1; t <= local_time && t <= end; ++t) {
      if (t % d != 0) continue;
      const Tick round = t / d;
      auto live_snapshot = [&] {
         std::map<ValidatorId, BlockId> snap;
         for (const auto& [sender, m] : latest_)
            snap.emplace(sender, m.log);
         return snap;
      };
      if (config_.grades == 3) {
         switch (round) {
            case 1: snap_early_ = live_snapshot(); break;
            case 2: snap_late_ = live_snapshot(); break;
            case 3: emit(0, live_votes(), t, out); break;
            case 4: emit(1, snapshot_votes(snap_late_, true), t, out); break;
            case 5: emit(2, snapshot_votes(snap_early_, true), t, out); break;
            default: break;
         }
      } else {
         switch (round) {
            case 1: snap_early_ = live_snapshot(); break;
            case 2: emit(0, live_votes(), t, out); break;
            case 3: emit(1, snapshot_votes(snap_early_, false), t, out); break;
            default: break;
         }
      }
   }
   if (local_time > last_tick_) last_tick_ = std::min(local_time, end);
   return out;
}

std::optional<BlockId> GAInstance::output_at_grade(int grade) const {
   for (const auto& o : outputs_)
      if (o.grade == grade) return o.log;
   return std::nullopt;
}

std::set<ValidatorId> tally_equivocators(std::span<const GAMessage> messages) {
   std::map<std::pair<ValidatorId, std::uint64_t>, BlockId> first;
   std::set<ValidatorId> out;
   for (const auto& m : messages) {
      auto [it, fresh] = first.emplace(std::make_pair(m.sender, m.instance), m.log);
      if (!fresh && it->second != m.log) out.insert(m.sender);
   }
   return out;
}

} // namespace ssf::ga
