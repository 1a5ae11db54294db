#pragma once

#include <ssf/core/block_tree.hpp>

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace ssf::ffg {

using Stake = std::uint64_t;

/// A (block, slot) pair; slot >= the block's own slot.
struct Checkpoint {
   BlockId block;
   Slot    slot = 0;

   auto operator<=>(const Checkpoint&) const = default;
};

Checkpoint genesis_checkpoint();

struct FFGVote {
   ValidatorId sender = 0;
   Checkpoint  source;
   Checkpoint  target;
   Slot        cast_at = 0;

   auto operator<=>(const FFGVote&) const = default;
};

/// Acknowledgment that `target` was justified in its own slot.
struct Ack {
   ValidatorId sender = 0;
   Checkpoint  target;

   auto operator<=>(const Ack&) const = default;
};

enum class OffenseKind { double_vote, surround, stale_ffg_after_ack };

const char* to_string(OffenseKind k);

struct SlashingOffense {
   ValidatorId         offender = 0;
   OffenseKind         kind = OffenseKind::double_vote;
   FFGVote             vote;        ///< the vote that completes the offense
   std::optional<FFGVote> other;    ///< conflicting vote (double vote, surround)
   std::optional<Ack>  ack;         ///< conflicting acknowledgment (stale vote)

   bool operator==(const SlashingOffense&) const = default;
};

struct NotFinalized : Error {
   using Error::Error;
};

/**
 * Casper FFG bookkeeping for one observer.
 *
 * A target is justified once its source is justified and the distinct senders of
 * the source→target link hold at least 2/3 of total stake. A justified checkpoint
 * is finalized when it is the source of a supermajority link to the next slot.
 * Votes whose source has not been justified yet are retained and re-evaluated
 * when it is.
 */
class JustificationState {
public:
   explicit JustificationState(std::vector<Stake> stakes, const core::BlockTree* tree = nullptr);

   struct Applied {
      std::vector<Checkpoint> justified;
      std::vector<FFGVote>    rejected; ///< malformed votes, skipped
   };

   Applied apply_ffg_votes(std::span<const FFGVote> votes);
   Applied apply_ffg_vote(const FFGVote& vote) { return apply_ffg_votes(std::span(&vote, 1)); }

   /// Finalizations (by the consecutive-slot rule) recorded since the last call.
   std::vector<Checkpoint> finalize();

   /// Records an acknowledgment; returns true when it brings `target` to 2/3 of stake.
   bool record_ack(const Ack& ack);

   bool is_justified(const Checkpoint& c) const { return justified_.count(c) != 0; }
   bool is_finalized(const Checkpoint& c) const { return finalized_.count(c) != 0; }
   bool is_ssf_finalized(const Checkpoint& c) const { return ssf_finalized_.count(c) != 0; }

   const std::set<Checkpoint>& justified() const { return justified_; }
   const std::set<Checkpoint>& finalized() const { return finalized_; }
   const std::set<Checkpoint>& ssf_finalized() const { return ssf_finalized_; }

   /// Justified checkpoint with the highest slot (ties: smaller block id).
   const Checkpoint& latest_justified() const { return latest_; }

   Stake total_stake() const { return total_; }
   Stake stake_of(ValidatorId v) const { return v < stakes_.size() ? stakes_[v] : 0; }
   bool supermajority(Stake s) const { return 3 * s >= 2 * total_; }

   const std::vector<FFGVote>& vote_log() const { return log_; }
   std::span<const FFGVote> votes_by(ValidatorId v) const;
   std::optional<Slot> latest_ack_slot(ValidatorId v) const;
   const std::vector<Ack>& acks_by(ValidatorId v) const;

private:
   using Link = std::pair<Checkpoint, Checkpoint>;
   struct LinkTally {
      std::set<ValidatorId> voters;
      Stake                 stake = 0;
   };

   bool well_formed(const FFGVote& v) const;
   void settle_link(const Checkpoint& source, const Checkpoint& target, std::vector<Checkpoint>& newly);

   std::vector<Stake>                          stakes_;
   Stake                                       total_ = 0;
   const core::BlockTree*                      tree_;
   std::map<Link, LinkTally>                   links_;
   std::map<Checkpoint, std::vector<Checkpoint>> targets_by_source_;
   std::set<Checkpoint>                        justified_;
   Checkpoint                                  latest_;
   std::set<Checkpoint>                        finalized_;
   std::set<Checkpoint>                        ssf_finalized_;
   std::vector<Checkpoint>                     pending_finalized_;
   std::vector<FFGVote>                        log_;
   std::set<FFGVote>                           seen_;
   std::map<ValidatorId, std::vector<FFGVote>> by_sender_;
   std::map<Checkpoint, std::pair<std::set<ValidatorId>, Stake>> acks_;
   std::map<ValidatorId, std::vector<Ack>>     acks_by_sender_;
};

/// Offenses completed by `vote` against the sender's previously recorded votes and acks.
std::vector<SlashingOffense> detect_slashable(const JustificationState& js, const FFGVote& vote);
/// Offenses completed by `ack` against the sender's previously recorded votes.
std::vector<SlashingOffense> detect_slashable(const JustificationState& js, const Ack& ack);

/// Every offense present in a complete vote and ack history (each pair reported once).
std::vector<SlashingOffense> detect_all(std::span<const FFGVote> votes, std::span<const Ack> acks = {});

/// Stake that must be slashed to revert a finalized checkpoint: one third of total stake.
/// @throws NotFinalized
double min_reversion_stake(const JustificationState& js, const Checkpoint& cp);

} // namespace ssf::ffg
