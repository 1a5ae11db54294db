#pragma once

#include <ssf/core/block_tree.hpp>

#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

namespace ssf::ga {

/// Three-grade GA (grades 0..2, outputs at 3Δ/4Δ/5Δ) or two-grade GA (grades 0..1, outputs at 2Δ/3Δ).
struct GAConfig {
   int                          grades = 3;
   Tick                         delta = 1;
   std::optional<std::uint64_t> eta; ///< vote expiry in instances; nullopt = only this instance's messages

   void validate() const;
};

struct GAMessage {
   ValidatorId   sender = 0;
   std::uint64_t instance = 0;
   BlockId       log;
   Tick          sent_at = 0;

   bool operator==(const GAMessage&) const = default;
};

/// `log` stands for itself and every prefix of it: a grade-g output of `log`
/// is an output of (Λ, g) for every Λ that is a prefix of `log`.
struct GradedOutput {
   BlockId log;
   int     grade = 0;
   Tick    at = 0;

   bool operator==(const GradedOutput&) const = default;
};

struct LateInput : Error {
   using Error::Error;
};

/**
 * One participant's view of a graded-agreement instance.
 *
 * Local time 0 is the input time. Messages can be received at any local time;
 * `tick` must be called with non-decreasing times and fires every scheduled
 * step up to and including the given time. Participation |S| is the number of
 * distinct senders of any message counted for this instance; it is re-read at
 * every output time. Equivocators stay in |S| but are dropped from every tally.
 */
class GAInstance {
public:
   GAInstance(GAConfig config, std::uint64_t index, const core::BlockTree& tree);

   /// Broadcast input. Self-delivers the message. A second input with a different
   /// log marks the sender as an equivocator. @throws LateInput when local_time != 0
   GAMessage input(ValidatorId sender, const BlockId& log, Tick local_time);

   /// Returns false if the message falls outside the instance's expiry window.
   bool receive(const GAMessage& m);

   std::vector<GradedOutput> tick(Tick local_time);

   std::uint64_t index() const { return index_; }
   const GAConfig& config() const { return config_; }
   Tick end_time() const { return static_cast<Tick>(config_.grades + 2) * config_.delta; }
   bool finished() const { return last_tick_ >= end_time(); }

   std::size_t participation() const { return senders_.size(); }
   const std::set<ValidatorId>& equivocators() const { return equivocators_; }

   /// Counted log per non-equivocating sender, optionally restricted to messages of one instance.
   std::vector<BlockId> live_votes(std::optional<std::uint64_t> only_instance = std::nullopt) const;
   std::vector<ValidatorId> live_voters(const BlockId& extending,
                                        std::optional<std::uint64_t> only_instance = std::nullopt) const;

   const std::vector<GradedOutput>& outputs() const { return outputs_; }
   std::optional<BlockId> output_at_grade(int grade) const;

private:
   bool in_window(std::uint64_t instance) const;
   std::size_t majority() const { return senders_.size() / 2 + 1; }
   std::vector<BlockId> snapshot_votes(const std::map<ValidatorId, BlockId>& snap, bool intersect_live) const;
   void emit(int grade, std::span<const BlockId> votes, Tick at, std::vector<GradedOutput>& out);

   GAConfig                            config_;
   std::uint64_t                       index_;
   const core::BlockTree*              tree_;
   std::map<ValidatorId, GAMessage>    latest_;   // counted message per sender
   std::map<std::pair<ValidatorId, std::uint64_t>, BlockId> first_log_;
   std::set<ValidatorId>               senders_;
   std::set<ValidatorId>               equivocators_;
   std::map<ValidatorId, BlockId>      snap_early_;  // V_Δ
   std::map<ValidatorId, BlockId>      snap_late_;   // V_2Δ (three-grade only)
   std::vector<GradedOutput>           outputs_;
   Tick                                last_tick_ = -1;
};

/// Senders with two messages carrying different logs for the same instance.
std::set<ValidatorId> tally_equivocators(std::span<const GAMessage> messages);

} // namespace ssf::ga
