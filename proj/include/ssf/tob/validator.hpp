#pragma once

#include <ssf/tob/messages.hpp>

#include <map>
#include <memory>
#include <set>

namespace ssf::tob {

struct NotLeader : Error {
   using Error::Error;
};

/// Deterministic seeded leader election: round robin by default, or a keyed pseudorandom draw.
class LeaderSchedule {
public:
   enum class Kind { round_robin, random };

   LeaderSchedule() = default;
   LeaderSchedule(Kind kind, std::size_t n, std::uint64_t seed) : kind_(kind), n_(n), seed_(seed) {}

   ValidatorId leader(Slot slot) const;
   Kind kind() const { return kind_; }

private:
   Kind          kind_ = Kind::round_robin;
   std::size_t   n_ = 1;
   std::uint64_t seed_ = 0;
};

struct ProtocolParams {
   Variant                      variant = Variant::ssf;
   std::size_t                  n = 4;
   Tick                         delta = 1;
   std::optional<std::uint64_t> eta;
   Slot                         kappa = 6;
   std::vector<ffg::Stake>      stakes; ///< FFG weights, one per validator
   LeaderSchedule               leaders;

   Tick slot_ticks() const { return rounds_per_slot(variant) * delta; }
   /// Start tick of slot s (slots are numbered from 1).
   Tick slot_start(Slot s) const { return static_cast<Tick>(s - 1) * slot_ticks(); }
   Slot slot_at(Tick t) const { return static_cast<Slot>(t / slot_ticks()) + 1; }
};

/// Protocol-visible state changes reported to the simulator.
struct ProtocolEvent {
   enum class Kind { ga_output, confirm, decide, justify, finalize, ssf_finalize };
   Kind                           kind;
   Slot                           slot = 0;  ///< slot the event belongs to (GA instance for ga_output)
   BlockId                        block;
   int                            grade = -1;
   std::optional<ffg::Checkpoint> checkpoint;
};

const char* to_string(ProtocolEvent::Kind k);

struct ValidatorState {
   ValidatorId                    me = 0;
   Variant                        variant = Variant::ssf;
   core::BlockTree                tree;
   BlockId                        b_c;        ///< highest fast-confirmed candidate
   BlockId                        b_c_prime;  ///< working copy adopted from proposals
   std::optional<QuorumCert>      q_c;
   BlockId                        lock;       ///< L_s of the current slot
   ffg::Checkpoint                lj;         ///< latest justified
   ffg::Checkpoint                lj_prime;   ///< stored latest justified used as FFG source
   std::map<ValidatorId, BlockId> support;        ///< V: head votes seen this slot
   std::map<ValidatorId, BlockId> support_prime;  ///< V': V stored at end of previous slot
   BlockId                        candidate;  ///< BASELINE/PROB_3D grade-0 candidate
   std::vector<BlockId>           decided;
   BlockId                        kappa_confirmed;

   explicit ValidatorState(ValidatorId id = 0, Variant v = Variant::ssf);
};

/**
 * One validator running a TOB variant. The simulator delivers messages with
 * `on_message` and advances time with `on_tick`; both return messages to broadcast.
 * The round operations are public so tests can step a slot by hand.
 */
class Validator {
public:
   Validator(ValidatorId me, std::shared_ptr<const ProtocolParams> params);
   Validator(const Validator&) = delete;
   Validator& operator=(const Validator&) = delete;

   std::vector<Message> on_message(const Message& m, Tick now);
   std::vector<Message> on_tick(Tick now, bool awake);

   /// Leader action at the start of `slot`. @throws NotLeader
   Proposal propose(Slot slot);
   /// Vote round: returns the head vote and, for STREAMLINED, the FFG vote.
   std::pair<HeadVote, std::optional<ffg::FFGVote>> vote(const Proposal* proposal, Slot slot, Tick now);
   /// Returns the confirmed block (if any) and its certificate.
   std::pair<std::optional<BlockId>, std::optional<QuorumCert>> fast_confirm(Slot slot);
   ffg::FFGVote ffg_vote(Slot slot);
   std::vector<BlockId> decide(Slot slot);
   std::optional<ffg::Ack> acknowledge(Slot slot);
   void end_of_slot(Slot slot);

   bool proposal_valid(const Proposal& p, Slot slot) const;

   const ValidatorState& state() const { return state_; }
   ValidatorState& mutable_state() { return state_; }
   const ffg::JustificationState& justification() const { return js_; }
   const ProtocolParams& params() const { return *params_; }
   const ga::GAInstance* ga(Slot slot) const;
   const std::optional<Proposal>& proposal_for(Slot slot) const;

   std::vector<ProtocolEvent> drain_events();
   /// Blocks created by this validator since the last call.
   std::vector<core::Block> drain_created_blocks();

private:
   ga::GAInstance& ensure_ga(Slot slot);
   void feed_vote(const HeadVote& v);
   void ingest_blocks(const std::vector<core::Block>& blocks);
   void tick_ga(Tick now);
   void on_ffg_vote(const ffg::FFGVote& v);
   void refresh_lj();
   std::optional<BlockId> ga_output(Slot instance, int grade) const;
   std::optional<QuorumCert> certificate_for(Slot slot, const BlockId& block) const;
   Message make_message(Payload p, Tick now, std::vector<core::Block> blocks = {}) const;

   ValidatorId                           me_;
   std::shared_ptr<const ProtocolParams> params_;
   ValidatorState                        state_;
   ffg::JustificationState               js_;
   ga::GAConfig                          ga_config_;
   std::map<Slot, ga::GAInstance>        ga_;
   std::map<Slot, std::vector<HeadVote>> vote_book_;
   std::map<Slot, std::optional<Proposal>> proposals_;
   std::optional<ffg::FFGVote>           last_ffg_;
   std::vector<ProtocolEvent>            events_;
   std::vector<core::Block>              created_;
   std::set<BlockId>                     confirmed_;
   Tick                                  now_ = 0;
};

} // namespace ssf::tob
