#pragma once

#include <ssf/tob/validator.hpp>

#include <json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ssf::netsim {

enum class AdversaryKind { none, equivocate, withhold_reveal, split_view, crash_leader };

const char* to_string(AdversaryKind k);
AdversaryKind adversary_kind_from_string(const std::string& s);

/// Extra FFG votes an equivocating adversary injects next to its regular vote.
enum class FFGInjection { none, double_vote, surround };

struct AdversaryPolicy {
   AdversaryKind            kind = AdversaryKind::none;
   std::vector<ValidatorId> validators;   ///< adversary set
   Tick                     reveal_delay = 4;
   std::vector<ValidatorId> partition;    ///< SPLIT_VIEW: one side; everyone else is the other side
   FFGInjection             ffg_injection = FFGInjection::none;
   bool                     equivocate_proposals = false;  ///< EQUIVOCATE leaders also split their proposal

   bool contains(ValidatorId v) const;
};

/// Per-validator [sleep, wake) intervals, disjoint and ordered.
struct SleepSchedule {
   std::map<ValidatorId, std::vector<std::pair<Tick, Tick>>> intervals;

   bool awake(ValidatorId v, Tick t) const;
   /// First tick >= t at which v is awake.
   Tick next_awake(ValidatorId v, Tick t) const;
};

enum class TraceLevel { summary, full };

struct NetworkConfig {
   std::string                  name = "scenario";
   tob::Variant                 variant = tob::Variant::ssf;
   std::size_t                  n = 4;
   Slot                         slots = 10;
   Tick                         delta = 1;
   Tick                         gst = 0;
   std::uint64_t                seed = 0;
   Slot                         kappa = 6;
   std::optional<std::uint64_t> eta;
   tob::LeaderSchedule::Kind    leaders = tob::LeaderSchedule::Kind::round_robin;
   std::vector<ffg::Stake>      stakes;  ///< empty = 32 per validator
   AdversaryPolicy              adversary;
   SleepSchedule                sleep;
   TraceLevel                   trace_level = TraceLevel::summary;

   /// @throws ConfigError naming the offending field
   void validate() const;
   Tick end_tick() const;
};

struct TraceEvent {
   Tick           tick = 0;
   std::int64_t   validator = -1;  ///< -1 for the global observer
   std::string    kind;
   nlohmann::json data;
};

/// Ordered event log. The first event is a "meta" record describing the run.
struct Trace {
   std::vector<TraceEvent> events;

   void write_jsonl(std::ostream& os) const;
   std::string to_jsonl() const;
   static Trace read_jsonl(std::istream& is);
};

/**
 * Delivery tick of a message sent at `sent_at` from `from` to `to`, ignoring sleep.
 * After GST the delay is drawn uniformly from [1, delta]. Before GST it is at most
 * gst + delta; SPLIT_VIEW keeps each side synchronous and holds cross-partition traffic until
 * exactly gst + delta.
 */
Tick schedule_delivery(const NetworkConfig& cfg, Tick sent_at, ValidatorId from, ValidatorId to,
                       std::uint64_t msg_index);

/// A message as it leaves the adversary: who receives it and when it is released.
struct Outgoing {
   tob::Message                  msg;
   std::vector<ValidatorId>      recipients;
   std::optional<Tick>           release_at;  ///< for honest recipients; coalition gets it next tick
   std::string                   injected;    ///< offense kind this message was built to commit
};

/// What a rushing adversary sees when it acts on one of its own messages.
struct AdversaryView {
   std::size_t                         n = 0;
   std::uint64_t                       seed = 0;
   const tob::Validator*               self = nullptr;
   const std::vector<ffg::FFGVote>*    previous_ffg = nullptr; ///< the sender's earlier regular FFG votes
};

/// Rewrites one message produced by an adversarial validator's honest logic.
std::vector<Outgoing> adversary_act(const AdversaryPolicy& policy, Tick tick, const tob::Message& produced,
                                    const AdversaryView& view);

/// @throws ConfigError
Trace run(const NetworkConfig& cfg);

struct BlockMetrics {
   BlockId             id;
   Slot                slot = 0;
   ValidatorId         proposer = 0;
   bool                honest = true;
   bool                proposal = false;  ///< carried by a proposal message
   std::optional<Slot> confirmed;
   std::optional<Slot> justified;
   std::optional<Slot> finalized;
   std::optional<Slot> ssf_finalized;
   std::optional<Slot> decided;
   bool                reorged = false;
};

struct Metrics {
   std::string               name;
   std::string               variant;
   std::size_t               n = 0;
   Slot                      slots = 0;
   int                       rounds_per_slot = 0;
   std::vector<BlockMetrics> blocks;  ///< in trace order
   std::size_t               honest_reorgs = 0;
   std::size_t               conflicting_finalized = 0;
   std::size_t               conflicting_ssf_finalized = 0;
   std::size_t               conflicting_decided = 0;
   std::size_t               ga_grade1_conflicts = 0;
   std::size_t               offenses = 0;
   std::size_t               honest_offenses = 0;
   std::size_t               injected = 0;
   std::size_t               injected_detected = 0;
   std::size_t               messages = 0;
   std::map<std::int64_t, std::size_t> justify_latency;   ///< slots after proposal -> block count
   std::map<std::int64_t, std::size_t> finalize_latency;
   std::map<std::int64_t, std::size_t> ssf_finalize_latency;
   std::map<std::int64_t, std::size_t> confirm_latency;
   std::map<std::int64_t, std::size_t> decide_latency;

   std::size_t safety_violations() const {
      return conflicting_finalized + conflicting_ssf_finalized + conflicting_decided + ga_grade1_conflicts;
   }
   double msgs_per_slot_per_validator() const;

   /// One row per honest proposal block; stable column order.
   void write_csv(std::ostream& os) const;
};

Metrics evaluate(const Trace& trace);

} // namespace ssf::netsim
