#pragma once

#include <ssf/core/block_tree.hpp>
#include <ssf/ffg/casper.hpp>
#include <ssf/ga/graded_agreement.hpp>

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ssf::tob {

enum class Variant { baseline_4d, prob_3d, fastconfirm, ssf, streamlined };

int rounds_per_slot(Variant v);
const char* to_string(Variant v);
/// Accepts the lowercase names used in scenario files ("ssf", "baseline_4d", ...).
Variant variant_from_string(const std::string& s);
bool uses_ffg(Variant v);

/// Evidence that `signers` (at least ceil(2n/3) of the full set) voted in the subtree of `block` during `slot`.
struct QuorumCert {
   BlockId                  block;
   Slot                     slot = 0;
   std::vector<ValidatorId> signers;

   bool operator==(const QuorumCert&) const = default;
};

struct Proposal {
   ValidatorId                    proposer = 0;
   Slot                           slot = 0;
   core::Block                    block;
   BlockId                        b_c;
   std::optional<QuorumCert>      q_c;
   std::optional<ffg::Checkpoint> lj;

   bool operator==(const Proposal&) const = default;
};

/// A head vote is the validator's input to the slot's GA instance (instance = slot).
using HeadVote = ga::GAMessage;

using Payload = std::variant<Proposal, HeadVote, ffg::FFGVote, ffg::Ack>;

/// A protocol message together with the blocks a recipient needs to interpret it.
struct Message {
   ValidatorId              from = 0;
   Tick                     sent_at = 0;
   Payload                  payload;
   std::vector<core::Block> blocks;
};

const char* kind_of(const Payload& p);
Slot slot_of(const Payload& p);

std::size_t quorum_size(std::size_t n); ///< ceil(2n/3)

} // namespace ssf::tob
