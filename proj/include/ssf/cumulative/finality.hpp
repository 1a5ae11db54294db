#pragma once

#include <ssf/core/block_tree.hpp>
#include <ssf/ffg/casper.hpp>

#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace ssf::cumulative {

/// native: rotating participation without accumulation. mod1: large validators lose guaranteed
/// inclusion and vote once per window. mod2: large stake split evenly over the window, every slot.
/// mod3: full-stake votes every slot, each validator counted at most once per block.
enum class Modification { native, mod1, mod2, mod3 };

const char* to_string(Modification m);
/// @throws ConfigError
Modification modification_from_string(const std::string& s);

/// Stakes in ETH indexed by validator id, plus the guaranteed-inclusion threshold M.
struct StakeDistribution {
   std::vector<double> stakes;
   double              threshold = 4096.0;

   /// @throws ConfigError
   void validate() const;
   double total() const;
};

struct CommitteeSample {
   Slot                     slot = 0;
   std::vector<ValidatorId> members;
   std::vector<double>      effective;  ///< stake each member contributes this slot

   double total() const;
};

/**
 * Committee for `slot`. Validators with stake >= M are always in (mod2: with stake/window;
 * mod1: in exactly one keyed slot per window); everyone else independently with probability
 * stake/M.
 */
CommitteeSample sample_committee(const StakeDistribution& dist, Slot slot, Modification mod, std::uint64_t seed,
                                 Slot window = 32);

/// Attested stake per block under one modification. Holds a reference to the tree.
class FinalityLedger {
public:
   FinalityLedger(Modification mod, const core::BlockTree& tree) : mod_(mod), tree_(&tree) {}

   /// Every member of the sample votes for `voted` in `sample.slot`. @throws UnknownBlock
   void accumulate(const CommitteeSample& sample, const BlockId& voted);
   void accumulate_vote(ValidatorId v, double stake, Slot slot, const BlockId& voted);

   double attested_stake(const BlockId& b) const;
   /// Attested stake of `b` counting only votes cast in slots <= `slot`.
   double attested_stake_at(const BlockId& b, Slot slot) const;
   Modification modification() const { return mod_; }
   const core::BlockTree& tree() const { return *tree_; }

private:
   void add(const BlockId& b, double stake, Slot slot);
   bool attested_by(ValidatorId v, const BlockId& b) const;

   Modification                                                    mod_;
   const core::BlockTree*                                          tree_;
   std::unordered_map<BlockId, std::map<Slot, double>, BlockIdHash> history_;  // slot -> stake added
   std::unordered_map<ValidatorId, std::vector<BlockId>>           frontier_;  // mod3: attested tips
};

struct CurvePoint {
   Slot   depth = 0;   ///< slots of voting since the proposal, counting its own slot
   double cost = 0.0;  ///< ETH that must be slashed to revert
};

/// Cost at depth d = stake attested by the end of slot block.slot + d - 1, divided by 3.
/// @throws UnknownBlock
std::vector<CurvePoint> attack_cost_curve(const FinalityLedger& ledger, const BlockId& block, Slot max_depth);

/// Stake that must be slashed to revert `block` under the ledger. @throws ffg::NotFinalized when unattested
double min_reversion_stake(const FinalityLedger& ledger, const BlockId& block);

/// Large/small split used for the worked example: 512 validators of 4608 ETH (2,359,296 ETH) always
/// eligible, and 8192 fresh 32 ETH validators (262,144 ETH) in each slot's committee; M = 4096, window 32.
struct Chapter7Fixture {
   std::size_t large_count = 512;
   double      large_stake = 4608.0;
   std::size_t small_per_slot = 8192;
   double      small_stake = 32.0;
   double      threshold = 4096.0;
   Slot        window = 32;

   double large_total() const { return static_cast<double>(large_count) * large_stake; }
   double small_total() const { return static_cast<double>(small_per_slot) * small_stake; }
   CommitteeSample committee(Slot slot, Modification mod, std::uint64_t seed) const;
};

/// Runs `slots` slots on a single chain (one block per slot, each committee voting for the newest
/// block) and returns the curve of the first block for depths 0..slots.
std::vector<CurvePoint> chain_curve(Modification mod, Slot slots, const std::function<CommitteeSample(Slot)>& committee);

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& curve, Modification mod, bool header = true);

} // namespace ssf::cumulative
