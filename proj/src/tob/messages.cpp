#include <ssf/tob/messages.hpp>

namespace ssf::tob {

int rounds_per_slot(Variant v) {
   switch (v) {
      case Variant::baseline_4d: return 4;
      case Variant::prob_3d: return 3;
      case Variant::fastconfirm: return 4;
      case Variant::ssf: return 4;
      case Variant::streamlined: return 3;
   }
   return 4;
}

const char* to_string(Variant v) {
   switch (v) {
      case Variant::baseline_4d: return "baseline_4d";
      case Variant::prob_3d: return "prob_3d";
      case Variant::fastconfirm: return "fastconfirm";
      case Variant::ssf: return "ssf";
      case Variant::streamlined: return "streamlined";
   }
   return "?";
}

Variant variant_from_string(const std::string& s) {
   for (auto v : {Variant::baseline_4d, Variant::prob_3d, Variant::fastconfirm, Variant::ssf, Variant::streamlined})
      if (s == to_string(v)) return v;
   throw Error("unknown variant '" + s + "'");
}

bool uses_ffg(Variant v) { return v == Variant::ssf || v == Variant::streamlined; }

const char* kind_of(const Payload& p) {
   struct {
      const char* operator()(const Proposal&) const { return "proposal"; }
      const char* operator()(const HeadVote&) const { return "ga-input"; }
      const char* operator()(const ffg::FFGVote&) const { return "ffg-vote"; }
      const char* operator()(const ffg::Ack&) const { return "ack"; }
   } visitor;
   return std::visit(visitor, p);
}

Slot slot_of(const Payload& p) {
   struct {
      Slot operator()(const Proposal& x) const { return x.slot; }
      Slot operator()(const HeadVote& x) const { return x.instance; }
      Slot operator()(const ffg::FFGVote& x) const { return x.cast_at; }
      Slot operator()(const ffg::Ack& x) const { return x.target.slot; }
   } visitor;
   return std::visit(visitor, p);
}

std::size_t quorum_size(std::size_t n) { return (2 * n + 2) / 3; }

} // namespace ssf::tob
