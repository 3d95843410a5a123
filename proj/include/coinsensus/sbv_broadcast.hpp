#pragma once

#include "coinsensus/bv_broadcast.hpp"

namespace coinsensus {

// How the view set is assembled once n-t justified AUX senders exist.
// Union takes every currently justified entry; FirstQuorum takes the
// first n-t justified entries in delivery order.
enum class ViewSelection : std::uint8_t { Union, FirstQuorum };

// SBV-Broadcast: BV-Broadcast, one AUX broadcast of a bin_values member,
// then a view assembled from n-t distinct justified AUX senders.
struct SbvState {
  BvState bv;
  bool aux_sent = false;
  bool completed = false;
  ValSet view = 0;
  std::uint64_t aux_mask = 0;                    // senders heard from
  std::vector<std::pair<Pid, Val>> aux_order;    // arrival order, first per sender

  ValSet bin_values() const { return bv.bin_values; }
};

namespace detail {

// Completion check. `extra` widens justification beyond bin_values
// (optimized weak mode; empty in baseline). Emits ViewReady once.
inline void sbv_check_complete(const SystemParams& p, SbvState& st, ValSet extra,
                               ViewSelection sel, Effects& out) {
  if (st.completed) return;
  const ValSet justified = st.bv.bin_values | extra;
  std::uint64_t valid_senders = 0;
  for (const auto& [sender, v] : st.aux_order)
    if (set_contains(justified, v)) valid_senders |= 1ull << sender;
  if (__builtin_popcountll(valid_senders) < p.quorum_nt()) return;
  st.completed = true;
  ValSet view = 0;
  if (sel == ViewSelection::Union) {
    for (const auto& [sender, v] : st.aux_order)
      if (set_contains(justified, v)) view |= val_bit(v);
  } else {
    std::uint64_t taken = 0;
    for (const auto& [sender, v] : st.aux_order) {
      if (!set_contains(justified, v)) continue;
      view |= val_bit(v);
      taken |= 1ull << sender;
      if (__builtin_popcountll(taken) >= p.quorum_nt()) break;
    }
  }
  st.view = view;
  Effect e;
  e.kind = Effect::Kind::ViewReady;
  e.view = view;
  e.tag = st.bv.tag;
  out.push_back(e);
}

}  // namespace detail

// skip_bval implements the optimized path: no BVAL broadcast, the value
// goes out directly in an AUX message.
inline SbvState sbv_init(InstanceTag tag, Val v, bool skip_bval, Effects& out) {
  SbvState st;
  st.bv = bv_init(tag, v, out, skip_bval);
  if (skip_bval) {
    st.aux_sent = true;
    out.push_back(fx_broadcast(make_aux(tag, v, 0)));
  }
  return st;
}

inline void sbv_on_bval(const SystemParams& p, SbvState& st, Pid sender, Val v, ValSet extra,
                        ViewSelection sel, Effects& out) {
  const std::size_t before = out.size();
  bv_on_bval(p, st.bv, sender, v, out);
  // A value entering bin_values triggers the single AUX broadcast and can
  // justify previously held AUX entries.
  bool grew = false;
  for (std::size_t i = before; i < out.size(); ++i) {
    if (out[i].kind != Effect::Kind::BinValueAdded) continue;
    grew = true;
    if (!st.aux_sent) {
      st.aux_sent = true;
      out.push_back(fx_broadcast(make_aux(st.bv.tag, out[i].value, 0)));
    }
  }
  if (grew) detail::sbv_check_complete(p, st, extra, sel, out);
}

inline void sbv_on_aux(const SystemParams& p, SbvState& st, Pid sender, Val v, ValSet extra,
                       ViewSelection sel, Effects& out) {
  const std::uint64_t bit = 1ull << sender;
  if (st.aux_mask & bit) return;  // first AUX per sender counts
  st.aux_mask |= bit;
  st.aux_order.emplace_back(sender, v);
  detail::sbv_check_complete(p, st, extra, sel, out);
}

// Re-evaluates completion after the caller's justification set grew.
inline void sbv_recheck(const SystemParams& p, SbvState& st, ValSet extra, ViewSelection sel,
                        Effects& out) {
  detail::sbv_check_complete(p, st, extra, sel, out);
}

}  // namespace coinsensus
