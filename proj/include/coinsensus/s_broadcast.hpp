#pragma once

#include "coinsensus/core.hpp"

namespace coinsensus {

// S-Broadcast: single-value echo broadcast. Output is one monotone
// boolean flag per (tag, value) instance, true at 2t+1 distinct senders.
struct SbcState {
  InstanceTag tag;
  Val watched_value = Val::Zero;
  std::uint64_t senders = 0;
  bool broadcast_done = false;
  bool svalue = false;
  bool inited = false;
};

inline SbcState s_init(InstanceTag tag, Val v, bool should_broadcast, Effects& out) {
  SbcState st;
  st.tag = tag;
  st.watched_value = v;
  st.inited = true;
  if (should_broadcast) {
    st.broadcast_done = true;
    out.push_back(fx_broadcast(make_sval(tag, v, 0)));
  }
  return st;
}

inline void s_on_sval(const SystemParams& p, SbcState& st, Pid sender, Effects& out) {
  const std::uint64_t bit = 1ull << sender;
  if (st.senders & bit) return;
  st.senders |= bit;
  const int count = __builtin_popcountll(st.senders);
  if (count >= p.quorum_t1() && !st.broadcast_done) {
    st.broadcast_done = true;
    out.push_back(fx_broadcast(make_sval(st.tag, st.watched_value, 0)));
  }
  if (count >= p.quorum_2t1() && !st.svalue) {
    st.svalue = true;
    Effect e;
    e.kind = Effect::Kind::SvalueTrue;
    e.tag = st.tag;
    e.value = st.watched_value;
    out.push_back(e);
  }
}

}  // namespace coinsensus
