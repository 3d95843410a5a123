#pragma once

#include "coinsensus/core.hpp"

namespace coinsensus {

// Binary-value broadcast: echo a value once it has t+1 distinct senders,
// deliver it into bin_values at 2t+1. bin_values only grows.
struct BvState {
  InstanceTag tag;
  std::array<std::uint64_t, 3> senders_of{};  // per value, bitmask of senders
  ValSet echoed = 0;      // values this process has broadcast (init or echo)
  ValSet bin_values = 0;  // values with 2t+1 distinct senders
  bool inited = false;

  int sender_count(Val v) const {
    return __builtin_popcountll(senders_of[static_cast<int>(v)]);
  }
};

// skip_broadcast supports the optimized weak mode: the instance starts
// with v already marked echoed but emits no BVAL.
inline BvState bv_init(InstanceTag tag, Val v, Effects& out, bool skip_broadcast = false) {
  BvState st;
  st.tag = tag;
  st.inited = true;
  st.echoed = val_bit(v);
  if (!skip_broadcast) out.push_back(fx_broadcast(make_bval(tag, v, 0)));
  return st;
}

inline void bv_on_bval(const SystemParams& p, BvState& st, Pid sender, Val v, Effects& out) {
  auto& mask = st.senders_of[static_cast<int>(v)];
  const std::uint64_t bit = 1ull << sender;
  if (mask & bit) return;  // per-sender dedup
  mask |= bit;
  const int count = __builtin_popcountll(mask);
  if (count >= p.quorum_t1() && !set_contains(st.echoed, v)) {
    st.echoed |= val_bit(v);
    out.push_back(fx_broadcast(make_bval(st.tag, v, 0)));
  }
  if (count >= p.quorum_2t1() && !set_contains(st.bin_values, v)) {
    st.bin_values |= val_bit(v);
    Effect e;
    e.kind = Effect::Kind::BinValueAdded;
    e.value = v;
    e.tag = st.tag;
    out.push_back(e);
  }
}

}  // namespace coinsensus
