#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <unordered_set>
#include <vector>

#include "coinsensus/s_broadcast.hpp"
#include "coinsensus/sbv_broadcast.hpp"

namespace coinsensus {

// Bounded exhaustive exploration of one broadcast abstraction instance at
// n=4, t=1 (process 3 Byzantine). Every interleaving of message deliveries
// is explored, with memoization on canonical states and symmetry pruning
// over same-input non-faulty processes.
//
// The Byzantine injection menu is maximal within the bounded message
// universe: the Byzantine process has every (kind, value) message to every
// recipient pending from the start, and any pending Byzantine message may
// remain undelivered in a terminal state. Any weaker per-recipient
// equivocation pattern is therefore a sub-behavior of the explored space.

enum class CheckTarget : std::uint8_t { Bv, Sbv, Sbc };

inline const char* to_string(CheckTarget t) {
  switch (t) {
    case CheckTarget::Bv: return "bv";
    case CheckTarget::Sbv: return "sbv";
    case CheckTarget::Sbc: return "sbc";
  }
  return "?";
}

struct CheckConfig {
  CheckTarget target = CheckTarget::Bv;
  // bv/sbv: the value each non-faulty process inputs.
  std::array<Val, 3> inputs{Val::One, Val::One, Val::One};
  // sbc: each process opens instances for both values; sbc_true[i] is the
  // set of values process i initiates with should_broadcast=true.
  std::array<ValSet, 3> sbc_true{};
  bool byz = true;
  // Deterministic exploration bound. BV and S targets exhaust their full
  // space well below it; the SBV space is larger and gets a bounded (but
  // deterministic and reported) prefix.
  std::uint64_t max_states = 3'000'000;

  void validate() const {
    if (target == CheckTarget::Sbc) {
      for (ValSet s : sbc_true)
        if ((s & ~kBothBinary) != 0) throw ConfigError("sbc initiation sets must be binary");
    } else {
      for (Val v : inputs)
        if (!is_binary(v)) throw ConfigError("checker inputs must be binary");
    }
  }
};

struct CheckProperty {
  std::string name;
  bool holds = true;
  bool vacuous = false;  // precondition not met by these inputs
  std::string detail;
  std::vector<std::string> counterexample;  // delivery sequence to failure
};

struct CheckReport {
  CheckTarget target = CheckTarget::Bv;
  std::uint64_t states = 0;
  std::uint64_t transitions = 0;
  std::uint64_t terminals = 0;
  bool truncated = false;
  std::vector<CheckProperty> properties;

  bool all_hold() const {
    for (const auto& p : properties)
      if (!p.holds) return false;
    return !truncated;
  }
};

class Checker {
 public:
  explicit Checker(CheckConfig cfg) : cfg_(cfg), p_(SystemParams::validate(4, 1)) {
    cfg_.validate();
    p_.set_faulty(3);
  }

  CheckReport run() {
    setup_properties();
    World w;
    init_world(w);
    dfs(w);
    CheckReport rep;
    rep.target = cfg_.target;
    rep.states = states_;
    rep.transitions = transitions_;
    rep.terminals = terminals_;
    rep.truncated = truncated_;
    rep.properties = props_;
    return rep;
  }

 private:
  static constexpr Pid kByz = 3;

  struct World {
    std::array<BvState, 3> bv;
    std::array<SbvState, 3> sbv;
    std::array<std::array<SbcState, 2>, 3> sbc;
    std::array<std::uint8_t, 3> aux_val{0xff, 0xff, 0xff};  // value sent in own AUX
    std::uint64_t sent = 0;
    std::uint64_t delivered = 0;
  };

  // Slot universe: kind 0 = BVAL (bv/sbv) or SVAL (sbc), kind 1 = AUX.
  static constexpr int slot_id(int kind, int origin, int value, int rcpt) {
    return ((kind * 4 + origin) * 2 + value) * 3 + rcpt;
  }
  static constexpr int slot_kind(int id) { return id / 24; }
  static constexpr int slot_origin(int id) { return (id / 6) % 4; }
  static constexpr int slot_value(int id) { return (id / 3) % 2; }
  static constexpr int slot_rcpt(int id) { return id % 3; }

  std::string describe(int id) const {
    const char* kind = slot_kind(id) == 1 ? "AUX"
                       : cfg_.target == CheckTarget::Sbc ? "SVAL"
                                                         : "BVAL";
    return std::string(kind) + "(" + std::to_string(slot_value(id)) + ") p" +
           std::to_string(slot_origin(id)) + "->p" + std::to_string(slot_rcpt(id));
  }

  void mark_sent(World& w, int kind, int origin, int value) {
    for (int r = 0; r < 3; ++r) w.sent |= 1ull << slot_id(kind, origin, value, r);
  }

  // Broadcast effects from a non-faulty process extend the sent universe.
  void absorb(World& w, Pid origin, const Effects& fx) {
    for (const Effect& e : fx) {
      if (e.kind != Effect::Kind::Broadcast) continue;
      const int value = static_cast<int>(e.msg.value);
      if (e.msg.kind == MsgKind::Aux) {
        w.aux_val[origin] = static_cast<std::uint8_t>(value);
        mark_sent(w, 1, origin, value);
      } else {
        mark_sent(w, 0, origin, value);
      }
    }
  }

  void init_world(World& w) {
    const InstanceTag tag =
        cfg_.target == CheckTarget::Sbc ? InstanceTag::est(1) : InstanceTag::stage(1, 0);
    for (Pid i = 0; i < 3; ++i) {
      Effects fx;
      switch (cfg_.target) {
        case CheckTarget::Bv:
          w.bv[i] = bv_init(tag, cfg_.inputs[i], fx);
          break;
        case CheckTarget::Sbv:
          w.sbv[i] = sbv_init(tag, cfg_.inputs[i], false, fx);
          break;
        case CheckTarget::Sbc:
          for (int v = 0; v < 2; ++v)
            w.sbc[i][v] = s_init(tag, static_cast<Val>(v),
                                 set_contains(cfg_.sbc_true[i], static_cast<Val>(v)), fx);
          break;
      }
      absorb(w, i, fx);
    }
    if (cfg_.byz) {
      for (int v = 0; v < 2; ++v) {
        mark_sent(w, 0, kByz, v);
        if (cfg_.target == CheckTarget::Sbv) mark_sent(w, 1, kByz, v);
      }
    }
  }

  void deliver(World& w, int id) {
    w.delivered |= 1ull << id;
    const Pid origin = static_cast<Pid>(slot_origin(id));
    const Val v = static_cast<Val>(slot_value(id));
    const Pid r = static_cast<Pid>(slot_rcpt(id));
    Effects fx;
    switch (cfg_.target) {
      case CheckTarget::Bv:
        bv_on_bval(p_, w.bv[r], origin, v, fx);
        break;
      case CheckTarget::Sbv:
        if (slot_kind(id) == 0)
          sbv_on_bval(p_, w.sbv[r], origin, v, 0, ViewSelection::Union, fx);
        else
          sbv_on_aux(p_, w.sbv[r], origin, v, 0, ViewSelection::Union, fx);
        break;
      case CheckTarget::Sbc:
        s_on_sval(p_, w.sbc[r][static_cast<int>(v)], origin, fx);
        break;
    }
    absorb(w, r, fx);
  }

  // ---- canonical keys -----------------------------------------------------

  using Key = std::array<std::uint8_t, 40>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      Fnv h;
      for (std::uint8_t b : k) h.update(b);
      return static_cast<std::size_t>(h.hash);
    }
    struct Fnv {
      std::uint64_t hash = 0xcbf29ce484222325ull;
      void update(std::uint8_t b) {
        hash ^= b;
        hash *= 0x100000001b3ull;
      }
    };
  };

  static std::uint8_t permute_mask(std::uint64_t mask, const std::array<int, 3>& perm) {
    std::uint8_t out = 0;
    for (int i = 0; i < 3; ++i)
      if ((mask >> i) & 1u) out |= static_cast<std::uint8_t>(1u << perm[i]);
    if ((mask >> kByz) & 1u) out |= 1u << kByz;
    return out;
  }

  // Serializes the world with non-faulty process identities renamed by
  // perm (old id -> new id). AUX arrival order is omitted: under union
  // view selection, future behavior depends only on the per-sender first
  // value and the completion snapshot, both captured here.
  void serialize(const World& w, const std::array<int, 3>& perm, Key& out) const {
    out.fill(0);
    std::array<int, 3> inv{};
    for (int i = 0; i < 3; ++i) inv[perm[i]] = i;
    std::size_t pos = 0;
    auto put = [&](std::uint8_t b) { out[pos++] = b; };
    for (int slot = 0; slot < 3; ++slot) {
      const int i = inv[slot];
      switch (cfg_.target) {
        case CheckTarget::Bv: {
          const BvState& st = w.bv[i];
          for (int v = 0; v < 3; ++v) put(permute_mask(st.senders_of[v], perm));
          put(st.echoed);
          put(st.bin_values);
          break;
        }
        case CheckTarget::Sbv: {
          const SbvState& st = w.sbv[i];
          for (int v = 0; v < 3; ++v) put(permute_mask(st.bv.senders_of[v], perm));
          put(st.bv.echoed);
          put(st.bv.bin_values);
          put(static_cast<std::uint8_t>((st.aux_sent ? 1 : 0) | (st.completed ? 2 : 0)));
          put(st.view);
          put(w.aux_val[i]);
          std::array<std::uint8_t, 4> rx{0xff, 0xff, 0xff, 0xff};
          for (const auto& [sender, v] : st.aux_order)
            rx[sender] = static_cast<std::uint8_t>(v);
          for (int s = 0; s < 3; ++s) put(rx[inv[s]]);
          put(rx[kByz]);
          break;
        }
        case CheckTarget::Sbc: {
          for (int v = 0; v < 2; ++v) {
            const SbcState& st = w.sbc[i][v];
            put(permute_mask(st.senders, perm));
            put(static_cast<std::uint8_t>((st.broadcast_done ? 1 : 0) | (st.svalue ? 2 : 0)));
          }
          break;
        }
      }
    }
  }

  Key canon(const World& w) const {
    static constexpr std::array<std::array<int, 3>, 6> kPerms{{
        {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    Key best;
    bool have = false;
    Key cur;
    for (const auto& perm : kPerms) {
      // Renaming old id i to perm[i] is a symmetry iff inputs line up.
      bool ok = true;
      for (int i = 0; i < 3; ++i) {
        if (cfg_.target == CheckTarget::Sbc) {
          if (cfg_.sbc_true[i] != cfg_.sbc_true[perm[i]]) ok = false;
        } else if (cfg_.inputs[i] != cfg_.inputs[perm[i]]) {
          ok = false;
        }
      }
      if (!ok) continue;
      serialize(w, perm, cur);
      if (!have || cur < best) {
        best = cur;
        have = true;
      }
    }
    return best;
  }

  // ---- properties ---------------------------------------------------------

  enum PropIdx {
    // bv
    kBvTermination = 0, kBvJustification, kBvUniformity, kBvObligation, kBvSingleValue,
    // sbv
    kSbvTermination = 0, kSbvObligation, kSbvJustification, kSbvInclusion, kSbvSingleton,
    kSbvUniformity, kSbvBinvalues,
    // sbc
    kSTermination = 0, kSJustification, kSUniformity, kSObligation,
  };

  void setup_properties() {
    const bool unanimous = cfg_.inputs[0] == cfg_.inputs[1] && cfg_.inputs[1] == cfg_.inputs[2];
    switch (cfg_.target) {
      case CheckTarget::Bv:
        props_ = {{"BV-Termination"}, {"BV-Justification"}, {"BV-Uniformity"},
                  {"BV-Obligation"}, {"BV-Single-value"}};
        if (!unanimous) {
          props_[kBvSingleValue].vacuous = true;
          props_[kBvSingleValue].detail = "inputs not unanimous; holds vacuously";
        }
        break;
      case CheckTarget::Sbv:
        props_ = {{"SBV-Termination"}, {"SBV-Obligation"}, {"SBV-Justification"},
                  {"SBV-Inclusion"}, {"SBV-Singleton"}, {"SBV-Uniformity"}, {"SBV-Binvalues"}};
        if (!unanimous) {
          props_[kSbvUniformity].vacuous = true;
          props_[kSbvUniformity].detail = "inputs not unanimous; holds vacuously";
        }
        break;
      case CheckTarget::Sbc: {
        props_ = {{"S-Termination"}, {"S-Justification"}, {"S-Uniformity"}, {"S-Obligation"}};
        bool some_quorum = false;
        for (int v = 0; v < 2; ++v) some_quorum |= initiators(static_cast<Val>(v)) >= p_.quorum_t1();
        if (!some_quorum) {
          props_[kSObligation].vacuous = true;
          props_[kSObligation].detail = "no value has t+1 initiators; holds vacuously";
        }
        break;
      }
    }
  }

  int initiators(Val v) const {
    int c = 0;
    if (cfg_.target == CheckTarget::Sbc) {
      for (ValSet s : cfg_.sbc_true)
        if (set_contains(s, v)) ++c;
    } else {
      for (Val in : cfg_.inputs)
        if (in == v) ++c;
    }
    return c;
  }

  bool input_value(Val v) const { return initiators(v) > 0; }

  void fail(int idx, const std::string& detail) {
    CheckProperty& pr = props_[idx];
    if (!pr.holds) return;
    pr.holds = false;
    pr.detail = detail;
    pr.counterexample = path_;
  }

  void check_invariants(const World& w) {
    switch (cfg_.target) {
      case CheckTarget::Bv:
        for (int i = 0; i < 3; ++i)
          for (int v = 0; v < 2; ++v)
            if (set_contains(w.bv[i].bin_values, static_cast<Val>(v)) &&
                !input_value(static_cast<Val>(v)))
              fail(kBvJustification, "Byzantine-only value " + std::to_string(v) +
                                         " in bin_values of p" + std::to_string(i));
        break;
      case CheckTarget::Sbv: {
        for (int i = 0; i < 3; ++i) {
          for (int v = 0; v < 2; ++v)
            if (set_contains(w.sbv[i].bin_values(), static_cast<Val>(v)) &&
                !input_value(static_cast<Val>(v)))
              fail(kSbvJustification, "Byzantine-only value " + std::to_string(v) +
                                          " in bin_values of p" + std::to_string(i));
          if (!w.sbv[i].completed) continue;
          if (w.sbv[i].view == 0) fail(kSbvObligation, "empty view at p" + std::to_string(i));
          for (int v = 0; v < 3; ++v)
            if (set_contains(w.sbv[i].view, static_cast<Val>(v)) &&
                !input_value(static_cast<Val>(v)))
              fail(kSbvJustification,
                   "unjustified value " + to_string(static_cast<Val>(v)) + " in view of p" +
                       std::to_string(i));
        }
        for (int i = 0; i < 3; ++i) {
          if (!w.sbv[i].completed || set_size(w.sbv[i].view) != 1) continue;
          const Val v = set_single(w.sbv[i].view);
          for (int j = 0; j < 3; ++j) {
            if (j == i || !w.sbv[j].completed) continue;
            if (!set_contains(w.sbv[j].view, v))
              fail(kSbvInclusion, "view p" + std::to_string(i) + "={" + to_string(v) +
                                      "} not included in view p" + std::to_string(j) + "=" +
                                      to_string_set(w.sbv[j].view));
            if (set_size(w.sbv[j].view) == 1 && set_single(w.sbv[j].view) != v)
              fail(kSbvSingleton, "disjoint singleton views at p" + std::to_string(i) + " and p" +
                                      std::to_string(j));
          }
        }
        break;
      }
      case CheckTarget::Sbc:
        for (int i = 0; i < 3; ++i)
          for (int v = 0; v < 2; ++v)
            if (w.sbc[i][v].svalue && initiators(static_cast<Val>(v)) == 0)
              fail(kSJustification, "svalue(" + std::to_string(v) +
                                        ") true without a non-faulty initiator at p" +
                                        std::to_string(i));
        break;
    }
  }

  // Runs at states with no pending non-faulty-origin message: the run can
  // legitimately end here with the remaining Byzantine messages withheld.
  void check_terminal(const World& w) {
    const bool unanimous = cfg_.inputs[0] == cfg_.inputs[1] && cfg_.inputs[1] == cfg_.inputs[2];
    switch (cfg_.target) {
      case CheckTarget::Bv: {
        for (int i = 0; i < 3; ++i)
          if (w.bv[i].bin_values == 0)
            fail(kBvObligation, "empty bin_values at quiescence at p" + std::to_string(i));
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            if (w.bv[i].bin_values != w.bv[j].bin_values)
              fail(kBvUniformity, "bin_values differ at quiescence: p" + std::to_string(i) + "=" +
                                      to_string_set(w.bv[i].bin_values) + " p" +
                                      std::to_string(j) + "=" +
                                      to_string_set(w.bv[j].bin_values));
        if (unanimous)
          for (int i = 0; i < 3; ++i)
            if (w.bv[i].bin_values != val_bit(cfg_.inputs[0]))
              fail(kBvSingleValue, "unanimous input but bin_values=" +
                                       to_string_set(w.bv[i].bin_values) + " at p" +
                                       std::to_string(i));
        break;
      }
      case CheckTarget::Sbv: {
        ValSet all_views = 0;
        for (int i = 0; i < 3; ++i) {
          if (!w.sbv[i].completed)
            fail(kSbvTermination, "p" + std::to_string(i) + " not completed at quiescence");
          all_views |= w.sbv[i].view;
        }
        for (int i = 0; i < 3; ++i)
          if ((all_views & ~w.sbv[i].bin_values()) != 0)
            fail(kSbvBinvalues, "view value missing from bin_values of p" + std::to_string(i));
        if (unanimous)
          for (int i = 0; i < 3; ++i)
            if (w.sbv[i].completed && w.sbv[i].view != val_bit(cfg_.inputs[0]))
              fail(kSbvUniformity, "unanimous input but view=" + to_string_set(w.sbv[i].view) +
                                       " at p" + std::to_string(i));
        break;
      }
      case CheckTarget::Sbc:
        for (int v = 0; v < 2; ++v) {
          bool any = false, all = true;
          for (int i = 0; i < 3; ++i) {
            any |= w.sbc[i][v].svalue;
            all &= w.sbc[i][v].svalue;
          }
          if (any && !all)
            fail(kSUniformity, "svalue(" + std::to_string(v) + ") true at some but not all");
          if (initiators(static_cast<Val>(v)) >= p_.quorum_t1() && !all)
            fail(kSObligation, "t+1 initiators for " + std::to_string(v) +
                                   " but svalue false somewhere at quiescence");
        }
        break;
    }
  }

  // ---- exploration --------------------------------------------------------

  void dfs(World& w) {
    if (truncated_) return;
    if (!visited_.insert(canon(w)).second) return;
    if (visited_.size() > cfg_.max_states) {
      truncated_ = true;
      return;
    }
    ++states_;
    check_invariants(w);
    const std::uint64_t pending = w.sent & ~w.delivered;
    bool quiescent = true;
    for (std::uint64_t rest = pending; rest; rest &= rest - 1)
      if (slot_origin(__builtin_ctzll(rest)) != static_cast<int>(kByz)) quiescent = false;
    if (quiescent) {
      ++terminals_;
      check_terminal(w);
    }
    for (std::uint64_t rest = pending; rest; rest &= rest - 1) {
      const int id = __builtin_ctzll(rest);
      World w2 = w;
      deliver(w2, id);
      ++transitions_;
      path_.push_back(describe(id));
      dfs(w2);
      path_.pop_back();
      if (truncated_) return;
    }
  }

  CheckConfig cfg_;
  SystemParams p_;
  std::vector<CheckProperty> props_;
  std::vector<std::string> path_;
  std::unordered_set<Key, KeyHash> visited_;
  std::uint64_t states_ = 0;
  std::uint64_t transitions_ = 0;
  std::uint64_t terminals_ = 0;
  bool truncated_ = false;
};

inline CheckReport check(const CheckConfig& cfg) { return Checker(cfg).run(); }

}  // namespace coinsensus
