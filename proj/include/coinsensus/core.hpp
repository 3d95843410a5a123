#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace coinsensus {

// Protocol values. Bot is the "both binary values were seen" placeholder
// that may travel between the two SBV phases of the weak algorithm.
enum class Val : std::uint8_t { Zero = 0, One = 1, Bot = 2 };

constexpr Val negate(Val v) {
  return v == Val::Zero ? Val::One : (v == Val::One ? Val::Zero : Val::Bot);
}

constexpr bool is_binary(Val v) { return v == Val::Zero || v == Val::One; }

inline std::string to_string(Val v) {
  switch (v) {
    case Val::Zero: return "0";
    case Val::One: return "1";
    default: return "bot";
  }
}

// Small set over {0, 1, bot} as a bitmask. bit0 = 0, bit1 = 1, bit2 = bot.
using ValSet = std::uint8_t;

constexpr ValSet val_bit(Val v) { return static_cast<ValSet>(1u << static_cast<unsigned>(v)); }
constexpr bool set_contains(ValSet s, Val v) { return (s & val_bit(v)) != 0; }
constexpr ValSet kBothBinary = val_bit(Val::Zero) | val_bit(Val::One);
constexpr ValSet kBinaryMask = kBothBinary;

inline int set_size(ValSet s) { return __builtin_popcount(static_cast<unsigned>(s & 7u)); }

// Returns the unique element of a singleton set.
inline Val set_single(ValSet s) {
  if (s == val_bit(Val::Zero)) return Val::Zero;
  if (s == val_bit(Val::One)) return Val::One;
  if (s == val_bit(Val::Bot)) return Val::Bot;
  throw std::logic_error("set_single: not a singleton");
}

inline std::string to_string_set(ValSet s) {
  std::string out = "{";
  bool first = true;
  for (Val v : {Val::Zero, Val::One, Val::Bot}) {
    if (!set_contains(s, v)) continue;
    if (!first) out += ",";
    out += to_string(v);
    first = false;
  }
  return out + "}";
}

using Pid = std::uint32_t;
using Round = std::uint32_t;

constexpr Pid kMaxProcesses = 64;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DuplicateInit : std::logic_error {
  using std::logic_error::logic_error;
};
struct DuplicateProposal : std::logic_error {
  using std::logic_error::logic_error;
};

// System-wide parameters. Quorum helpers are the only thresholds the
// protocol layers are allowed to use.
struct SystemParams {
  int n = 0;
  int t = 0;
  std::uint64_t non_faulty_mask = 0;  // bit i set iff process i is designated correct

  static SystemParams validate(int n, int t) {
    if (n < 1 || t < 0) throw ConfigError("invalid n/t");
    if (3 * t >= n) throw ConfigError("t < n/3 violated");
    if (n > static_cast<int>(kMaxProcesses)) throw ConfigError("n too large");
    SystemParams p;
    p.n = n;
    p.t = t;
    p.non_faulty_mask = (n == 64) ? ~0ull : ((1ull << n) - 1);
    return p;
  }

  int quorum_t1() const { return t + 1; }
  int quorum_2t1() const { return 2 * t + 1; }
  int quorum_nt() const { return n - t; }

  bool is_non_faulty(Pid p) const { return (non_faulty_mask >> p) & 1u; }
  int non_faulty_count() const { return __builtin_popcountll(non_faulty_mask); }

  void set_faulty(Pid p) {
    non_faulty_mask &= ~(1ull << p);
    if (non_faulty_count() < n - t) throw ConfigError("more than t faulty processes");
  }
};

// Identifies one broadcast-abstraction instance.
// Stage tags belong to the weak algorithm (two SBV instances per round),
// Est tags to the strong algorithm (one S-Broadcast family per round).
struct InstanceTag {
  enum class Kind : std::uint8_t { Stage, Est } kind = Kind::Stage;
  Round round = 0;
  std::uint8_t phase = 0;  // meaningful for Stage only

  static InstanceTag stage(Round r, int phase) {
    return InstanceTag{Kind::Stage, r, static_cast<std::uint8_t>(phase)};
  }
  static InstanceTag est(Round r) { return InstanceTag{Kind::Est, r, 0}; }

  // Round-major, phase-minor total order. Tags of different kinds are
  // never compared across algorithm variants; ordering them by kind keeps
  // the comparison total anyway.
  auto operator<=>(const InstanceTag&) const = default;
};

inline std::string to_string(const InstanceTag& tag) {
  if (tag.kind == InstanceTag::Kind::Stage)
    return "stage[" + std::to_string(tag.round) + "," + std::to_string(tag.phase) + "]";
  return "est[" + std::to_string(tag.round) + "]";
}

enum class MsgKind : std::uint8_t { Bval, Sval, Aux, AuxSet, AuxBin };

inline const char* to_string(MsgKind k) {
  switch (k) {
    case MsgKind::Bval: return "BVAL";
    case MsgKind::Sval: return "SVAL";
    case MsgKind::Aux: return "AUX";
    case MsgKind::AuxSet: return "AUXSET";
    case MsgKind::AuxBin: return "AUXBIN";
  }
  return "?";
}

// Tagged wire message. AuxSet/AuxBin carry only a round (tag.round);
// the other kinds carry a full instance tag. AuxSet payloads live in
// `set` (a ValSet); all other payloads in `value`.
struct Message {
  MsgKind kind = MsgKind::Bval;
  InstanceTag tag;
  Val value = Val::Zero;
  ValSet set = 0;
  Pid sender = 0;

  Round round() const { return tag.round; }
  bool operator==(const Message&) const = default;
};

inline Message make_bval(InstanceTag tag, Val v, Pid sender) {
  return Message{MsgKind::Bval, tag, v, 0, sender};
}
inline Message make_aux(InstanceTag tag, Val v, Pid sender) {
  return Message{MsgKind::Aux, tag, v, 0, sender};
}
inline Message make_sval(InstanceTag tag, Val v, Pid sender) {
  return Message{MsgKind::Sval, tag, v, 0, sender};
}
inline Message make_auxset(Round r, ValSet s, Pid sender) {
  return Message{MsgKind::AuxSet, InstanceTag::stage(r, 0), Val::Zero, s, sender};
}
inline Message make_auxbin(Round r, Val v, Pid sender) {
  return Message{MsgKind::AuxBin, InstanceTag::est(r), v, 0, sender};
}

// Effects returned by state-machine steps. Step functions never perform
// I/O; the driver interprets these. Notification kinds (BinValueAdded,
// ViewReady, SvalueTrue) are consumed by the owning process driver and
// never reach the network.
struct Effect {
  enum class Kind : std::uint8_t {
    Broadcast,
    RequestCoin,
    Decide,
    BinValueAdded,
    ViewReady,
    SvalueTrue,
  } kind = Kind::Broadcast;
  Message msg;        // Broadcast
  Round round = 0;    // RequestCoin / Decide
  Val value = Val::Zero;  // Decide / BinValueAdded
  ValSet view = 0;    // ViewReady
  InstanceTag tag;    // notifications: originating instance
};

using Effects = std::vector<Effect>;

inline Effect fx_broadcast(Message m) {
  Effect e;
  e.kind = Effect::Kind::Broadcast;
  e.msg = m;
  return e;
}
inline Effect fx_request_coin(Round r) {
  Effect e;
  e.kind = Effect::Kind::RequestCoin;
  e.round = r;
  return e;
}
inline Effect fx_decide(Val v, Round r) {
  Effect e;
  e.kind = Effect::Kind::Decide;
  e.round = r;
  e.value = v;
  return e;
}

}  // namespace coinsensus
