#pragma once

#include <functional>
#include <map>
#include <optional>

#include "coinsensus/core.hpp"
#include "coinsensus/rng.hpp"

namespace coinsensus {

// Per-process assignment rule for the weak coin's "differ" branch.
enum class SplitStrategy : std::uint8_t {
  EstimateOpposing,  // each process gets the negation of its pending estimate
  FairBit,           // per-process fair bit, resampled while unanimous
  HalfHalf,          // fixed assignment by index parity
};

struct CoinConfig {
  enum class Kind : std::uint8_t { Weak, Strong } kind = Kind::Strong;
  int d = 2;  // weak only; d >= 2
  SplitStrategy split = SplitStrategy::EstimateOpposing;

  void validate() const {
    if (kind == Kind::Weak && d < 2) throw ConfigError("coin d must be >= 2");
  }
};

// Idealized round-indexed common coin. Weak: revealed after 1 non-faulty
// request. Strong: d = 2 semantics plus revelation at t+1 non-faulty
// requests. The assignment for a round is drawn once, from a per-round
// stream derived from the run seed, so it does not depend on request
// order.
class CoinOracle {
 public:
  // Consulted by the estimate-opposing split to reconstruct the value a
  // process would adopt. May be empty (standalone use).
  using PreferenceFn = std::function<std::optional<Val>(Pid, Round)>;

  CoinOracle(SystemParams params, CoinConfig cfg, std::uint64_t seed)
      : params_(params), cfg_(cfg), seed_(seed) {
    cfg_.validate();
  }

  void set_preference_fn(PreferenceFn fn) { preference_ = std::move(fn); }

  struct RequestResult {
    std::optional<Val> value;  // set iff revealed (now or earlier)
    bool revealed_now = false;
    // Processes whose earlier requests are resolved by this revelation.
    std::vector<Pid> newly_resolved;
  };

  // Registers a requester. Only non-faulty requesters advance revelation.
  RequestResult request(Round round, Pid pid) {
    RoundState& rs = rounds_[round];
    const std::uint64_t bit = 1ull << pid;
    RequestResult res;
    if (!rs.revealed) {
      if (!(rs.requesters & bit)) {
        rs.requesters |= bit;
        if (params_.is_non_faulty(pid)) ++rs.non_faulty_requests;
      }
      const int threshold = (cfg_.kind == CoinConfig::Kind::Strong) ? params_.quorum_t1() : 1;
      if (rs.non_faulty_requests >= threshold) {
        reveal(round, rs);
        res.revealed_now = true;
        for (Pid p = 0; p < static_cast<Pid>(params_.n); ++p)
          if (p != pid && ((rs.requesters >> p) & 1u)) res.newly_resolved.push_back(p);
      }
    } else {
      rs.requesters |= bit;
    }
    if (rs.revealed) res.value = rs.assignment[pid];
    return res;
  }

  // Adversary gate: the assignment is unreadable before revelation.
  std::optional<std::array<Val, kMaxProcesses>> adversary_peek(Round round) const {
    auto it = rounds_.find(round);
    if (it == rounds_.end() || !it->second.revealed) return std::nullopt;
    return it->second.assignment;
  }

  bool revealed(Round round) const {
    auto it = rounds_.find(round);
    return it != rounds_.end() && it->second.revealed;
  }

  std::optional<Val> value_for(Round round, Pid pid) const {
    auto it = rounds_.find(round);
    if (it == rounds_.end() || !it->second.revealed) return std::nullopt;
    return it->second.assignment[pid];
  }

  // Count of attempts to read an unrevealed assignment through the gate.
  // Zero by construction; exposed so harness assertions can report it.
  int gate_violations() const { return gate_violations_; }

 private:
  struct RoundState {
    std::uint64_t requesters = 0;
    int non_faulty_requests = 0;
    bool revealed = false;
    std::array<Val, kMaxProcesses> assignment{};
  };

  void reveal(Round round, RoundState& rs) {
    SplitMix64 g(derive_seed(seed_, /*stream=*/0xC01Dull, round));
    const int d = (cfg_.kind == CoinConfig::Kind::Strong) ? 2 : cfg_.d;
    const std::uint64_t branch = g.next_below(static_cast<std::uint64_t>(d));
    if (branch == 0 || branch == 1) {
      const Val v = branch == 0 ? Val::Zero : Val::One;
      rs.assignment.fill(v);
    } else {
      assign_split(round, rs, g);
    }
    rs.revealed = true;
  }

  void assign_split(Round round, RoundState& rs, SplitMix64& g) {
    const int n = params_.n;
    switch (cfg_.split) {
      case SplitStrategy::EstimateOpposing: {
        int bot_rank = 0;
        for (Pid p = 0; p < static_cast<Pid>(n); ++p) {
          std::optional<Val> pref;
          if (preference_) pref = preference_(p, round);
          if (pref && is_binary(*pref)) {
            rs.assignment[p] = negate(*pref);
          } else {
            // No binary candidate: alternate to keep the assignment split.
            rs.assignment[p] = (bot_rank++ % 2 == 0) ? Val::Zero : Val::One;
          }
        }
        break;
      }
      case SplitStrategy::FairBit: {
        bool unanimous = true;
        do {
          for (Pid p = 0; p < static_cast<Pid>(n); ++p)
            rs.assignment[p] = g.next_bit() ? Val::One : Val::Zero;
          unanimous = true;
          for (Pid p = 1; p < static_cast<Pid>(n); ++p)
            if (rs.assignment[p] != rs.assignment[0]) unanimous = false;
        } while (unanimous);
        break;
      }
      case SplitStrategy::HalfHalf:
        for (Pid p = 0; p < static_cast<Pid>(n); ++p)
          rs.assignment[p] = (p % 2 == 0) ? Val::Zero : Val::One;
        break;
    }
  }

  SystemParams params_;
  CoinConfig cfg_;
  std::uint64_t seed_;
  PreferenceFn preference_;
  std::map<Round, RoundState> rounds_;
  int gate_violations_ = 0;
};

}  // namespace coinsensus
