#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "coinsensus/process_common.hpp"
#include "coinsensus/s_broadcast.hpp"
#include "coinsensus/sbv_broadcast.hpp"  // ViewSelection

namespace coinsensus {

// Strong-coin algorithm: persistent per-value monotone flags from
// S-Broadcast, one new S-Broadcast per round for the negation of the
// previous coin, an AUX exchange, decide only on the coin's value.
class StrongProcess {
 public:
  StrongProcess(SystemParams params, Pid self, ViewSelection sel, ProcessObserver* obs = nullptr)
      : p_(params), self_(self), sel_(sel), obs_(obs) {}

  Effects step(const Input& in) {
    Effects out;
    switch (in.kind) {
      case Input::Kind::Propose: do_propose(in.value, out); break;
      case Input::Kind::Deliver: do_deliver(in.msg, out); break;
      case Input::Kind::Coin: do_coin(in.round, in.value, out); break;
    }
    return out;
  }

  Round round() const { return r_; }
  std::optional<std::pair<Val, Round>> decided() const { return decided_; }
  std::uint64_t dropped() const { return dropped_; }

  std::optional<Val> pending_estimate(Round) const { return std::nullopt; }

 private:
  enum class Wait : std::uint8_t { Flag, View, Coin };

  struct RoundCtx {
    std::vector<std::pair<Pid, Val>> aux;  // arrival order, first per sender
    std::uint64_t aux_mask = 0;
    bool aux_sent = false;
    bool view_done = false;
    ValSet view = 0;
    bool coin_requested = false;
    std::optional<Val> coin;
  };

  using InstKey = std::pair<Round, int>;  // (tag round, value index)

  RoundCtx& ctx(Round r) { return rounds_[r - 1]; }

  void violation(const std::string& check, const std::string& detail) {
    if (obs_) obs_->on_violation(self_, check, detail);
  }

  bool flag(Val v) const {
    auto it = insts_.find({binptr_round_[static_cast<int>(v)], static_cast<int>(v)});
    return it != insts_.end() && it->second.svalue;
  }

  void emit(Effects& raw, Effects& out) {
    for (Effect& e : raw) {
      if (e.kind == Effect::Kind::Broadcast) {
        e.msg.sender = self_;
        out.push_back(e);
      }
    }
    raw.clear();
  }

  void make_instance(Round r, Val v, bool should_broadcast, Effects& out) {
    const InstKey key{r, static_cast<int>(v)};
    if (insts_.count(key)) throw DuplicateInit("S-Broadcast instance exists");
    Effects raw;
    insts_[key] = s_init(InstanceTag::est(r), v, should_broadcast, raw);
    binptr_round_[static_cast<int>(v)] = r;
    emit(raw, out);
  }

  void do_propose(Val v, Effects& out) {
    if (proposed_) throw DuplicateProposal("propose called twice");
    if (!is_binary(v)) throw ConfigError("proposal must be binary");
    proposed_ = true;
    s_ = negate(v);
    support_coin_ = false;
    make_instance(1, s_, /*should_broadcast=*/false, out);
    start_round(1, out);
    pump(out);
  }

  void start_round(Round r, Effects& out) {
    r_ = r;
    if (obs_) obs_->on_round_start(self_, r, negate(s_));
    rounds_.emplace_back();
    const Val nb = negate(s_);
    // binptr[s] keeps its previous-round flag; only the negation of the
    // previous coin gets a fresh instance.
    if (!insts_.count({r, static_cast<int>(nb)}))
      make_instance(r, nb, /*should_broadcast=*/!support_coin_, out);
    wait_ = Wait::Flag;
    replay_buffer(out);
  }

  void replay_buffer(Effects& out) {
    std::vector<Message> pending;
    pending.swap(buffer_);
    for (const Message& m : pending) do_deliver(m, out);
  }

  void do_deliver(const Message& m, Effects& out) {
    switch (m.kind) {
      case MsgKind::Sval: {
        if (m.tag.kind != InstanceTag::Kind::Est || !is_binary(m.value) || m.tag.round == 0) {
          ++dropped_;
          return;
        }
        const Round r = m.tag.round;
        if (r > r_) {
          buffer_.push_back(m);
          return;
        }
        auto it = insts_.find({r, static_cast<int>(m.value)});
        if (it == insts_.end()) {
          ++dropped_;  // no instance for this value was ever created
          return;
        }
        Effects raw;
        s_on_sval(p_, it->second, m.sender, raw);
        emit(raw, out);
        pump(out);
        break;
      }
      case MsgKind::AuxBin: {
        if (!is_binary(m.value) || m.tag.round == 0) {
          ++dropped_;
          return;
        }
        const Round r = m.tag.round;
        if (r > r_) {
          buffer_.push_back(m);
          return;
        }
        RoundCtx& c = ctx(r);
        const std::uint64_t bit = 1ull << m.sender;
        if (!(c.aux_mask & bit)) {
          c.aux_mask |= bit;
          c.aux.emplace_back(m.sender, m.value);
        }
        pump(out);
        break;
      }
      default:
        ++dropped_;
        return;
    }
  }

  void do_coin(Round r, Val s, Effects& out) {
    if (!is_binary(s) || r == 0 || r > r_) {
      ++dropped_;
      return;
    }
    ctx(r).coin = s;
    pump(out);
  }

  void pump(Effects& out) {
    if (r_ == 0) return;
    bool progress = true;
    while (progress) {
      progress = false;
      RoundCtx& c = ctx(r_);
      switch (wait_) {
        case Wait::Flag: {
          if (!flag(Val::Zero) && !flag(Val::One)) break;
          // Strict first-match case order: supportcoin, binptr[0], binptr[1].
          Val w;
          if (support_coin_)
            w = s_;
          else if (flag(Val::Zero))
            w = Val::Zero;
          else
            w = Val::One;
          c.aux_sent = true;
          out.push_back(fx_broadcast(make_auxbin(r_, w, self_)));
          wait_ = Wait::View;
          progress = true;
          break;
        }
        case Wait::View: {
          std::uint64_t valid = 0;
          for (const auto& [sender, v] : c.aux)
            if (flag(v)) valid |= 1ull << sender;
          if (__builtin_popcountll(valid) < p_.quorum_nt()) break;
          ValSet view = 0;
          if (sel_ == ViewSelection::Union) {
            for (const auto& [sender, v] : c.aux)
              if (flag(v)) view |= val_bit(v);
          } else {
            std::uint64_t taken = 0;
            for (const auto& [sender, v] : c.aux) {
              if (!flag(v)) continue;
              view |= val_bit(v);
              taken |= 1ull << sender;
              if (__builtin_popcountll(taken) >= p_.quorum_nt()) break;
            }
          }
          c.view_done = true;
          c.view = view;
          if (view == 0) violation("ProtocolViolation", "empty view in round " + std::to_string(r_));
          if (obs_) obs_->on_view(self_, r_, view);
          if (!c.coin_requested) {
            c.coin_requested = true;
            out.push_back(fx_request_coin(r_));
          }
          wait_ = Wait::Coin;
          progress = true;
          break;
        }
        case Wait::Coin: {
          if (!c.coin) break;
          const Val s_new = *c.coin;
          const ValSet view = c.view;
          s_ = s_new;
          if (view == val_bit(s_new)) {
            support_coin_ = true;
            if (!decided_) {
              decided_ = {s_new, r_};
              out.push_back(fx_decide(s_new, r_));
            }
          } else if (view == kBothBinary) {
            support_coin_ = true;
          } else {
            support_coin_ = false;
          }
          start_round(r_ + 1, out);
          progress = true;
          break;
        }
      }
    }
  }

  SystemParams p_;
  Pid self_;
  ViewSelection sel_;
  ProcessObserver* obs_;

  bool proposed_ = false;
  Round r_ = 0;
  Val s_ = Val::Zero;
  bool support_coin_ = false;
  Wait wait_ = Wait::Flag;
  std::optional<std::pair<Val, Round>> decided_;
  std::map<InstKey, SbcState> insts_;
  std::array<Round, 2> binptr_round_{0, 0};
  std::vector<RoundCtx> rounds_;
  std::vector<Message> buffer_;
  std::uint64_t dropped_ = 0;
};

}  // namespace coinsensus
