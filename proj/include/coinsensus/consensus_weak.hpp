#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "coinsensus/process_common.hpp"
#include "coinsensus/sbv_broadcast.hpp"

namespace coinsensus {

enum class WeakMode : std::uint8_t { Baseline, Optimized };

// Per-round pipeline of the weak-coin algorithm: SBV stage[r,0], AUXSET
// exchange, est in {0,1,bot}, SBV stage[r,1], coin, decide/adopt.
//
// Optimized mode skips initial BVAL broadcasts where the previous round's
// bin_values (or both binary values in stage[r,0]) already justify the
// value, carrying it directly in the AUX message.
class WeakProcess {
 public:
  WeakProcess(SystemParams params, Pid self, WeakMode mode, ViewSelection sel,
              ProcessObserver* obs = nullptr)
      : p_(params), self_(self), mode_(mode), sel_(sel), obs_(obs) {}

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

  // The value this process would adopt if the coin resolved now; nullopt
  // when the adoption is fully coin-determined.
  std::optional<Val> pending_estimate(Round round) const {
    if (round != r_ || r_ == 0) return is_binary(est_) ? std::optional<Val>(est_) : std::nullopt;
    const RoundCtx& c = ctx(r_);
    if (c.view2_done) {
      if (set_contains(c.view2, Val::Zero)) return Val::Zero;
      if (set_contains(c.view2, Val::One)) return Val::One;
      return std::nullopt;
    }
    return is_binary(est_) ? std::optional<Val>(est_) : std::nullopt;
  }

 private:
  enum class Wait : std::uint8_t { View0, View1, View2, Coin };

  struct RoundCtx {
    SbvState stage0;
    SbvState stage1;
    bool carried = false;  // stage0 initialized without a BVAL broadcast
    bool stage1_inited = false;
    std::vector<std::pair<Pid, ValSet>> auxsets;  // arrival order
    std::uint64_t auxset_mask = 0;
    bool view1_done = false;
    ValSet view1 = 0;
    bool view2_done = false;
    ValSet view2 = 0;
    bool coin_requested = false;
    std::optional<Val> coin;
  };

  RoundCtx& ctx(Round r) { return rounds_[r - 1]; }
  const RoundCtx& ctx(Round r) const { return rounds_[r - 1]; }

  void violation(const std::string& check, const std::string& detail) {
    if (obs_) obs_->on_violation(self_, check, detail);
  }

  // Justification extension for AUX values of stage[r,0]: the binary part
  // of the previous round's stage[r-1,1] bin_values (optimized mode only).
  ValSet extra0(Round r) const {
    if (mode_ != WeakMode::Optimized || r < 2) return 0;
    return static_cast<ValSet>(ctx(r - 1).stage1.bin_values() & kBinaryMask);
  }

  // Justification extension for bot in stage[r,1]: both binary values
  // justified in stage[r,0].
  ValSet extra1(Round r) const {
    if (mode_ != WeakMode::Optimized) return 0;
    const ValSet j0 = ctx(r).stage0.bin_values() | extra0(r);
    return (j0 & kBothBinary) == kBothBinary ? val_bit(Val::Bot) : 0;
  }

  void emit(Effects& raw, Effects& out) {
    for (Effect& e : raw) {
      if (e.kind == Effect::Kind::Broadcast) {
        e.msg.sender = self_;
        out.push_back(e);
      }
      // Notification effects are internal; pipeline state is re-read from
      // the instance structs instead.
    }
    raw.clear();
  }

  void do_propose(Val v, Effects& out) {
    if (proposed_) throw DuplicateProposal("propose called twice");
    if (!is_binary(v)) throw ConfigError("proposal must be binary");
    proposed_ = true;
    est_ = v;
    start_round(1, out);
    pump(out);
  }

  void start_round(Round r, Effects& out) {
    r_ = r;
    if (!is_binary(est_)) {
      violation("Lemma2-binary-estimate", "round " + std::to_string(r) + " started with est=" +
                                              to_string(est_));
      est_ = Val::Zero;
    }
    if (obs_) obs_->on_round_start(self_, r, est_);
    rounds_.emplace_back();
    RoundCtx& c = ctx(r);
    const bool skip0 = mode_ == WeakMode::Optimized && r >= 2 && is_binary(est_) &&
                       set_contains(ctx(r - 1).stage1.bin_values(), est_);
    Effects raw;
    c.stage0 = sbv_init(InstanceTag::stage(r, 0), est_, skip0, raw);
    c.carried = skip0;
    emit(raw, out);
    wait_ = Wait::View0;
    replay_buffer(out);
  }

  void replay_buffer(Effects& out) {
    std::vector<Message> pending;
    pending.swap(buffer_);
    for (const Message& m : pending) do_deliver(m, out);
  }

  void do_deliver(const Message& m, Effects& out) {
    switch (m.kind) {
      case MsgKind::Bval:
      case MsgKind::Aux: {
        if (m.tag.kind != InstanceTag::Kind::Stage) {
          ++dropped_;
          return;
        }
        if (m.tag.phase > 1 || (m.tag.phase == 0 && !is_binary(m.value)) ||
            static_cast<int>(m.value) > 2 || m.tag.round == 0) {
          ++dropped_;
          return;
        }
        const Round r = m.tag.round;
        if (r > r_ || (r == r_ && m.tag.phase == 1 && !ctx(r).stage1_inited)) {
          buffer_.push_back(m);
          return;
        }
        RoundCtx& c = ctx(r);
        SbvState& st = m.tag.phase == 0 ? c.stage0 : c.stage1;
        const ValSet extra = m.tag.phase == 0 ? extra0(r) : extra1(r);
        Effects raw;
        if (m.kind == MsgKind::Bval)
          sbv_on_bval(p_, st, m.sender, m.value, extra, sel_, raw);
        else
          sbv_on_aux(p_, st, m.sender, m.value, extra, sel_, raw);
        emit(raw, out);
        pump(out);
        break;
      }
      case MsgKind::AuxSet: {
        if ((m.set & ~kBothBinary) != 0 || (m.set & kBothBinary) == 0 || m.tag.round == 0) {
          ++dropped_;  // malformed sets from Byzantine senders
          return;
        }
        const Round r = m.tag.round;
        if (r > r_) {
          buffer_.push_back(m);
          return;
        }
        RoundCtx& c = ctx(r);
        const std::uint64_t bit = 1ull << m.sender;
        if (!(c.auxset_mask & bit)) {
          c.auxset_mask |= bit;
          c.auxsets.emplace_back(m.sender, m.set);
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

  // Advances the current round's pipeline as far as the received state
  // allows. Older rounds have no pending waits.
  void pump(Effects& out) {
    if (r_ == 0) return;
    bool progress = true;
    while (progress) {
      progress = false;
      RoundCtx& c = ctx(r_);
      Effects raw;
      switch (wait_) {
        case Wait::View0: {
          // The carry justification (previous round's stage[r-1,1]
          // bin_values) can grow after this round started. A process that
          // missed the carry window BVALs alone while the carriers send no
          // BVAL at all, so its AUX would wait on bin_values forever. Send
          // the AUX from the justified set instead: immediately once the
          // own estimate becomes carry-justified, or with any justified
          // value once t+1 senders' justified AUX entries show the round
          // has moved on without us.
          if (mode_ == WeakMode::Optimized && !c.stage0.aux_sent &&
              c.stage0.bin_values() == 0) {
            const ValSet j0 = extra0(r_);
            if (j0 != 0) {
              std::optional<Val> w;
              if (is_binary(est_) && set_contains(j0, est_)) {
                w = est_;
              } else {
                std::uint64_t valid = 0;
                for (const auto& [sender, v] : c.stage0.aux_order)
                  if (set_contains(j0, v)) valid |= 1ull << sender;
                if (__builtin_popcountll(valid) >= p_.quorum_t1())
                  w = set_contains(j0, Val::Zero) ? Val::Zero : Val::One;
              }
              if (w) {
                c.stage0.aux_sent = true;
                raw.push_back(fx_broadcast(make_aux(InstanceTag::stage(r_, 0), *w, 0)));
              }
            }
          }
          if (!c.stage0.completed) sbv_recheck(p_, c.stage0, extra0(r_), sel_, raw);
          emit(raw, out);
          if (!c.stage0.completed) break;
          ValSet view0 = c.stage0.view;
          if ((view0 & kBothBinary) == 0) {
            violation("SBV-Obligation", "empty/non-binary view0 in round " + std::to_string(r_));
            break;
          }
          if (set_contains(view0, Val::Bot)) {
            violation("BV-Justification", "bot in stage[r,0] view");
            view0 &= kBinaryMask;
          }
          out.push_back(fx_broadcast(make_auxset(r_, view0, self_)));
          wait_ = Wait::View1;
          progress = true;
          break;
        }
        case Wait::View1: {
          const ValSet justified = static_cast<ValSet>((c.stage0.bin_values() | extra0(r_)) &
                                                       kBinaryMask);
          std::uint64_t valid = 0;
          for (const auto& [sender, set] : c.auxsets)
            if ((set & ~justified) == 0) valid |= 1ull << sender;
          if (__builtin_popcountll(valid) < p_.quorum_nt()) break;
          ValSet view1 = 0;
          if (sel_ == ViewSelection::Union) {
            for (const auto& [sender, set] : c.auxsets)
              if ((set & ~justified) == 0) view1 |= set;
          } else {
            std::uint64_t taken = 0;
            for (const auto& [sender, set] : c.auxsets) {
              if ((set & ~justified) != 0) continue;
              view1 |= set;
              taken |= 1ull << sender;
              if (__builtin_popcountll(taken) >= p_.quorum_nt()) break;
            }
          }
          c.view1_done = true;
          c.view1 = view1;
          est_ = set_size(view1) == 1 ? set_single(view1) : Val::Bot;
          if (obs_) obs_->on_stage1_input(self_, r_, est_);
          // est=bot implies view1 held both binary values, so bot is always
          // justified (extra1) and its AUX can go out immediately.
          const bool skip1 = mode_ == WeakMode::Optimized && est_ == Val::Bot;
          c.stage1 = sbv_init(InstanceTag::stage(r_, 1), est_, skip1, raw);
          if (mode_ == WeakMode::Optimized) {
            // bot justification in stage[r,1] never goes through bin_values,
            // so the echo path is not needed for it; suppressing the echo
            // keeps the per-round broadcast count bounded.
            c.stage1.bv.echoed |= val_bit(Val::Bot);
          }
          c.stage1_inited = true;
          emit(raw, out);
          wait_ = Wait::View2;
          replay_buffer(out);
          progress = true;
          break;
        }
        case Wait::View2: {
          // Mixed stage[r,1] inputs can leave a binary estimate short of the
          // 2t+1 BVAL senders its AUX needs while the bot estimates already
          // sent theirs without any BVAL. Once t+1 senders' bot AUX entries
          // are justified here, no view of this round can be the binary
          // singleton anymore, so falling back to AUX(bot) is harmless and
          // restores progress.
          if (mode_ == WeakMode::Optimized && !c.stage1.aux_sent &&
              c.stage1.bin_values() == 0 && extra1(r_) != 0) {
            std::uint64_t bots = 0;
            for (const auto& [sender, v] : c.stage1.aux_order)
              if (v == Val::Bot) bots |= 1ull << sender;
            if (__builtin_popcountll(bots) >= p_.quorum_t1()) {
              c.stage1.aux_sent = true;
              raw.push_back(fx_broadcast(make_aux(InstanceTag::stage(r_, 1), Val::Bot, 0)));
            }
          }
          if (!c.stage1.completed) sbv_recheck(p_, c.stage1, extra1(r_), sel_, raw);
          emit(raw, out);
          if (!c.stage1.completed) break;
          c.view2 = c.stage1.view;
          c.view2_done = true;
          if (obs_) obs_->on_view(self_, r_, c.view2);
          if ((c.view2 & kBothBinary) == kBothBinary)
            violation("Lemma5-one-sided", "view2 contains both binary values in round " +
                                              std::to_string(r_));
          if (c.view2 == 0) violation("SBV-Obligation", "empty view2");
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
          const Val s = *c.coin;
          const ValSet v2 = c.view2;
          if (v2 == val_bit(Val::Zero) || v2 == val_bit(Val::One)) {
            const Val v = set_single(v2);
            est_ = v;
            if (!decided_) {
              decided_ = {v, r_};
              out.push_back(fx_decide(v, r_));
            }
          } else if (set_size(static_cast<ValSet>(v2 & kBinaryMask)) == 1 &&
                     set_contains(v2, Val::Bot)) {
            est_ = set_single(static_cast<ValSet>(v2 & kBinaryMask));
          } else if (v2 == val_bit(Val::Bot)) {
            est_ = s;
          } else {
            // Already reported; recover with any binary member or the coin.
            est_ = set_contains(v2, Val::Zero) ? Val::Zero
                   : set_contains(v2, Val::One) ? Val::One
                                                : s;
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
  WeakMode mode_;
  ViewSelection sel_;
  ProcessObserver* obs_;

  bool proposed_ = false;
  Round r_ = 0;
  Val est_ = Val::Zero;
  Wait wait_ = Wait::View0;
  std::optional<std::pair<Val, Round>> decided_;
  std::vector<RoundCtx> rounds_;
  std::vector<Message> buffer_;
  std::uint64_t dropped_ = 0;
};

}  // namespace coinsensus
