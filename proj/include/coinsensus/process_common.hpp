#pragma once

#include <optional>
#include <string>

#include "coinsensus/core.hpp"

namespace coinsensus {

// Hooks the harness observer uses to audit lemma-level invariants while a
// run executes. Protocol violations are reported here, never thrown.
class ProcessObserver {
 public:
  virtual ~ProcessObserver() = default;
  virtual void on_round_start(Pid /*pid*/, Round /*round*/, Val /*est*/) {}
  virtual void on_stage1_input(Pid /*pid*/, Round /*round*/, Val /*est*/) {}
  virtual void on_view(Pid /*pid*/, Round /*round*/, ValSet /*view*/) {}
  virtual void on_violation(Pid /*pid*/, const std::string& /*check*/,
                            const std::string& /*detail*/) {}
};

// Uniform driver input: a delivered message, a coin value, or the local
// proposal trigger.
struct Input {
  enum class Kind : std::uint8_t { Propose, Deliver, Coin } kind = Kind::Deliver;
  Message msg;            // Deliver
  Round round = 0;        // Coin
  Val value = Val::Zero;  // Propose / Coin

  static Input propose(Val v) {
    Input in;
    in.kind = Kind::Propose;
    in.value = v;
    return in;
  }
  static Input deliver(Message m) {
    Input in;
    in.kind = Kind::Deliver;
    in.msg = m;
    return in;
  }
  static Input coin(Round r, Val v) {
    Input in;
    in.kind = Kind::Coin;
    in.round = r;
    in.value = v;
    return in;
  }
};

}  // namespace coinsensus
