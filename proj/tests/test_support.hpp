#pragma once

#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "coinsensus/core.hpp"
#include "coinsensus/process_common.hpp"

namespace coinsensus::testing {

// Minimal deterministic FIFO bus for driving a handful of process state
// machines directly in unit tests (the full simulator has its own tests).
// Coin requests are answered immediately with a caller-chosen value.
template <class P>
class FifoBus {
 public:
  using CoinFn = std::function<Val(Round)>;

  explicit FifoBus(CoinFn coin) : coin_(std::move(coin)) {}

  void add(P proc) { procs_.push_back(std::move(proc)); }

  P& at(std::size_t i) { return procs_[i]; }
  std::size_t size() const { return procs_.size(); }

  void propose_all(const std::vector<Val>& vals) {
    for (std::size_t i = 0; i < procs_.size(); ++i)
      handle(i, procs_[i].step(Input::propose(vals[i])));
  }

  // Byzantine injection: deliver an arbitrary message to one recipient.
  void inject(std::size_t recipient, const Message& m) {
    queue_.push_back({recipient, m});
  }

  // Delivers until quiescent or the step budget is exhausted.
  // Returns the number of deliveries performed.
  int drain(int budget = 100000) {
    int steps = 0;
    while (!queue_.empty() && steps < budget) {
      auto [rcpt, msg] = queue_.front();
      queue_.pop_front();
      handle(rcpt, procs_[rcpt].step(Input::deliver(msg)));
      ++steps;
    }
    return steps;
  }

  int broadcasts_total() const { return broadcasts_; }

 private:
  void handle(std::size_t origin, Effects fx) {
    for (const Effect& e : fx) {
      switch (e.kind) {
        case Effect::Kind::Broadcast:
          ++broadcasts_;
          for (std::size_t r = 0; r < procs_.size(); ++r) queue_.push_back({r, e.msg});
          break;
        case Effect::Kind::RequestCoin:
          handle(origin, procs_[origin].step(Input::coin(e.round, coin_(e.round))));
          break;
        default:
          break;  // Decide and notifications need no bus action
      }
    }
  }

  CoinFn coin_;
  std::vector<P> procs_;
  std::deque<std::pair<std::size_t, Message>> queue_;
  int broadcasts_ = 0;
};

// Collects effect kinds for single-module tests.
inline std::vector<Message> broadcasts_of(const Effects& fx) {
  std::vector<Message> out;
  for (const Effect& e : fx)
    if (e.kind == Effect::Kind::Broadcast) out.push_back(e.msg);
  return out;
}

inline int count_kind(const Effects& fx, Effect::Kind k) {
  int c = 0;
  for (const Effect& e : fx)
    if (e.kind == k) ++c;
  return c;
}

}  // namespace coinsensus::testing
