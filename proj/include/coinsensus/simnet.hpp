#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "coinsensus/coin_oracle.hpp"
#include "coinsensus/consensus_strong.hpp"
#include "coinsensus/consensus_weak.hpp"
#include "coinsensus/trace.hpp"

namespace coinsensus {

enum class Algo : std::uint8_t { Weak, WeakOpt, Strong };
enum class SchedKind : std::uint8_t { Fifo, Random, Lifo, DelayTarget };
enum class ByzKind : std::uint8_t { Crash, Mute, Equivocate, Mirror, Scripted };

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::Weak: return "weak";
    case Algo::WeakOpt: return "weak-opt";
    case Algo::Strong: return "strong";
  }
  return "?";
}
inline const char* to_string(SchedKind s) {
  switch (s) {
    case SchedKind::Fifo: return "fifo";
    case SchedKind::Random: return "random";
    case SchedKind::Lifo: return "lifo";
    case SchedKind::DelayTarget: return "delay-target";
  }
  return "?";
}
inline const char* to_string(ByzKind b) {
  switch (b) {
    case ByzKind::Crash: return "crash";
    case ByzKind::Mute: return "mute";
    case ByzKind::Equivocate: return "equivocate";
    case ByzKind::Mirror: return "mirror";
    case ByzKind::Scripted: return "scripted";
  }
  return "?";
}

struct ScriptedMessage {
  Pid recipient = 0;
  Message msg;
};

struct RunConfig {
  SystemParams params;
  Algo algo = Algo::Weak;
  CoinConfig coin;
  std::vector<Val> proposals;  // indexed by pid; faulty entries ignored
  SchedKind sched = SchedKind::Fifo;
  std::vector<Pid> delay_targets;  // DelayTarget; default: lowest non-faulty pid
  int delay_cap = 0;               // 0 -> default (16 * n * n)
  ByzKind byz = ByzKind::Crash;
  std::vector<ScriptedMessage> script;
  std::uint64_t seed = 0;
  int max_rounds = 200;
  ViewSelection view_selection = ViewSelection::Union;
  bool record_trace = false;
  bool record_digest = false;

  void validate() const {
    if (params.n < 1) throw ConfigError("params not set");
    if (static_cast<int>(proposals.size()) != params.n)
      throw ConfigError("proposals size != n");
    for (Pid p = 0; p < static_cast<Pid>(params.n); ++p)
      if (params.is_non_faulty(p) && !is_binary(proposals[p]))
        throw ConfigError("non-faulty proposal must be binary");
    if (algo == Algo::Strong && coin.kind != CoinConfig::Kind::Strong)
      throw ConfigError("strong algorithm requires strong coin");
    if (algo != Algo::Strong && coin.kind != CoinConfig::Kind::Weak)
      throw ConfigError("weak algorithms require weak coin");
    if (max_rounds < 1) throw ConfigError("max_rounds must be >= 1");
    coin.validate();
  }

  int effective_cap() const { return delay_cap > 0 ? delay_cap : 16 * params.n * params.n; }
};

// Convenience builder: the last `t` process ids are the faulty ones.
inline RunConfig make_config(int n, int t, Algo algo, std::vector<Val> proposals,
                             std::uint64_t seed) {
  RunConfig cfg;
  cfg.params = SystemParams::validate(n, t);
  for (int i = 0; i < t; ++i) cfg.params.set_faulty(static_cast<Pid>(n - 1 - i));
  cfg.algo = algo;
  cfg.coin.kind = algo == Algo::Strong ? CoinConfig::Kind::Strong : CoinConfig::Kind::Weak;
  cfg.proposals = std::move(proposals);
  cfg.seed = seed;
  return cfg;
}

struct Violation {
  std::string check;
  std::string detail;
};

struct RunResult {
  std::map<Pid, std::pair<Val, Round>> decisions;
  bool safety_ok = true;
  std::vector<Violation> violations;
  // broadcasts[pid][r-1] = number of broadcasts by pid whose message tag
  // belongs to round r. Faulty processes have empty rows.
  std::vector<std::vector<std::uint32_t>> broadcasts;
  std::vector<Round> last_completed_round;  // per pid; 0 for faulty
  std::uint64_t total_events = 0;
  std::uint64_t dropped_messages = 0;
  std::uint64_t trace_digest = 0;
  bool timed_out = false;
  int max_delivery_age = 0;
  int coin_gate_violations = 0;
  std::string trace;  // JSONL when record_trace

  Round max_decision_round() const {
    Round r = 0;
    for (const auto& [pid, d] : decisions) r = std::max(r, d.second);
    return r;
  }
  Round min_decision_round() const {
    Round r = 0;
    for (const auto& [pid, d] : decisions) r = (r == 0) ? d.second : std::min(r, d.second);
    return r;
  }
};

namespace detail {

// Polymorphic adapter over the two process drivers.
struct IProcess {
  virtual ~IProcess() = default;
  virtual Effects step(const Input&) = 0;
  virtual Round round() const = 0;
  virtual std::optional<std::pair<Val, Round>> decided() const = 0;
  virtual std::optional<Val> pending_estimate(Round) const = 0;
  virtual std::uint64_t dropped() const = 0;
};

template <class P>
struct ProcessHolder final : IProcess {
  P impl;
  explicit ProcessHolder(P p) : impl(std::move(p)) {}
  Effects step(const Input& in) override { return impl.step(in); }
  Round round() const override { return impl.round(); }
  std::optional<std::pair<Val, Round>> decided() const override { return impl.decided(); }
  std::optional<Val> pending_estimate(Round r) const override { return impl.pending_estimate(r); }
  std::uint64_t dropped() const override { return impl.dropped(); }
};

}  // namespace detail

// Seeded discrete-event simulator. One run owns all its state; runs are
// deterministic in (config, seed).
class Simulator : private ProcessObserver {
 public:
  explicit Simulator(RunConfig cfg)
      : cfg_(std::move(cfg)),
        oracle_(cfg_.params, cfg_.coin, cfg_.seed),
        sched_rng_(derive_seed(cfg_.seed, 0x5CEDull)),
        trace_(cfg_.record_trace) {
    cfg_.validate();
    const int n = cfg_.params.n;
    procs_.resize(n);
    result_.broadcasts.assign(n, {});
    result_.last_completed_round.assign(n, 0);
    tracing_ = cfg_.record_trace || cfg_.record_digest;
    oracle_.set_preference_fn([this](Pid p, Round r) -> std::optional<Val> {
      if (!procs_[p]) return std::nullopt;
      return procs_[p]->pending_estimate(r);
    });
    if (cfg_.sched == SchedKind::DelayTarget && cfg_.delay_targets.empty()) {
      for (Pid p = 0; p < static_cast<Pid>(n); ++p)
        if (cfg_.params.is_non_faulty(p)) {
          cfg_.delay_targets.push_back(p);
          break;
        }
    }
  }

  RunResult run() {
    const int n = cfg_.params.n;
    if (tracing_) {
      // Trace header: enough to re-create the run from the file alone. Also
      // makes the digest a function of the full run identity, seed included.
      payload_ = "{\"algo\":\"" + std::string(to_string(cfg_.algo)) +
                 "\",\"n\":" + std::to_string(n) + ",\"t\":" + std::to_string(cfg_.params.t) +
                 ",\"sched\":\"" + to_string(cfg_.sched) + "\",\"byz\":\"" + to_string(cfg_.byz) +
                 "\",\"seed\":" + std::to_string(cfg_.seed) + "}";
      trace_.record("run-config", payload_);
    }
    for (Pid p = 0; p < static_cast<Pid>(n); ++p) {
      if (!cfg_.params.is_non_faulty(p)) continue;
      switch (cfg_.algo) {
        case Algo::Weak:
        case Algo::WeakOpt:
          procs_[p] = std::make_unique<detail::ProcessHolder<WeakProcess>>(WeakProcess(
              cfg_.params, p,
              cfg_.algo == Algo::WeakOpt ? WeakMode::Optimized : WeakMode::Baseline,
              cfg_.view_selection, this));
          break;
        case Algo::Strong:
          procs_[p] = std::make_unique<detail::ProcessHolder<StrongProcess>>(
              StrongProcess(cfg_.params, p, cfg_.view_selection, this));
          break;
      }
    }
    if (cfg_.byz == ByzKind::Scripted)
      for (const auto& sm : cfg_.script) enqueue_message(sm.recipient, sm.msg);
    for (Pid p = 0; p < static_cast<Pid>(n); ++p) {
      if (!procs_[p]) continue;
      handle_effects(p, procs_[p]->step(Input::propose(cfg_.proposals[p])));
    }
    loop();
    finalize();
    return std::move(result_);
  }

 private:
  enum class PState : std::uint8_t { Pending, Delivered, Dead };

  struct Pending {
    std::uint64_t enqueue_step = 0;
    Pid recipient = 0;
    bool is_coin = false;
    Message msg;
    Round coin_round = 0;
    Val coin_val = Val::Zero;
    Round event_round = 0;
    PState state = PState::Pending;
  };

  // ---- event pool & scheduling -------------------------------------------

  void enqueue_message(Pid recipient, const Message& m) {
    if (recipient >= static_cast<Pid>(cfg_.params.n)) return;
    if (!cfg_.params.is_non_faulty(recipient)) return;  // faulty consume nothing
    Pending e;
    e.enqueue_step = step_;
    e.recipient = recipient;
    e.msg = m;
    e.event_round = m.round();
    push(e);
  }

  void enqueue_coin(Pid recipient, Round round, Val v) {
    Pending e;
    e.enqueue_step = step_;
    e.recipient = recipient;
    e.is_coin = true;
    e.coin_round = round;
    e.coin_val = v;
    e.event_round = round;
    push(e);
  }

  void push(Pending e) {
    if (cutoff_ && e.event_round > cutoff_round_) return;
    pool_.push_back(e);
    const std::uint32_t idx = static_cast<std::uint32_t>(pool_.size() - 1);
    if (cfg_.sched == SchedKind::Random) random_pool_.push_back(idx);
  }

  bool delayed(const Pending& e) const {
    for (Pid t : cfg_.delay_targets) {
      if (e.recipient == t) return true;
      if (!e.is_coin && e.msg.sender == t) return true;
    }
    return false;
  }

  // Oldest alive pending (fairness anchor); advances a scan pointer.
  int oldest_alive() {
    while (head_ < pool_.size() && pool_[head_].state != PState::Pending) ++head_;
    return head_ < pool_.size() ? static_cast<int>(head_) : -1;
  }

  int pick_next() {
    const int oldest = oldest_alive();
    if (oldest < 0) return -1;
    const int age = static_cast<int>(step_ - pool_[oldest].enqueue_step);
    if (age >= cfg_.effective_cap()) return oldest;  // fairness: forced delivery
    switch (cfg_.sched) {
      case SchedKind::Fifo:
        return oldest;
      case SchedKind::Lifo: {
        for (std::size_t i = pool_.size(); i-- > head_;)
          if (pool_[i].state == PState::Pending) return static_cast<int>(i);
        return oldest;
      }
      case SchedKind::Random: {
        while (!random_pool_.empty()) {
          const std::size_t k = sched_rng_.next_below(random_pool_.size());
          const std::uint32_t idx = random_pool_[k];
          random_pool_[k] = random_pool_.back();
          random_pool_.pop_back();
          if (pool_[idx].state == PState::Pending) return static_cast<int>(idx);
        }
        return oldest;
      }
      case SchedKind::DelayTarget: {
        while (normal_head_ < pool_.size() &&
               (pool_[normal_head_].state != PState::Pending || delayed(pool_[normal_head_])))
          ++normal_head_;
        if (normal_head_ < pool_.size()) return static_cast<int>(normal_head_);
        return oldest;  // only delayed traffic left
      }
    }
    return oldest;
  }

  // ---- effects & Byzantine reactions -------------------------------------

  void handle_effects(Pid pid, const Effects& effects) {
    for (const Effect& e : effects) {
      switch (e.kind) {
        case Effect::Kind::Broadcast:
          on_broadcast(pid, e.msg);
          break;
        case Effect::Kind::RequestCoin:
          on_coin_request(pid, e.round);
          break;
        case Effect::Kind::Decide:
          on_decide(pid, e.value, e.round);
          break;
        default:
          // Notifications never escape the process drivers.
          add_violation("effect-discipline", "notification effect leaked");
          break;
      }
    }
  }

  void on_broadcast(Pid pid, const Message& m) {
    const Round r = m.round();
    auto& row = result_.broadcasts[pid];
    if (row.size() < r) row.resize(r, 0);
    if (r >= 1) ++row[r - 1];
    if (tracing_) {
      payload_.clear();
      append_message_json(payload_, m);
      trace_.record("broadcast", payload_);
    }
    for (Pid q = 0; q < static_cast<Pid>(cfg_.params.n); ++q) enqueue_message(q, m);
    byzantine_react(m);
  }

  void on_coin_request(Pid pid, Round r) {
    if (tracing_)
      trace_.record("coin-request",
                    "{\"round\":" + std::to_string(r) + ",\"pid\":" + std::to_string(pid) + "}");
    auto res = oracle_.request(r, pid);
    if (res.revealed_now && tracing_) {
      payload_ = "{\"round\":" + std::to_string(r) + ",\"assignment\":[";
      for (int i = 0; i < cfg_.params.n; ++i) {
        if (i) payload_ += ",";
        payload_ += to_string(*oracle_.value_for(r, static_cast<Pid>(i)));
      }
      payload_ += "]}";
      trace_.record("coin-reveal", payload_);
    }
    if (res.value) enqueue_coin(pid, r, *res.value);
    for (Pid q : res.newly_resolved)
      if (cfg_.params.is_non_faulty(q)) enqueue_coin(q, r, *oracle_.value_for(r, q));
  }

  void on_decide(Pid pid, Val v, Round r) {
    result_.decisions[pid] = {v, r};
    if (tracing_)
      trace_.record("decide", "{\"pid\":" + std::to_string(pid) + ",\"value\":" + to_string(v) +
                                  ",\"round\":" + std::to_string(r) + "}");
    // BBC-Agreement
    for (const auto& [q, d] : result_.decisions)
      if (d.first != v)
        add_violation("BBC-Agreement", "processes " + std::to_string(pid) + " and " +
                                           std::to_string(q) + " decided differently");
    // BBC-Validity
    bool proposed = false;
    for (Pid q = 0; q < static_cast<Pid>(cfg_.params.n); ++q)
      if (cfg_.params.is_non_faulty(q) && cfg_.proposals[q] == v) proposed = true;
    if (!proposed)
      add_violation("BBC-Validity", "decided value not proposed by any non-faulty process");
    // Strong algorithm decides only the coin's value for that round.
    if (cfg_.algo == Algo::Strong) {
      auto coin = oracle_.value_for(r, pid);
      if (!coin || *coin != v)
        add_violation("strong-decide-coin", "decision differs from round coin");
    }
  }

  void byzantine_react(const Message& observed) {
    if (cfg_.byz != ByzKind::Equivocate && cfg_.byz != ByzKind::Mirror) return;
    for (Pid f = 0; f < static_cast<Pid>(cfg_.params.n); ++f) {
      if (cfg_.params.is_non_faulty(f)) continue;
      if (cfg_.byz == ByzKind::Equivocate)
        equivocate(f, observed);
      else
        mirror(f, observed);
    }
  }

  static std::uint64_t inject_key(Pid f, MsgKind k, const InstanceTag& tag, int variant) {
    return (static_cast<std::uint64_t>(f) << 40) | (static_cast<std::uint64_t>(k) << 36) |
           (static_cast<std::uint64_t>(tag.kind) << 35) | (static_cast<std::uint64_t>(tag.phase) << 34) |
           (static_cast<std::uint64_t>(variant) << 30) | tag.round;
  }

  void inject(Pid recipient, Message m) {
    if (tracing_) {
      payload_.clear();
      append_message_json(payload_, m);
      trace_.record("broadcast", payload_);
    }
    enqueue_message(recipient, m);
  }

  std::vector<Pid> non_faulty_pids() const {
    std::vector<Pid> out;
    for (Pid p = 0; p < static_cast<Pid>(cfg_.params.n); ++p)
      if (cfg_.params.is_non_faulty(p)) out.push_back(p);
    return out;
  }

  // Contradictory values to the two halves of the audience, plus one
  // malformed AUXSET per round to exercise receiver-side rejection.
  void equivocate(Pid f, const Message& observed) {
    if (!injected_.insert(inject_key(f, observed.kind, observed.tag, 0)).second) return;
    const auto audience = non_faulty_pids();
    const std::size_t half = audience.size() / 2;
    for (std::size_t i = 0; i < audience.size(); ++i) {
      const Val v = i < half ? Val::Zero : Val::One;
      Message m = observed;
      m.sender = f;
      switch (observed.kind) {
        case MsgKind::Bval:
        case MsgKind::Aux:
        case MsgKind::Sval:
        case MsgKind::AuxBin:
          m.value = v;
          break;
        case MsgKind::AuxSet:
          m.set = val_bit(v);
          break;
      }
      inject(audience[i], m);
    }
    if (observed.kind == MsgKind::AuxSet &&
        injected_.insert(inject_key(f, observed.kind, observed.tag, 1)).second) {
      Message bad = observed;
      bad.sender = f;
      bad.set = 0;  // malformed: empty set
      for (Pid q : audience) inject(q, bad);
    }
  }

  // Negation of the observed non-faulty broadcast, to everyone.
  void mirror(Pid f, const Message& observed) {
    const int variant = observed.kind == MsgKind::AuxSet
                            ? static_cast<int>(observed.set)
                            : static_cast<int>(observed.value);
    if (!injected_.insert(inject_key(f, observed.kind, observed.tag, variant)).second) return;
    Message m = observed;
    m.sender = f;
    switch (observed.kind) {
      case MsgKind::Bval:
      case MsgKind::Aux:
      case MsgKind::Sval:
      case MsgKind::AuxBin:
        m.value = negate(observed.value);
        break;
      case MsgKind::AuxSet: {
        ValSet s = 0;
        if (set_contains(observed.set, Val::Zero)) s |= val_bit(Val::One);
        if (set_contains(observed.set, Val::One)) s |= val_bit(Val::Zero);
        m.set = s ? s : observed.set;
        break;
      }
    }
    for (Pid q : non_faulty_pids()) inject(q, m);
  }

  // ---- main loop ----------------------------------------------------------

  bool all_decided() const {
    for (Pid p = 0; p < static_cast<Pid>(cfg_.params.n); ++p)
      if (procs_[p] && !procs_[p]->decided()) return false;
    return true;
  }

  void start_cutoff() {
    cutoff_ = true;
    cutoff_round_ = result_.max_decision_round();
    for (auto& e : pool_)
      if (e.state == PState::Pending && e.event_round > cutoff_round_) e.state = PState::Dead;
  }

  void loop() {
    const std::uint64_t hard_limit = 50'000'000;
    while (true) {
      if (!cutoff_ && all_decided()) start_cutoff();
      const int idx = pick_next();
      if (idx < 0) break;
      pool_[idx].state = PState::Delivered;
      const Pending e = pool_[idx];  // deliver() may grow pool_ and reallocate
      const int age = static_cast<int>(step_ - e.enqueue_step);
      result_.max_delivery_age = std::max(result_.max_delivery_age, age);
      ++step_;
      deliver(e);
      // Decided processes keep participating (later rounds help laggards),
      // so only an undecided process counts against the round bound.
      if (procs_[e.recipient] && !procs_[e.recipient]->decided() &&
          procs_[e.recipient]->round() > static_cast<Round>(cfg_.max_rounds)) {
        result_.timed_out = true;
        break;
      }
      if (step_ > hard_limit) {
        result_.timed_out = true;
        add_violation("event-limit", "hard event limit reached");
        break;
      }
    }
  }

  void deliver(const Pending& e) {
    auto& proc = procs_[e.recipient];
    if (!proc) return;
    const std::uint64_t dropped_before = proc->dropped();
    if (tracing_) {
      if (e.is_coin) {
        payload_ = "{\"type\":\"coin\",\"round\":" + std::to_string(e.coin_round) +
                   ",\"value\":" + to_string(e.coin_val) +
                   ",\"recipient\":" + std::to_string(e.recipient) + "}";
      } else {
        payload_.clear();
        payload_ += "{\"recipient\":";
        payload_ += std::to_string(e.recipient);
        payload_ += ",\"msg\":";
        append_message_json(payload_, e.msg);
        payload_ += "}";
      }
      trace_.record("deliver", payload_);
    }
    Effects effects = e.is_coin ? proc->step(Input::coin(e.coin_round, e.coin_val))
                                : proc->step(Input::deliver(e.msg));
    handle_effects(e.recipient, effects);
    if (tracing_ && proc->dropped() > dropped_before) trace_.record("drop", "{}");
  }

  void finalize() {
    result_.total_events = step_;
    for (Pid p = 0; p < static_cast<Pid>(cfg_.params.n); ++p) {
      if (!procs_[p]) continue;
      result_.dropped_messages += procs_[p]->dropped();
      result_.last_completed_round[p] = procs_[p]->round() > 0 ? procs_[p]->round() - 1 : 0;
      if (!procs_[p]->decided() && !result_.timed_out)
        add_violation("BBC-Termination", "pool drained before process " + std::to_string(p) +
                                             " decided");
    }
    // Lemma 5: one-sided binary inputs to stage[r,1] across non-faulty.
    for (const auto& [r, vals] : stage1_inputs_)
      if ((vals & kBothBinary) == kBothBinary)
        add_violation("Lemma5-one-sided",
                      "both binary values input to stage[" + std::to_string(r) + ",1]");
    // Strong post-decision lockstep (Lemma 10): views after the first
    // decision round are exactly the decided value.
    if (cfg_.algo == Algo::Strong && !result_.decisions.empty()) {
      const Round first = [&] {
        Round m = 0;
        for (const auto& [pid, d] : result_.decisions)
          m = (m == 0) ? d.second : std::min(m, d.second);
        return m;
      }();
      const Val v = result_.decisions.begin()->second.first;
      for (const auto& [key, view] : views_)
        if (key.second > first && view != val_bit(v))
          add_violation("Lemma10-lockstep", "post-decision view not {decided} in round " +
                                                std::to_string(key.second));
    }
    result_.coin_gate_violations = oracle_.gate_violations();
    if (result_.coin_gate_violations != 0)
      add_violation("coin-gate", "pre-revelation adversary read");
    result_.trace_digest = trace_.digest();
    if (cfg_.record_trace) result_.trace = trace_.lines();
  }

  void add_violation(const std::string& check, const std::string& detail) {
    result_.safety_ok = false;
    result_.violations.push_back({check, detail});
  }

  // ---- ProcessObserver ----------------------------------------------------

  void on_stage1_input(Pid, Round r, Val est) override {
    if (is_binary(est)) stage1_inputs_[r] |= val_bit(est);
  }
  void on_view(Pid pid, Round r, ValSet view) override { views_.emplace_back(std::pair{pid, r}, view); }
  void on_violation(Pid pid, const std::string& check, const std::string& detail) override {
    add_violation(check, "p" + std::to_string(pid) + ": " + detail);
  }

  RunConfig cfg_;
  CoinOracle oracle_;
  SplitMix64 sched_rng_;
  TraceBuilder trace_;
  bool tracing_ = false;
  std::string payload_;

  std::vector<std::unique_ptr<detail::IProcess>> procs_;
  std::vector<Pending> pool_;
  std::vector<std::uint32_t> random_pool_;
  std::size_t head_ = 0;
  std::size_t normal_head_ = 0;
  std::uint64_t step_ = 0;
  bool cutoff_ = false;
  Round cutoff_round_ = 0;
  std::unordered_set<std::uint64_t> injected_;
  std::map<Round, ValSet> stage1_inputs_;
  std::vector<std::pair<std::pair<Pid, Round>, ValSet>> views_;

  RunResult result_;
};

inline RunResult run(RunConfig cfg) { return Simulator(std::move(cfg)).run(); }

}  // namespace coinsensus
