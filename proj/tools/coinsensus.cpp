// Command-line front end: single runs, Monte-Carlo sweeps, the bounded
// exhaustive abstraction checker, and trace export.
//
// Exit codes: 0 success, 1 safety violation / timeout / failed property,
// 2 configuration or usage error.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coinsensus/checker.hpp"
#include "coinsensus/simnet.hpp"
#include "coinsensus/sweep.hpp"

using json = nlohmann::ordered_json;
using namespace coinsensus;

namespace {

struct Options {
  std::string algo = "weak";
  int n = 4;
  int t = -1;  // -1: floor((n-1)/3)
  std::string proposals = "split";
  std::string byz = "crash";
  std::string sched = "fifo";
  int coin_d = 2;
  std::string coin_split = "estimate-opposing";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int runs = 1;
  int max_rounds = 200;
  std::string view_selection = "union";
  int delay_cap = 0;
  std::string out;
  std::string trace_out;
  std::string config_file;
};

Algo parse_algo(const std::string& s) {
  if (s == "weak") return Algo::Weak;
  if (s == "weak-opt") return Algo::WeakOpt;
  if (s == "strong") return Algo::Strong;
  throw ConfigError("unknown algo: " + s);
}

SchedKind parse_sched(const std::string& s) {
  if (s == "fifo") return SchedKind::Fifo;
  if (s == "random") return SchedKind::Random;
  if (s == "lifo") return SchedKind::Lifo;
  if (s == "delay-target") return SchedKind::DelayTarget;
  throw ConfigError("unknown scheduler: " + s);
}

ByzKind parse_byz(const std::string& s) {
  if (s == "crash") return ByzKind::Crash;
  if (s == "mute") return ByzKind::Mute;
  if (s == "equivocate") return ByzKind::Equivocate;
  if (s == "mirror") return ByzKind::Mirror;
  if (s == "scripted") return ByzKind::Scripted;
  throw ConfigError("unknown byzantine strategy: " + s);
}

SplitStrategy parse_split(const std::string& s) {
  if (s == "estimate-opposing") return SplitStrategy::EstimateOpposing;
  if (s == "fair-bit") return SplitStrategy::FairBit;
  if (s == "half-half") return SplitStrategy::HalfHalf;
  throw ConfigError("unknown coin split strategy: " + s);
}

ViewSelection parse_view(const std::string& s) {
  if (s == "union") return ViewSelection::Union;
  if (s == "first-quorum") return ViewSelection::FirstQuorum;
  throw ConfigError("unknown view selection: " + s);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

Val parse_val(const std::string& s) {
  if (s == "0") return Val::Zero;
  if (s == "1") return Val::One;
  throw ConfigError("proposal values must be 0 or 1, got: " + s);
}

// Accepts "0,1,1,0", the shorthand "<v>x<n>" (e.g. "1x7"), and the
// conveniences "split", "all0", "all1".
std::vector<Val> parse_proposals(const std::string& s, int n) {
  std::vector<Val> out;
  if (s == "split") {
    for (int i = 0; i < n; ++i) out.push_back(i % 2 == 0 ? Val::Zero : Val::One);
    return out;
  }
  if (s == "all0" || s == "all1") {
    out.assign(n, s == "all0" ? Val::Zero : Val::One);
    return out;
  }
  const auto x = s.find('x');
  if (x != std::string::npos) {
    const Val v = parse_val(s.substr(0, x));
    const int k = std::atoi(s.substr(x + 1).c_str());
    if (k != n) throw ConfigError("proposal count " + std::to_string(k) + " does not match n");
    out.assign(n, v);
    return out;
  }
  for (const std::string& tok : split_list(s)) out.push_back(parse_val(tok));
  if (static_cast<int>(out.size()) != n)
    throw ConfigError("expected " + std::to_string(n) + " proposals, got " +
                      std::to_string(out.size()));
  return out;
}

void apply_config_file(Options& opt) {
  if (opt.config_file.empty()) return;
  std::ifstream in(opt.config_file);
  if (!in) throw ConfigError("cannot open config file: " + opt.config_file);
  json cfg;
  in >> cfg;
  auto str = [&](const char* key, std::string& dst) {
    if (cfg.contains(key)) dst = cfg[key].get<std::string>();
  };
  auto num = [&](const char* key, int& dst) {
    if (cfg.contains(key)) dst = cfg[key].get<int>();
  };
  str("algo", opt.algo);
  num("n", opt.n);
  num("t", opt.t);
  str("proposals", opt.proposals);
  str("byz", opt.byz);
  str("sched", opt.sched);
  num("coin-d", opt.coin_d);
  str("coin-split", opt.coin_split);
  num("runs", opt.runs);
  num("max-rounds", opt.max_rounds);
  str("view-selection", opt.view_selection);
  num("delay-cap", opt.delay_cap);
  if (cfg.contains("seed")) {
    opt.seed = cfg["seed"].get<std::uint64_t>();
    opt.seed_given = true;
  }
}

void resolve_seed(Options& opt) {
  if (opt.seed_given) return;
  if (const char* env = std::getenv("COINSENSUS_SEED")) {
    opt.seed = std::strtoull(env, nullptr, 10);
    opt.seed_given = true;
  } else {
    opt.seed = 1;
  }
}

RunConfig build_config(const Options& opt) {
  const int n = opt.n;
  const int t = opt.t >= 0 ? opt.t : (n - 1) / 3;
  const Algo algo = parse_algo(opt.algo);
  RunConfig cfg = make_config(n, t, algo, parse_proposals(opt.proposals, n), opt.seed);
  cfg.sched = parse_sched(opt.sched);
  cfg.byz = parse_byz(opt.byz);
  cfg.max_rounds = opt.max_rounds;
  cfg.view_selection = parse_view(opt.view_selection);
  cfg.delay_cap = opt.delay_cap;
  if (algo != Algo::Strong) {
    cfg.coin.d = opt.coin_d;
    cfg.coin.split = parse_split(opt.coin_split);
  }
  return cfg;
}

std::string hex64(std::uint64_t v) {
  char buf[19];
  std::snprintf(buf, sizeof(buf), "0x%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json result_json(const Options& opt, const RunConfig& cfg, const RunResult& res) {
  json j;
  j["algo"] = opt.algo;
  j["n"] = cfg.params.n;
  j["t"] = cfg.params.t;
  j["seed"] = cfg.seed;
  json decisions = json::object();
  for (const auto& [pid, d] : res.decisions) {
    decisions[std::to_string(pid)] = {{"value", to_string(d.first)}, {"round", d.second}};
  }
  j["decisions"] = decisions;
  j["max_decision_round"] = res.max_decision_round();
  j["safety_ok"] = res.safety_ok;
  j["timed_out"] = res.timed_out;
  json viols = json::array();
  for (const auto& v : res.violations) viols.push_back({{"check", v.check}, {"detail", v.detail}});
  j["violations"] = viols;
  j["total_events"] = res.total_events;
  j["dropped_messages"] = res.dropped_messages;
  j["coin_gate_violations"] = res.coin_gate_violations;
  j["trace_digest"] = hex64(res.trace_digest);
  return j;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open output file: " + path);
  out << content;
}

int cmd_run(Options& opt, bool with_trace) {
  resolve_seed(opt);
  RunConfig cfg = build_config(opt);
  cfg.record_digest = true;
  cfg.record_trace = with_trace || !opt.trace_out.empty();
  RunResult res = run(cfg);
  if (cfg.record_trace) {
    if (!opt.trace_out.empty()) {
      write_output(opt.trace_out, res.trace);
    } else if (with_trace) {
      // Trace subcommand without a file: the trace itself is the output.
      write_output(opt.out, res.trace);
      return res.safety_ok && !res.timed_out ? 0 : 1;
    }
  }
  write_output(opt.out, result_json(opt, cfg, res).dump(2));
  return res.safety_ok && !res.timed_out ? 0 : 1;
}

int cmd_sweep(Options& opt, bool as_json) {
  resolve_seed(opt);
  // Comma lists in --algo/--sched/--byz form a grid of cells.
  const auto algos = split_list(opt.algo);
  const auto scheds = split_list(opt.sched);
  const auto byzs = split_list(opt.byz);
  const std::vector<int> ns{opt.n};

  std::string csv = sweep_csv_header() + "\n";
  json cells = json::array();
  bool any_bad = false;
  for (const std::string& a : algos)
    for (int n : ns)
      for (const std::string& sc : scheds)
        for (const std::string& bz : byzs) {
          Options cell_opt = opt;
          cell_opt.algo = a;
          cell_opt.n = n;
          cell_opt.sched = sc;
          cell_opt.byz = bz;
          SweepSpec spec;
          spec.base = build_config(cell_opt);
          spec.runs = opt.runs;
          spec.seed_start = opt.seed;
          const std::string cell_id = a + "/" + sc + "/" + bz + "/n" + std::to_string(n);
          SweepStats st = sweep(spec, cell_id);
          any_bad = any_bad || st.violations > 0 || st.timeouts > 0;
          csv += sweep_csv_row(st) + "\n";
          if (as_json) {
            json c;
            c["cell_id"] = st.cell_id;
            c["runs"] = st.runs;
            c["mean_round"] = st.mean_round;
            c["p50"] = st.p50;
            c["p95"] = st.p95;
            c["max"] = st.max_round;
            c["violations"] = st.violations;
            c["timeouts"] = st.timeouts;
            c["bcast_min"] = st.bcast_min;
            c["bcast_max"] = st.bcast_max;
            json hist = json::object();
            for (const auto& [r, cnt] : st.histogram) hist[std::to_string(r)] = cnt;
            c["histogram"] = hist;
            cells.push_back(c);
          }
        }
  write_output(opt.out, as_json ? cells.dump(2) : csv);
  return any_bad ? 1 : 0;
}

struct CheckOptions {
  std::string target = "bv";
  std::string inputs = "1,1,1";
  std::string inputs_true;
  std::string inputs_false;
  std::string byz = "equivocate";
  std::string out;
};

int cmd_check(const CheckOptions& co) {
  CheckConfig cfg;
  if (co.target == "bv")
    cfg.target = CheckTarget::Bv;
  else if (co.target == "sbv")
    cfg.target = CheckTarget::Sbv;
  else if (co.target == "sbc")
    cfg.target = CheckTarget::Sbc;
  else
    throw ConfigError("unknown check target: " + co.target);
  if (co.byz == "equivocate")
    cfg.byz = true;
  else if (co.byz == "none")
    cfg.byz = false;
  else
    throw ConfigError("check supports --byz equivocate|none");

  if (cfg.target == CheckTarget::Sbc) {
    // --inputs-true lists values initiated with should_broadcast=true, one
    // process per entry; --inputs-false lists processes that open their
    // instances without initiating. Exactly 3 processes total.
    std::size_t idx = 0;
    if (!co.inputs_true.empty())
      for (const std::string& tok : split_list(co.inputs_true)) {
        if (idx >= 3) throw ConfigError("check uses exactly 3 non-faulty processes");
        cfg.sbc_true[idx++] = val_bit(parse_val(tok));
      }
    if (!co.inputs_false.empty())
      for (const std::string& tok : split_list(co.inputs_false)) {
        (void)parse_val(tok);
        if (idx >= 3) throw ConfigError("check uses exactly 3 non-faulty processes");
        cfg.sbc_true[idx++] = 0;
      }
    if (co.inputs_true.empty() && co.inputs_false.empty())
      for (std::size_t i = 0; i < 3; ++i)
        cfg.sbc_true[i] = val_bit(parse_val(split_list(co.inputs).at(i)));
    else if (idx != 3)
      throw ConfigError("check uses exactly 3 non-faulty processes");
  } else {
    const auto toks = split_list(co.inputs);
    if (toks.size() != 3) throw ConfigError("check needs exactly 3 inputs");
    for (std::size_t i = 0; i < 3; ++i) cfg.inputs[i] = parse_val(toks[i]);
  }

  CheckReport rep = check(cfg);
  json j;
  j["target"] = to_string(rep.target);
  j["states"] = rep.states;
  j["transitions"] = rep.transitions;
  j["terminals"] = rep.terminals;
  j["truncated"] = rep.truncated;
  j["all_hold"] = rep.all_hold();
  json props = json::array();
  for (const auto& p : rep.properties) {
    json pj;
    pj["name"] = p.name;
    pj["holds"] = p.holds;
    pj["vacuous"] = p.vacuous;
    if (!p.detail.empty()) pj["detail"] = p.detail;
    if (!p.counterexample.empty()) pj["counterexample"] = p.counterexample;
    props.push_back(pj);
  }
  j["properties"] = props;
  write_output(co.out, j.dump(2));
  return rep.all_hold() ? 0 : 1;
}

void add_run_flags(CLI::App* cmd, Options& opt) {
  cmd->add_option("--algo", opt.algo, "weak|weak-opt|strong");
  cmd->add_option("--n", opt.n, "process count");
  cmd->add_option("--t", opt.t, "failure bound (default floor((n-1)/3))");
  cmd->add_option("--proposals", opt.proposals,
                  "list '0,1,1,0', shorthand '1x7', or split|all0|all1");
  cmd->add_option("--byz", opt.byz, "crash|mute|equivocate|mirror|scripted");
  cmd->add_option("--sched", opt.sched, "fifo|random|lifo|delay-target");
  cmd->add_option("--coin-d", opt.coin_d, "weak coin parameter d >= 2");
  cmd->add_option("--coin-split", opt.coin_split, "estimate-opposing|fair-bit|half-half");
  cmd->add_option("--seed", opt.seed, "run seed (env COINSENSUS_SEED as fallback)")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
  cmd->add_option("--runs", opt.runs, "runs per sweep cell");
  cmd->add_option("--max-rounds", opt.max_rounds, "timeout bound");
  cmd->add_option("--view-selection", opt.view_selection, "union|first-quorum");
  cmd->add_option("--delay-cap", opt.delay_cap, "fairness cap in delivery steps (0=auto)");
  cmd->add_option("--out", opt.out, "output file (default stdout)");
  cmd->add_option("--trace-out", opt.trace_out, "JSONL trace file");
  cmd->add_option("--config", opt.config_file, "JSON config file overriding flags");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomized asynchronous binary Byzantine consensus harness"};
  app.require_subcommand(1);

  Options run_opt, sweep_opt, trace_opt;
  CheckOptions check_opt;
  bool sweep_json = false;

  CLI::App* c_run = app.add_subcommand("run", "single seeded run, JSON result");
  add_run_flags(c_run, run_opt);

  CLI::App* c_sweep = app.add_subcommand("sweep", "Monte-Carlo sweep, CSV (or JSON) stats");
  add_run_flags(c_sweep, sweep_opt);
  c_sweep->add_flag("--json", sweep_json, "emit JSON instead of CSV");

  CLI::App* c_check = app.add_subcommand("check", "exhaustive abstraction checker (n=4, t=1)");
  c_check->add_option("--target", check_opt.target, "bv|sbv|sbc");
  c_check->add_option("--inputs", check_opt.inputs, "3 binary inputs, e.g. 1,1,0");
  c_check->add_option("--inputs-true", check_opt.inputs_true,
                      "sbc: values initiated with should_broadcast=true");
  c_check->add_option("--inputs-false", check_opt.inputs_false,
                      "sbc: values opened without initiating");
  c_check->add_option("--byz", check_opt.byz, "equivocate|none");
  c_check->add_option("--out", check_opt.out, "output file (default stdout)");

  CLI::App* c_trace = app.add_subcommand("trace", "single run, JSONL trace output");
  add_run_flags(c_trace, trace_opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (c_run->parsed()) {
      apply_config_file(run_opt);
      return cmd_run(run_opt, false);
    }
    if (c_sweep->parsed()) {
      apply_config_file(sweep_opt);
      return cmd_sweep(sweep_opt, sweep_json);
    }
    if (c_check->parsed()) return cmd_check(check_opt);
    if (c_trace->parsed()) {
      apply_config_file(trace_opt);
      return cmd_run(trace_opt, true);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
