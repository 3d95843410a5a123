// Acceptance harness: one numbered check per release criterion, each
// printing pass/fail with the measured figures. Exit status 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "coinsensus/checker.hpp"
#include "coinsensus/simnet.hpp"
#include "coinsensus/sweep.hpp"

using namespace coinsensus;

namespace {

int g_failures = 0;

void report(int idx, const std::string& name, bool ok, const std::string& detail) {
  std::printf("criterion %d (%s): %s — %s\n", idx, name.c_str(), ok ? "pass" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::vector<Val> alternating(int n) {
  std::vector<Val> v(n);
  for (int i = 0; i < n; ++i) v[i] = i % 2 ? Val::One : Val::Zero;
  return v;
}

std::vector<Val> uniform(int n, Val v) { return std::vector<Val>(n, v); }

constexpr Algo kAlgos[] = {Algo::Weak, Algo::WeakOpt, Algo::Strong};
constexpr SchedKind kScheds[] = {SchedKind::Fifo, SchedKind::Random, SchedKind::Lifo,
                                 SchedKind::DelayTarget};
constexpr ByzKind kByzs[] = {ByzKind::Crash, ByzKind::Mute, ByzKind::Equivocate, ByzKind::Mirror};
constexpr int kNs[] = {4, 7, 10};

// Per-algorithm broadcast-count aggregation across the matrix.
struct CountAgg {
  std::uint32_t min_r1 = UINT32_MAX, max_r1 = 0;
  std::uint32_t min_rest = UINT32_MAX, max_rest = 0;
  void absorb(const SweepStats& st) {
    if (st.bcast_max_r1) {
      min_r1 = std::min(min_r1, st.bcast_min_r1);
      max_r1 = std::max(max_r1, st.bcast_max_r1);
    }
    if (st.bcast_max_rest) {
      min_rest = std::min(min_rest, st.bcast_min_rest);
      max_rest = std::max(max_rest, st.bcast_max_rest);
    }
  }
};

// Regularized upper incomplete gamma Q(a, x), by series / continued
// fraction depending on the regime.
double gammq(double a, double x) {
  if (x < 0 || a <= 0) return 0;
  if (x == 0) return 1;
  if (x < a + 1) {
    // P(a,x) series, return 1 - P.
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-12) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
  }
  // Q(a,x) continued fraction (modified Lentz).
  const double tiny = 1e-300;
  double b = x + 1 - a, c = 1 / tiny, d = 1 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -static_cast<double>(i) * (i - a);
    b += 2;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1) < 1e-12) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

// ---- criteria 1, 2 and 5 share the full matrix -----------------------------

void criteria_matrix() {
  const int runs_per_cell = 1000;
  int violations = 0, timeouts = 0, cells = 0;
  std::map<Algo, CountAgg> counts;
  int fast_path_misses = 0, fast_path_runs = 0;

  for (Algo algo : kAlgos) {
    for (SchedKind sched : kScheds) {
      for (ByzKind byz : kByzs) {
        for (int n : kNs) {
          const int t = (n - 1) / 3;
          // Criterion 1/5 leg: split proposals.
          SweepSpec spec;
          spec.base = make_config(n, t, algo, alternating(n), 0);
          spec.base.sched = sched;
          spec.base.byz = byz;
          spec.runs = runs_per_cell;
          spec.seed_start = 1;
          SweepStats st = sweep(spec);
          violations += st.violations;
          timeouts += st.timeouts;
          counts[algo].absorb(st);
          ++cells;

          // Criterion 2 leg: unanimous proposals, weak family only.
          if (algo != Algo::Strong) {
            SweepSpec uspec = spec;
            uspec.base.proposals = uniform(n, Val::One);
            SweepStats ust = sweep(uspec);
            violations += ust.violations;
            timeouts += ust.timeouts;
            counts[algo].absorb(ust);
            fast_path_runs += uspec.runs;
            for (const auto& [r, c] : ust.histogram)
              if (r != 1) fast_path_misses += c;
          }
        }
      }
    }
  }

  char buf[160];
  std::snprintf(buf, sizeof(buf), "%d cells x %d runs, %d violations, %d timeouts", cells,
                runs_per_cell, violations, timeouts);
  report(1, "full-matrix safety and liveness", violations == 0 && timeouts == 0, buf);

  std::snprintf(buf, sizeof(buf), "%d of %d unanimous runs decided after round 1",
                fast_path_misses, fast_path_runs);
  report(2, "unanimity fast path", fast_path_misses == 0, buf);

  const CountAgg& w = counts[Algo::Weak];
  const CountAgg& o = counts[Algo::WeakOpt];
  const CountAgg& s = counts[Algo::Strong];
  const std::uint32_t wmin = std::min(w.min_r1, w.min_rest);
  const std::uint32_t wmax = std::max(w.max_r1, w.max_rest);
  const bool ok = wmin == 5 && wmax == 7 &&                    // [5,7], endpoints hit
                  o.min_r1 == 5 && o.max_r1 == 6 &&            // [5,6] round 1
                  o.min_rest == 4 && o.max_rest == 5 &&        // [4,5] later rounds
                  s.min_r1 == 2 && s.max_r1 == 3 &&            // [2,3] round 1
                  s.min_rest == 1 && s.max_rest == 2;          // [1,2] later rounds
  std::snprintf(buf, sizeof(buf),
                "weak [%u,%u]; weak-opt r1 [%u,%u] r2+ [%u,%u]; strong r1 [%u,%u] r2+ [%u,%u]",
                wmin, wmax, o.min_r1, o.max_r1, o.min_rest, o.max_rest, s.min_r1, s.max_r1,
                s.min_rest, s.max_rest);
  report(5, "per-round broadcast counts", ok, buf);
}

// ---- criterion 3: strong-coin round distribution ---------------------------

void criterion_strong_rounds() {
  const int runs = 10000;
  std::map<Round, int> hist;
  double sum = 0;
  int timeouts = 0;
  for (int i = 0; i < runs; ++i) {
    RunConfig cfg = make_config(4, 1, Algo::Strong, uniform(4, i % 2 ? Val::One : Val::Zero),
                                1000 + static_cast<std::uint64_t>(i));
    RunResult res = run(cfg);
    if (res.timed_out) {
      ++timeouts;
      continue;
    }
    const Round r = res.max_decision_round();
    ++hist[r];
    sum += r;
  }
  const double mean = sum / (runs - timeouts);

  // Chi-square against geometric(1/2) over rounds 1..10 plus a tail bin.
  const int k_max = 10;
  double chi2 = 0;
  int df = 0;
  int tail_obs = 0;
  for (const auto& [r, c] : hist)
    if (r > k_max) tail_obs += c;
  for (int k = 1; k <= k_max; ++k) {
    const double expect = runs * std::pow(0.5, k);
    const auto it = hist.find(k);
    const double obs = it == hist.end() ? 0 : it->second;
    chi2 += (obs - expect) * (obs - expect) / expect;
    ++df;
  }
  const double tail_expect = runs * std::pow(0.5, k_max);
  chi2 += (tail_obs - tail_expect) * (tail_obs - tail_expect) / tail_expect;
  // df = bins - 1; no parameter was estimated from the sample.
  const double p = gammq(df / 2.0, chi2 / 2.0);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "mean %.3f (want [1.9,2.1]), chi2 %.2f p %.4f, %d timeouts",
                mean, chi2, p, timeouts);
  bool ok = timeouts == 0 && mean >= 1.9 && mean <= 2.1 && p > 0.01;

  // Mixed-proposal leg: mean <= 4.5, p95 <= 10.
  SweepSpec spec;
  spec.base = make_config(4, 1, Algo::Strong, alternating(4), 0);
  spec.runs = runs;
  spec.seed_start = 50000;
  SweepStats st = sweep(spec);
  char buf2[320];
  std::snprintf(buf2, sizeof(buf2), "%s; mixed mean %.3f p95 %u", buf, st.mean_round,
                st.p95);
  ok = ok && st.timeouts == 0 && st.mean_round <= 4.5 && st.p95 <= 10;
  report(3, "strong-coin expected rounds", ok, buf2);
}

// ---- criterion 4: weak-coin round distribution -----------------------------

void criterion_weak_rounds() {
  // d=2, split proposals, benign environment.
  SweepSpec spec;
  spec.base = make_config(4, 1, Algo::Weak, alternating(4), 0);
  spec.base.coin.d = 2;
  spec.runs = 10000;
  spec.seed_start = 1;
  SweepStats st = sweep(spec);
  bool ok = st.timeouts == 0 && st.mean_round <= 4.0;

  // d=4 against the estimate-opposing split and a mirroring adversary
  // (a crash-only adversary at n=4 cannot even force a second round).
  const int runs = 10000;
  std::map<Round, int> hist;
  int timeouts = 0;
  for (int i = 0; i < runs; ++i) {
    RunConfig cfg = make_config(4, 1, Algo::Weak, alternating(4),
                                90000 + static_cast<std::uint64_t>(i));
    cfg.coin.d = 4;
    cfg.coin.split = SplitStrategy::EstimateOpposing;
    cfg.byz = ByzKind::Mirror;
    RunResult res = run(cfg);
    if (res.timed_out)
      ++timeouts;
    else
      ++hist[res.max_decision_round()];
  }
  // Survival fraction past round r, fitted as exp(slope * r) over [2,20].
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int pts = 0;
  for (int r = 2; r <= 20; ++r) {
    int surv = timeouts;  // a timed-out run survived every round
    for (const auto& [round, c] : hist)
      if (round > static_cast<Round>(r)) surv += c;
    if (surv == 0) break;
    const double y = std::log(static_cast<double>(surv) / runs);
    sx += r;
    sy += y;
    sxx += r * r;
    sxy += static_cast<double>(r) * y;
    ++pts;
  }
  double rate = 0;
  if (pts >= 2) {
    const double slope = (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
    rate = std::exp(slope);
  }
  const bool ok4 = timeouts == 0 && rate <= 0.75 + 0.05;
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "d=2 mean %.3f (want <=4); d=4 decay rate %.3f over %d points (want <=0.80), "
                "%d undecided",
                st.mean_round, rate, pts, timeouts);
  report(4, "weak-coin expected rounds", ok && ok4, buf);
}

// ---- criterion 6: small-model checks ---------------------------------------

void criterion_checker() {
  struct Job {
    const char* label;
    CheckConfig cfg;
  };
  std::vector<Job> jobs;
  {
    CheckConfig c;
    c.target = CheckTarget::Bv;
    c.inputs = {Val::One, Val::One, Val::One};
    jobs.push_back({"bv-unanimous", c});
    c.inputs = {Val::Zero, Val::One, Val::One};
    jobs.push_back({"bv-mixed", c});
    c.target = CheckTarget::Sbv;
    c.inputs = {Val::One, Val::One, Val::One};
    jobs.push_back({"sbv-unanimous", c});
    c.inputs = {Val::Zero, Val::One, Val::One};
    jobs.push_back({"sbv-mixed", c});
    CheckConfig s;
    s.target = CheckTarget::Sbc;
    s.sbc_true = {val_bit(Val::One), val_bit(Val::One), 0};
    jobs.push_back({"sbc-quorum", s});
  }
  bool ok = true;
  std::string detail;
  for (const Job& job : jobs) {
    const double t0 = now_s();
    CheckReport rep = check(job.cfg);
    const double dt = now_s() - t0;
    bool job_ok = dt < 60.0;
    for (const auto& p : rep.properties)
      if (!p.holds) {
        job_ok = false;
        detail += std::string(" [") + p.name + " failed: " + p.detail + "]";
      }
    // BV and S must exhaust their space; the SBV exploration is allowed a
    // deterministic bounded prefix.
    if (job.cfg.target != CheckTarget::Sbv && rep.truncated) job_ok = false;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "%s%s %llu states%s %.1fs;", detail.empty() ? "" : " ",
                  job.label, static_cast<unsigned long long>(rep.states),
                  rep.truncated ? " (bounded)" : "", dt);
    detail += std::string(detail.empty() ? "" : " ") + buf;
    ok = ok && job_ok;
  }
  report(6, "small-model property checks", ok, detail);
}

// ---- criterion 7: determinism ----------------------------------------------

void criterion_determinism() {
  SplitMix64 g(0xACCE);
  int stable = 0, seed_sensitive = 0;
  const int total = 100;
  for (int i = 0; i < total; ++i) {
    const int n = g.next_bit() ? 7 : 4;
    const int t = (n - 1) / 3;
    const Algo algo = kAlgos[g.next_below(3)];
    std::vector<Val> props(n);
    for (int j = 0; j < n; ++j) props[j] = g.next_bit() ? Val::One : Val::Zero;
    RunConfig cfg = make_config(n, t, algo, props, g.next());
    cfg.sched = kScheds[g.next_below(4)];
    cfg.byz = kByzs[g.next_below(4)];
    if (cfg.coin.kind == CoinConfig::Kind::Weak) cfg.coin.d = 2 + static_cast<int>(g.next_below(3));
    cfg.record_digest = true;
    const std::uint64_t d1 = run(cfg).trace_digest;
    const std::uint64_t d2 = run(cfg).trace_digest;
    if (d1 == d2) ++stable;
    cfg.seed += 1;
    if (run(cfg).trace_digest != d1) ++seed_sensitive;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), "%d/100 reruns identical, %d/100 digests changed with the seed",
                stable, seed_sensitive);
  report(7, "trace determinism", stable == total && seed_sensitive >= 99, buf);
}

// ---- criterion 8: coin distribution ----------------------------------------

void criterion_coin() {
  SystemParams p = SystemParams::validate(4, 1);
  p.set_faulty(3);
  bool ok = true;
  std::string detail;
  const int rounds = 100000;
  for (int d : {2, 3, 4}) {
    CoinConfig cc;
    cc.kind = CoinConfig::Kind::Weak;
    cc.d = d;
    cc.split = SplitStrategy::HalfHalf;
    CoinOracle oracle(p, cc, 0xC0FFEE + d);
    int u0 = 0, u1 = 0, split = 0;
    for (Round r = 1; r <= rounds; ++r) {
      oracle.request(r, 0);
      bool all0 = true, all1 = true;
      for (Pid q = 0; q < 3; ++q) {
        const Val v = *oracle.value_for(r, q);
        all0 = all0 && v == Val::Zero;
        all1 = all1 && v == Val::One;
      }
      if (all0)
        ++u0;
      else if (all1)
        ++u1;
      else
        ++split;
    }
    auto within3 = [&](int count, double prob) {
      const double sigma = std::sqrt(rounds * prob * (1 - prob));
      return std::fabs(count - rounds * prob) <= 3 * sigma;
    };
    const bool dok =
        within3(u0, 1.0 / d) && within3(u1, 1.0 / d) && within3(split, (d - 2.0) / d);
    char buf[100];
    std::snprintf(buf, sizeof(buf), "d=%d: %d/%d/%d%s;", d, u0, u1, split, dok ? "" : " OUT");
    detail += std::string(detail.empty() ? "" : " ") + buf;
    ok = ok && dok;
  }

  CoinConfig sc;
  sc.kind = CoinConfig::Kind::Strong;
  CoinOracle strong(p, sc, 0xBEEF);
  int mismatched = 0;
  for (Round r = 1; r <= rounds; ++r) {
    strong.request(r, 0);
    strong.request(r, 1);
    const Val v0 = *strong.value_for(r, 0);
    for (Pid q = 1; q < 4; ++q)
      if (*strong.value_for(r, q) != v0) ++mismatched;
  }
  char buf[120];
  std::snprintf(buf, sizeof(buf), " strong: %d mismatched rounds, %d gate violations", mismatched,
                strong.gate_violations());
  detail += buf;
  ok = ok && mismatched == 0 && strong.gate_violations() == 0;
  report(8, "coin distribution and gating", ok, detail);
}

}  // namespace

int main() {
  const double t0 = now_s();
  criteria_matrix();
  criterion_strong_rounds();
  criterion_weak_rounds();
  criterion_checker();
  criterion_determinism();
  criterion_coin();
  std::printf("%s (%d failed, %.0fs)\n", g_failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED",
              g_failures, now_s() - t0);
  return g_failures ? 1 : 0;
}
