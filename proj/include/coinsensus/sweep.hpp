#pragma once

#include <cinttypes>
#include <cstdio>
#include <map>
#include <string>

#include "coinsensus/simnet.hpp"

namespace coinsensus {

// One sweep cell: the base config run `runs` times with consecutive seeds.
struct SweepSpec {
  RunConfig base;
  int runs = 1;
  std::uint64_t seed_start = 1;

  void validate() const {
    if (runs < 1) throw ConfigError("runs must be >= 1");
    base.validate();
  }
};

struct SweepStats {
  std::string cell_id;
  int runs = 0;
  double mean_round = 0.0;
  Round p50 = 0;
  Round p95 = 0;
  Round max_round = 0;
  std::map<Round, int> histogram;  // per-run final decision round; 0 = timeout
  int violations = 0;              // runs with safety_ok == false
  int timeouts = 0;
  // Per-process per-round broadcast counts over completed rounds.
  std::uint32_t bcast_min = 0;
  std::uint32_t bcast_max = 0;
  std::uint32_t bcast_min_r1 = 0;
  std::uint32_t bcast_max_r1 = 0;
  std::uint32_t bcast_min_rest = 0;  // rounds >= 2; 0/0 when no such round
  std::uint32_t bcast_max_rest = 0;
};

namespace detail {

inline Round percentile(const std::map<Round, int>& hist, int total, double q) {
  const double target = q * total;
  double acc = 0;
  for (const auto& [r, c] : hist) {
    acc += c;
    if (acc >= target) return r;
  }
  return hist.empty() ? 0 : hist.rbegin()->first;
}

}  // namespace detail

inline SweepStats sweep(const SweepSpec& spec, const std::string& cell_id = "cell") {
  spec.validate();
  SweepStats st;
  st.cell_id = cell_id;
  st.runs = spec.runs;
  std::uint32_t bmin = UINT32_MAX, bmax = 0;
  std::uint32_t bmin1 = UINT32_MAX, bmax1 = 0;
  std::uint32_t bminr = UINT32_MAX, bmaxr = 0;
  double sum = 0;
  int decided_runs = 0;
  for (int i = 0; i < spec.runs; ++i) {
    RunConfig cfg = spec.base;
    cfg.seed = spec.seed_start + static_cast<std::uint64_t>(i);
    RunResult res = run(cfg);
    if (!res.safety_ok) ++st.violations;
    if (res.timed_out) {
      ++st.timeouts;
      ++st.histogram[0];
    } else {
      const Round r = res.max_decision_round();
      ++st.histogram[r];
      st.max_round = std::max(st.max_round, r);
      sum += r;
      ++decided_runs;
    }
    for (Pid p = 0; p < static_cast<Pid>(cfg.params.n); ++p) {
      if (!cfg.params.is_non_faulty(p)) continue;
      const Round done = res.last_completed_round[p];
      for (Round r = 1; r <= done && r <= res.broadcasts[p].size(); ++r) {
        const std::uint32_t c = res.broadcasts[p][r - 1];
        bmin = std::min(bmin, c);
        bmax = std::max(bmax, c);
        if (r == 1) {
          bmin1 = std::min(bmin1, c);
          bmax1 = std::max(bmax1, c);
        } else {
          bminr = std::min(bminr, c);
          bmaxr = std::max(bmaxr, c);
        }
      }
    }
  }
  if (decided_runs > 0) st.mean_round = sum / decided_runs;
  st.p50 = detail::percentile(st.histogram, spec.runs, 0.50);
  st.p95 = detail::percentile(st.histogram, spec.runs, 0.95);
  st.bcast_min = bmin == UINT32_MAX ? 0 : bmin;
  st.bcast_max = bmax;
  st.bcast_min_r1 = bmin1 == UINT32_MAX ? 0 : bmin1;
  st.bcast_max_r1 = bmax1;
  st.bcast_min_rest = bminr == UINT32_MAX ? 0 : bminr;
  st.bcast_max_rest = bmaxr;
  return st;
}

inline std::string sweep_csv_header() {
  return "cell-id,runs,mean_round,p50,p95,max,violations,timeouts,bcast_min,bcast_max";
}

inline std::string sweep_csv_row(const SweepStats& st) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.4f,%u,%u,%u,%d,%d,%u,%u", st.cell_id.c_str(),
                st.runs, st.mean_round, st.p50, st.p95, st.max_round, st.violations,
                st.timeouts, st.bcast_min, st.bcast_max);
  return buf;
}

}  // namespace coinsensus
