#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "treecvrp/common.hpp"
#include "treecvrp/instance.hpp"
#include "treecvrp/oracle.hpp"
#include "treecvrp/solver.hpp"

namespace treecvrp {

struct BatchRow {
  std::string id;
  int n = 0;
  std::int64_t q = 0;
  std::int64_t lb = 0;
  std::int64_t cost = 0;
  std::int64_t margin = 0;
  std::int64_t itp_cost = 0;
  std::optional<std::int64_t> oracle_cost;
  int iterations = 0;
  double wall_ms = 0;
  std::string status = "ok";
  bool cert_failed = false;
};

struct BatchOptions {
  int jobs = 1;
  bool with_oracle = false;
  std::int64_t granule_limit = 10;
};

struct BatchResult {
  std::vector<BatchRow> rows;
  bool any_cert_failure = false;

  /// Largest cost/LB over rows with positive LB, as an exact fraction.
  std::pair<std::int64_t, std::int64_t> max_ratio() const {
    std::pair<std::int64_t, std::int64_t> best{0, 1};
    for (const BatchRow& r : rows) {
      if (r.lb <= 0 || r.status != "ok") continue;
      if (r.cost * best.second > best.first * r.lb) best = {r.cost, r.lb};
    }
    return best;
  }

  std::string summary() const {
    int ok = 0;
    double ratio_sum = 0;
    int ratio_count = 0;
    std::vector<double> walls;
    for (const BatchRow& r : rows) {
      if (r.status == "ok") {
        ++ok;
        walls.push_back(r.wall_ms);
        if (r.lb > 0) {
          ratio_sum += static_cast<double>(r.cost) / static_cast<double>(r.lb);
          ++ratio_count;
        }
      }
    }
    std::sort(walls.begin(), walls.end());
    auto pct = [&](double p) {
      if (walls.empty()) return 0.0;
      std::size_t i = static_cast<std::size_t>(p * (walls.size() - 1));
      return walls[i];
    };
    auto [rn, rd] = max_ratio();
    std::ostringstream os;
    os << "# instances=" << rows.size() << " ok=" << ok << " max_ratio=" << rn << "/" << rd << " ("
       << (rd > 0 ? static_cast<double>(rn) / static_cast<double>(rd) : 0.0) << ")"
       << " mean_ratio=" << (ratio_count ? ratio_sum / ratio_count : 0.0) << " wall_p50_ms=" << pct(0.5)
       << " wall_p95_ms=" << pct(0.95) << " wall_max_ms=" << (walls.empty() ? 0.0 : walls.back());
    return os.str();
  }
};

inline BatchRow batch_one(const std::string& id, const Instance& inst, const BatchOptions& opt) {
  BatchRow row;
  row.id = id;
  row.n = inst.size();
  row.q = inst.capacity();
  row.lb = inst.lower_bound();
  auto start = std::chrono::steady_clock::now();
  try {
    SolveReport rep = solve(inst);
    row.cost = rep.solution.cost;
    row.margin = rep.margin;
    row.iterations = rep.iterations;
    VerificationReport check = verify_solution(inst, rep.solution);
    if (!check.accepted()) {
      row.status = "verification failed";
      row.cert_failed = true;
    }
  } catch (const Error& e) {
    row.status = e.what();
    row.cert_failed = true;
  }
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  try {
    row.itp_cost = itp_baseline(inst).cost;
  } catch (const Error&) {
    row.itp_cost = -1;
  }
  if (opt.with_oracle && inst.total_demand() <= opt.granule_limit) {
    try {
      row.oracle_cost = exact_opt(inst, opt.granule_limit);
      if (row.status == "ok" && (row.lb > *row.oracle_cost || *row.oracle_cost > row.cost)) {
        row.status = "oracle sandwich violated";
        row.cert_failed = true;
      }
    } catch (const Error&) {
    }
  }
  return row;
}

/// Runs every instance on a small worker pool; rows come back in input order.
inline BatchResult run_batch(const std::vector<std::pair<std::string, Instance>>& instances,
                             const BatchOptions& opt) {
  BatchResult result;
  result.rows.resize(instances.size());
  int jobs = std::max(1, opt.jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= instances.size()) break;
      result.rows[i] = batch_one(instances[i].first, instances[i].second, opt);
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  for (const BatchRow& r : result.rows) result.any_cert_failure = result.any_cert_failure || r.cert_failed;
  return result;
}

/// CSV with a fixed column set (documented in the CLI help). The certificate
/// column is the exact fraction 3*cost/4*LB; ratio is the decimal cost/LB.
inline std::string batch_csv(const BatchResult& result, bool with_wall = true) {
  std::ostringstream os;
  os << "id,n,q,lb,cost,cert,ratio,margin,itp_cost,oracle_cost,iterations";
  if (with_wall) os << ",wall_ms";
  os << ",status\n";
  for (const BatchRow& r : result.rows) {
    os << r.id << "," << r.n << "," << r.q << "," << r.lb << "," << r.cost << "," << 3 * r.cost << "/"
       << 4 * r.lb << ",";
    if (r.lb > 0)
      os << static_cast<double>(r.cost) / static_cast<double>(r.lb);
    os << "," << r.margin << "," << r.itp_cost << ",";
    if (r.oracle_cost) os << *r.oracle_cost;
    os << "," << r.iterations;
    if (with_wall) os << "," << r.wall_ms;
    os << "," << r.status << "\n";
  }
  return os.str();
}

}  // namespace treecvrp
