#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "treecvrp/batch.hpp"
#include "treecvrp/common.hpp"
#include "treecvrp/generator.hpp"
#include "treecvrp/instance.hpp"
#include "treecvrp/oracle.hpp"
#include "treecvrp/solver.hpp"

namespace treecvrp::cli {

// Exit codes: 0 success, 1 input error, 2 certificate/guarantee violation.
inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kCertificateError = 2;

inline int log_level() {
  const char* env = std::getenv("TREECVRP_LOG");
  return env ? std::atoi(env) : 0;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

inline void emit(const std::string& text, const std::string& out_path, std::ostream& fallback) {
  if (out_path.empty())
    fallback << text;
  else
    write_file(out_path, text);
}

inline int cmd_solve(const std::string& instance_path, const std::string& out_path,
                     const std::string& trace_path, std::ostream& out, std::ostream& err) {
  Instance inst;
  try {
    inst = Instance::parse(read_file(instance_path));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  try {
    SolveReport rep = solve(inst);
    emit(rep.solution.serialize(), out_path, out);
    if (!trace_path.empty()) {
      std::string lines;
      for (const OpRecord& op : rep.op_log) lines += op.to_json() + "\n";
      for (const std::string& tsl : rep.set_traces) lines += tsl + "\n";
      write_file(trace_path, lines);
    }
    err << "cost=" << rep.solution.cost << " lb=" << rep.lower_bound << " 3c<=4LB: "
        << (rep.solution.ratio_ok() ? "true" : "false") << " cert=" << 3 * rep.solution.cost << "/"
        << 4 * rep.lower_bound << " margin=" << rep.margin << " iterations=" << rep.iterations << "\n";
    if (log_level() >= 2)
      for (const std::string& tsl : rep.set_traces) err << tsl << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "guarantee violation: " << e.what() << "\n";
    return kCertificateError;
  }
}

inline int cmd_verify(const std::string& instance_path, const std::string& solution_path,
                      std::ostream& out, std::ostream& err) {
  Instance inst;
  Solution sol;
  try {
    inst = Instance::parse(read_file(instance_path));
    sol = Solution::parse(read_file(solution_path));
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  VerificationReport rep = verify_solution(inst, sol);
  out << "loads: " << (rep.loads_ok ? "ok" : "FAIL") << "\n"
      << "coverage: " << (rep.coverage_ok ? "ok" : "FAIL") << "\n"
      << "cost: " << (rep.cost_ok ? "ok" : "FAIL") << " (recomputed " << rep.recomputed_cost << ")\n"
      << "ratio (advisory): " << (rep.ratio_ok ? "ok" : "exceeded") << " cert=" << 3 * sol.cost << "/"
      << 4 * rep.recomputed_lb << "\n";
  for (const std::string& v : rep.violations) out << "violation: " << v << "\n";
  return rep.accepted() ? kOk : kCertificateError;
}

inline int cmd_lb(const std::string& instance_path, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = Instance::parse(read_file(instance_path));
    out << inst.lower_bound() << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline int cmd_gen(const GenParams& params, const std::string& out_path, std::ostream& out,
                   std::ostream& err) {
  try {
    Instance inst = generate(params);
    emit(inst.serialize(), out_path, out);
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline int cmd_oracle(const std::string& instance_path, std::int64_t granule_limit, std::ostream& out,
                      std::ostream& err) {
  try {
    Instance inst = Instance::parse(read_file(instance_path));
    Solution sol = oracle_solution(inst, granule_limit);
    out << sol.serialize();
    err << "oracle cost=" << sol.cost << " lb=" << sol.lower_bound << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline int cmd_baseline(const std::string& instance_path, std::ostream& out, std::ostream& err) {
  try {
    Instance inst = Instance::parse(read_file(instance_path));
    Solution sol = itp_baseline(inst);
    out << sol.serialize();
    err << "baseline cost=" << sol.cost << " lb=" << sol.lower_bound << "\n";
    return kOk;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

struct BatchSpec {
  std::string dir;  // when set, read every *.json under it
  GenParams gen;    // otherwise generate `count` instances from these params
  int count = 0;
  BatchOptions options;
  std::string out_path;
};

inline int cmd_batch(const BatchSpec& spec, std::ostream& out, std::ostream& err) {
  std::vector<std::pair<std::string, Instance>> instances;
  bool any_unreadable = false;
  if (!spec.dir.empty()) {
    std::vector<std::string> files;
    try {
      for (const auto& entry : std::filesystem::directory_iterator(spec.dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path().string());
    } catch (const std::filesystem::filesystem_error& e) {
      err << "error: " << e.what() << "\n";
      return kInputError;
    }
    std::sort(files.begin(), files.end());
    for (const std::string& f : files) {
      try {
        instances.emplace_back(std::filesystem::path(f).filename().string(), Instance::parse(read_file(f)));
      } catch (const Error& e) {
        err << "skipping '" << f << "': " << e.what() << "\n";
        any_unreadable = true;
      }
    }
  } else {
    if (spec.count < 1) {
      err << "error: batch needs a directory or --count\n";
      return kInputError;
    }
    for (int i = 0; i < spec.count; ++i) {
      GenParams p = spec.gen;
      p.seed = spec.gen.seed + static_cast<std::uint64_t>(i);
      try {
        instances.emplace_back(std::string(shape_name(p.shape)) + "-" + std::to_string(p.seed), generate(p));
      } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
      }
    }
  }
  BatchResult result = run_batch(instances, spec.options);
  std::string csv = batch_csv(result) + result.summary() + "\n";
  emit(csv, spec.out_path, out);
  if (result.any_cert_failure) return kCertificateError;
  return any_unreadable ? kInputError : kOk;
}

}  // namespace treecvrp::cli
