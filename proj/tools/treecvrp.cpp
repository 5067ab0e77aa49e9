#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "treecvrp/cli.hpp"

using namespace treecvrp;

int main(int argc, char** argv) {
  CLI::App app{"Tree CVRP solver: splittable capacitated vehicle routing on trees\n"
               "with an exact edge-traffic lower bound and a certified 4/3 guarantee."};
  app.require_subcommand(1);

  std::string instance_path, solution_path, out_path, trace_path, dir;
  std::int64_t granule_limit = 10;
  GenParams gen;
  std::string shape = "random-tree";
  int count = 0;
  cli::BatchSpec batch;

  auto add_gen_flags = [&](CLI::App* cmd) {
    cmd->add_option("--shape", shape, "random-tree | caterpillar | chain-stack");
    cmd->add_option("--n", gen.n, "vertex budget");
    cmd->add_option("--q", gen.capacity, "vehicle capacity Q");
    cmd->add_option("--max-len", gen.max_len, "maximum edge length");
    cmd->add_option("--max-demand", gen.max_demand, "maximum client demand (<= 3Q)");
    cmd->add_option("--seed", gen.seed, "64-bit seed");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve an instance document");
  solve_cmd->add_option("instance", instance_path, "instance JSON")->required();
  solve_cmd->add_option("--out", out_path, "write the solution here instead of stdout");
  solve_cmd->add_option("--trace", trace_path, "write op/tour-set JSON lines here");

  CLI::App* verify_cmd = app.add_subcommand("verify", "check a solution document against an instance");
  verify_cmd->add_option("instance", instance_path, "instance JSON")->required();
  verify_cmd->add_option("solution", solution_path, "solution JSON")->required();

  CLI::App* lb_cmd = app.add_subcommand("lb", "print the edge-traffic lower bound");
  lb_cmd->add_option("instance", instance_path, "instance JSON")->required();

  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a deterministic instance");
  add_gen_flags(gen_cmd);
  gen_cmd->add_option("--out", out_path, "write the instance here instead of stdout");

  CLI::App* oracle_cmd = app.add_subcommand("oracle", "exact optimum for granule-small instances");
  oracle_cmd->add_option("instance", instance_path, "instance JSON")->required();
  oracle_cmd->add_option("--granule-limit", granule_limit, "max total demand units (default 10)");

  CLI::App* baseline_cmd = app.add_subcommand("baseline", "iterated tour partitioning baseline");
  baseline_cmd->add_option("instance", instance_path, "instance JSON")->required();

  CLI::App* batch_cmd = app.add_subcommand(
      "batch",
      "solve many instances and report CSV\n"
      "columns: id,n,q,lb,cost,cert,ratio,margin,itp_cost,oracle_cost,iterations,wall_ms,status\n"
      "cert is the exact fraction 3*cost/4*LB; ratio is the decimal cost/LB;\n"
      "a trailing '#'-prefixed summary line carries max/mean ratio and wall-time percentiles");
  batch_cmd->add_option("dir", dir, "directory of instance *.json files");
  add_gen_flags(batch_cmd);
  batch_cmd->add_option("--count", count, "number of instances to generate (without a directory)");
  batch_cmd->add_option("--jobs", batch.options.jobs, "worker threads");
  batch_cmd->add_flag("--with-oracle", batch.options.with_oracle, "add the oracle column where feasible");
  batch_cmd->add_option("--granule-limit", batch.options.granule_limit, "oracle size cap");
  batch_cmd->add_option("--out", out_path, "write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (gen_cmd->parsed() || batch_cmd->parsed()) {
    auto parsed = shape_from_name(shape);
    if (!parsed) {
      std::cerr << "error: unknown shape '" << shape << "'\n";
      return cli::kInputError;
    }
    gen.shape = *parsed;
  }

  if (solve_cmd->parsed()) return cli::cmd_solve(instance_path, out_path, trace_path, std::cout, std::cerr);
  if (verify_cmd->parsed()) return cli::cmd_verify(instance_path, solution_path, std::cout, std::cerr);
  if (lb_cmd->parsed()) return cli::cmd_lb(instance_path, std::cout, std::cerr);
  if (gen_cmd->parsed()) return cli::cmd_gen(gen, out_path, std::cout, std::cerr);
  if (oracle_cmd->parsed()) return cli::cmd_oracle(instance_path, granule_limit, std::cout, std::cerr);
  if (baseline_cmd->parsed()) return cli::cmd_baseline(instance_path, std::cout, std::cerr);
  if (batch_cmd->parsed()) {
    batch.dir = dir;
    batch.gen = gen;
    batch.count = count;
    batch.out_path = out_path;
    return cli::cmd_batch(batch, std::cout, std::cerr);
  }
  return cli::kInputError;
}
