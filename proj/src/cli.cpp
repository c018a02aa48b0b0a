#include "consync/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "consync/distributed.hpp"
#include "consync/edge_analysis.hpp"
#include "consync/errors.hpp"
#include "consync/riccati.hpp"
#include "consync/sdp.hpp"
#include "consync/simulate.hpp"
#include "consync/text_io.hpp"

namespace consync {

namespace fs = std::filesystem;

std::vector<double> parse_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw InputError("range must look like a:b:step, got '" + spec + "'");
  const double a = parse_double(parts[0], "range start");
  const double b = parse_double(parts[1], "range end");
  const double h = parse_double(parts[2], "range step");
  if (!(h > 0.0) || b < a) throw InputError("range needs step > 0 and end ≥ start");
  std::vector<double> out;
  const auto count = static_cast<long>(std::floor((b - a) / h + 1e-9));
  for (long k = 0; k <= count; ++k) out.push_back(a + static_cast<double>(k) * h);
  return out;
}

Edge parse_edge(const std::string& spec) {
  const auto comma = spec.find(',');
  if (comma == std::string::npos) throw InputError("edge must look like i,j");
  return Edge(parse_int(spec.substr(0, comma), "edge"), parse_int(spec.substr(comma + 1), "edge"));
}

namespace {

std::ofstream open_out(const RunConfig& c, const std::string& name) {
  fs::create_directories(c.out_dir);
  const fs::path path = fs::path(c.out_dir) / name;
  std::ofstream f(path);
  if (!f) throw InputError("cannot write '" + path.string() + "'");
  return f;
}

void require(const std::string& value, const char* flag, const std::string& command) {
  if (value.empty()) throw InputError(command + " needs " + flag);
}

SolverParams solver_params(const RunConfig& c) {
  return c.params_path.empty() ? SolverParams{} : read_solver_params_file(c.params_path);
}

// Laplacian used by the controller: the graph's own weights if it has them,
// otherwise the optimised realization.
Eigen::MatrixXd controller_laplacian(const RunConfig& c, const WeightedGraph& g, std::ostream& out) {
  if (g.has_weights()) return laplacian(g);
  const SdpProblem p = assemble_problem(g);
  const SdpSolution sol = solve_sdp(p, solver_params(c));
  out << "graph has no weights; using the optimised realization (t* = "
      << format_double(sol.t_star, 8) << ")\n";
  return laplacian(g, recover_weights(sol, p).w);
}

void cmd_optimize(const RunConfig& c, std::ostream& out) {
  require(c.graph_path, "--graph", c.command);
  const SdpProblem p = assemble_problem(read_graph_file(c.graph_path));
  const SdpSolution sol =
      c.nonnegative ? solve_sdp_nonnegative(p, solver_params(c)) : solve_sdp(p, solver_params(c));
  {
    auto f = open_out(c, "solution.csv");
    write_solution_csv(f, p, sol);
  }
  const KktReport kkt = kkt_residuals(sol, p);
  {
    auto f = open_out(c, "kkt.csv");
    write_kkt_report(f, kkt);
  }
  out << "t_star " << format_double(sol.t_star) << "\n";
  for (int k = 0; k < p.num_edges(); ++k) {
    out << "y" << to_string(p.graph.edge(k)) << " " << format_double(sol.y(k)) << "\n";
  }
  out << "iterations " << sol.iterations << "\nmax_kkt_residual " << format_double(kkt.max(), 3)
      << "\n";
}

void cmd_gain(const RunConfig& c, std::ostream& out) {
  require(c.system_path, "--system", c.command);
  require(c.graph_path, "--graph", c.command);
  const SystemModel sys = read_system_file(c.system_path);
  const WeightedGraph g = read_graph_file(c.graph_path);
  const SpectralSummary s = spectrum(controller_laplacian(c, g, out));
  const ControllerSpec ctl = synthesize_controller(sys, s.lambda2);
  auto f = open_out(c, "gain.txt");
  f << "lambda2 " << format_double(ctl.lambda2) << "\nP\n";
  write_matrix(f, ctl.P);
  f << "\nK\n";
  write_matrix(f, ctl.K);
  out << "lambda2 " << format_double(ctl.lambda2) << "\nP\n";
  write_matrix(out, ctl.P);
  out << "K\n";
  write_matrix(out, ctl.K);
}

void cmd_bounds(const RunConfig& c, std::ostream& out) {
  require(c.system_path, "--system", c.command);
  require(c.graph_path, "--graph", c.command);
  const SystemModel sys = read_system_file(c.system_path);
  const WeightedGraph g = read_graph_file(c.graph_path);
  const std::vector<double> sigmas = normalized_spectrum(controller_laplacian(c, g, out));
  const Eigen::MatrixXd P = solve_are(sys);
  const Eigen::MatrixXd P0 = solve_are(make_system(sys.A, sys.B));
  const EnergyBlocks eb = energy_blocks(sys, P, sigmas);
  auto f = open_out(c, "bounds.csv");
  f << "mode,sigma,lower_slack,upper_slack";
  for (int r = 1; r <= sys.n(); ++r) {
    for (int col = 1; col <= sys.n(); ++col) f << ",H_" << r << "_" << col;
  }
  f << "\n";
  for (std::size_t k = 0; k < sigmas.size(); ++k) {
    const BoundSlack sl = interval_slack(eb.blocks[k], P0, P, sigmas[k]);
    f << k + 2 << "," << format_double(sigmas[k]) << "," << format_double(sl.lower) << ","
      << format_double(sl.upper);
    for (int r = 0; r < sys.n(); ++r) {
      for (int col = 0; col < sys.n(); ++col) f << "," << format_double(eb.blocks[k](r, col));
    }
    f << "\n";
    out << "mode " << k + 2 << " sigma " << format_double(sigmas[k], 8) << " lower_slack "
        << format_double(sl.lower, 3) << " upper_slack " << format_double(sl.upper, 3) << "\n";
  }
}

void write_gnuplot(const RunConfig& c, const std::string& name, const std::string& body) {
  if (!c.gnuplot) return;
  auto f = open_out(c, name);
  f << "set datafile separator ','\nset key autotitle columnhead\n" << body;
}

void cmd_simulate(const RunConfig& c, std::ostream& out) {
  require(c.system_path, "--system", c.command);
  require(c.graph_path, "--graph", c.command);
  require(c.x0_path, "--x0", c.command);
  const SystemModel sys = read_system_file(c.system_path);
  const WeightedGraph g = read_graph_file(c.graph_path);
  const Eigen::MatrixXd L = controller_laplacian(c, g, out);
  const Eigen::VectorXd v = read_vector_file(c.x0_path);
  const int n = sys.n(), N = g.num_nodes();
  Eigen::VectorXd X0;
  if (v.size() == N * n) {
    X0 = v;
  } else if (v.size() == (N - 1) * n) {
    X0 = initial_from_modes(v, L, n);  // modal coordinates with x̄ = 0
  } else {
    throw InputError("--x0 must hold N·n or (N−1)·n values");
  }
  const SimulationResult r = simulate_closed_loop(sys, L, solve_are(sys), X0);
  {
    auto f = open_out(c, "trajectory.csv");
    write_trajectory_csv(f, r, n, c.stride);
  }
  write_gnuplot(c, "trajectory.gp",
                "set logscale y\nset xlabel 't'\nplot 'trajectory.csv' using 1:" +
                    std::to_string(N * n + 2) + " with lines title 'disagreement'\n");
  out << "T_f " << format_double(r.times.back()) << "\nfinal_disagreement "
      << format_double(r.disagreement.back(), 3) << "\nJ_numeric " << format_double(r.J_numeric)
      << "\nJ_analytic " << format_double(r.J_analytic) << "\n";
}

void cmd_analyze_edge(const RunConfig& c, std::ostream& out) {
  require(c.graph_path, "--graph", c.command);
  if (!c.edge) throw InputError("analyze-edge needs --edge i,j");
  const WeightedGraph g = read_graph_file(c.graph_path).without_weights();
  const SolverParams params = solver_params(c);
  const SdpSolution sol = solve_sdp(assemble_problem(g), params);
  const EdgeClassification cls = analyze_edge(sol, g, *c.edge);
  std::optional<VerificationReport> v;
  if (c.verify) v = verify_prediction(g, *c.edge, cls, sol.t_star, params);
  auto f = open_out(c, "edge_report.txt");
  write_edge_report(f, *c.edge, cls, v ? &*v : nullptr);
  write_edge_report(out, *c.edge, cls, v ? &*v : nullptr);
}

void cmd_distributed(const RunConfig& c, std::ostream& out) {
  require(c.graph_path, "--graph", c.command);
  const WeightedGraph g = read_graph_file(c.graph_path).without_weights();
  DistributedParams params =
      c.params_path.empty() ? DistributedParams{} : read_distributed_params_file(c.params_path);
  params.parallel = params.parallel || c.parallel;
  const DistributedRunReport r = run_distributed(g, params);
  {
    auto f = open_out(c, "run_log.csv");
    write_run_log_csv(f, r);
  }
  {
    auto f = open_out(c, "distributed_report.csv");
    write_distributed_report_csv(f, g, r);
  }
  out << "outer_iterations " << r.outer_iterations << "\ninner_iterations " << r.inner_iterations
      << "\nconsensus_residual " << format_double(r.consensus_residual, 6) << "\n";
  for (int k = 0; k < g.num_edges(); ++k) {
    const Edge& e = g.edge(k);
    out << "y" << to_string(e) << " " << format_double(r.summed_y[k]) << " (node " << e.i << ": "
        << format_double(r.per_node_y.at(e.i).at(k)) << ", node " << e.j << ": "
        << format_double(r.per_node_y.at(e.j).at(k)) << ")\n";
  }
}

void cmd_sweep(const RunConfig& c, std::ostream& out) {
  require(c.system_path, "--system", c.command);
  require(c.graph_path, "--graph", c.command);
  require(c.x0_path, "--x0", c.command);
  const std::vector<double> eps = parse_range(c.epsilons.empty() ? "0:3:0.5" : c.epsilons);
  const SystemModel sys = read_system_file(c.system_path);
  const WeightedGraph g = read_graph_file(c.graph_path);
  const Eigen::MatrixXd L = controller_laplacian(c, g, out);
  const auto rows = epsilon_sweep(sys.A, sys.B, read_vector_file(c.x0_path), L, eps);
  auto f = open_out(c, "sweep.csv");
  f << "epsilon,J\n";
  for (const auto& [e, J] : rows) {
    f << format_double(e) << "," << format_double(J) << "\n";
    out << "epsilon " << format_double(e) << " J " << format_double(J) << "\n";
  }
  write_gnuplot(c, "sweep.gp",
                "set xlabel 'epsilon'\nset ylabel 'J'\nplot 'sweep.csv' using 1:2 with linespoints\n");
}

}  // namespace

void run(const RunConfig& c, std::ostream& out) {
  if (c.command == "optimize") {
    cmd_optimize(c, out);
  } else if (c.command == "gain") {
    cmd_gain(c, out);
  } else if (c.command == "bounds") {
    cmd_bounds(c, out);
  } else if (c.command == "simulate") {
    cmd_simulate(c, out);
  } else if (c.command == "analyze-edge") {
    cmd_analyze_edge(c, out);
  } else if (c.command == "distributed") {
    cmd_distributed(c, out);
  } else if (c.command == "sweep") {
    cmd_sweep(c, out);
  } else {
    throw InputError("unknown command '" + c.command + "'");
  }
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Consensus controller synthesis: edge-weight SDP, Riccati gain, simulation"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string edge_spec;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--graph", cfg.graph_path, "graph file")->check(CLI::ExistingFile);
    sub->add_option("--out", cfg.out_dir, "output directory");
  };
  auto* optimize = app.add_subcommand("optimize", "optimise edge weights");
  add_common(optimize);
  optimize->add_option("--params", cfg.params_path, "solver key=value file")->check(CLI::ExistingFile);
  optimize->add_flag("--nonnegative", cfg.nonnegative, "restrict weights to y ≥ 0");

  for (const char* name : {"gain", "bounds"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "gain"
                                             ? "Riccati solution and consensus gain"
                                             : "energy blocks and interval-bound slack");
    add_common(sub);
    sub->add_option("--system", cfg.system_path, "system file")->check(CLI::ExistingFile);
    sub->add_option("--params", cfg.params_path, "solver key=value file")->check(CLI::ExistingFile);
  }

  auto* simulate = app.add_subcommand("simulate", "closed-loop simulation and energy");
  add_common(simulate);
  simulate->add_option("--system", cfg.system_path, "system file")->check(CLI::ExistingFile);
  simulate->add_option("--x0", cfg.x0_path, "initial state (N·n) or modal x̂₀ ((N−1)·n)")
      ->check(CLI::ExistingFile);
  simulate->add_option("--params", cfg.params_path, "solver key=value file")->check(CLI::ExistingFile);
  simulate->add_option("--stride", cfg.stride, "write every k-th time step")->check(CLI::PositiveNumber);
  simulate->add_flag("--gnuplot", cfg.gnuplot, "also write a gnuplot script");

  auto* analyze = app.add_subcommand("analyze-edge", "classify a candidate edge");
  add_common(analyze);
  analyze->add_option("--edge", edge_spec, "candidate edge i,j")->required();
  analyze->add_flag("--verify", cfg.verify, "re-solve with the edge added");
  analyze->add_option("--params", cfg.params_path, "solver key=value file")->check(CLI::ExistingFile);

  auto* distributed = app.add_subcommand("distributed", "per-node interior-point method");
  add_common(distributed);
  distributed->add_option("--params", cfg.params_path, "key=value file")->check(CLI::ExistingFile);
  distributed->add_flag("--parallel", cfg.parallel, "run nodes on worker threads");

  auto* sweep = app.add_subcommand("sweep", "energy cost over Q = εI");
  add_common(sweep);
  sweep->add_option("--system", cfg.system_path, "system file")->check(CLI::ExistingFile);
  sweep->add_option("--x0", cfg.x0_path, "modal initial value x̂₀")->check(CLI::ExistingFile);
  sweep->add_option("--epsilons", cfg.epsilons, "a:b:step (default 0:3:0.5)");
  sweep->add_option("--params", cfg.params_path, "solver key=value file")->check(CLI::ExistingFile);
  sweep->add_flag("--gnuplot", cfg.gnuplot, "also write a gnuplot script");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (!edge_spec.empty()) cfg.edge = parse_edge(edge_spec);
    run(cfg, out);
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ModelError& e) {
    err << "model error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ConvergenceError& e) {
    err << "convergence error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace consync
