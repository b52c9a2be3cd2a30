// Experiment driver: canned figure sweeps, custom campaigns, and one-shot
// coded matrix multiplication. See README.md for the CSV format and examples.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "srkrp/cli.hpp"
#include "srkrp/error.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw srkrp::IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srkrp: sparse Khatri-Rao coded matrix multiplication experiments"};

  std::string experiment = "custom";
  std::string config_path;
  std::string output_path;
  std::uint64_t seed = 1;
  int jobs = 1;

  long long trials_max = -1;
  long long target_failures = -1;
  long long target_successes = -1;
  std::vector<double> theta;
  long long m = -1, n = -1, r = -1, s = -1, t = -1;
  long long workers = -1, stragglers = -1, extras = -1;
  std::string udist, vdist, master_udist, master_vdist, coeff_dist, norm;
  bool stability = false;
  double rank_tol = 0;
  std::string a_path, b_path;

  app.add_option("--experiment", experiment,
                 "fig1, fig2_3, fig4, fig5, fig6, fig7, custom or matmul");
  app.add_option("--config", config_path, "JSON config file; flags override its keys");
  app.add_option("--seed", seed, "master seed for the whole run");
  app.add_option("--jobs", jobs, "campaign points to run concurrently");
  app.add_option("--output,-o", output_path, "output file (CSV, or matrix for matmul)");
  app.add_option("--trials-max", trials_max, "trial cap per campaign point");
  app.add_option("--target-failures", target_failures, "stop a point after this many failures");
  app.add_option("--target-successes", target_successes,
                 "stop a stability point after this many successes");
  app.add_option("--theta", theta, "weight multiplier grid, w_avg = theta * ln K");
  app.add_option("--m", m, "column blocks of A");
  app.add_option("--n", n, "column blocks of B");
  app.add_option("--r", r, "shared inner dimension (custom campaigns)");
  app.add_option("--s", s, "columns of A (custom campaigns)");
  app.add_option("--t", t, "columns of B (custom campaigns)");
  app.add_option("--workers", workers, "worker count N");
  app.add_option("--stragglers", stragglers, "erased worker count S");
  app.add_option("--extra-computations", extras, "master-local task count R");
  app.add_option("--udist", udist, "worker weight distribution for A, e.g. dense, simplest(3), 2:0.5,3:0.5");
  app.add_option("--vdist", vdist, "worker weight distribution for B");
  app.add_option("--master-udist", master_udist, "master weight distribution for A");
  app.add_option("--master-vdist", master_vdist, "master weight distribution for B");
  app.add_option("--coeff-dist", coeff_dist, "uniform01 or standard_normal");
  app.add_option("--norm", norm, "spectral or frobenius (stability campaigns)");
  app.add_flag("--stability", stability, "run a stability campaign (custom)");
  app.add_option("--rank-tol", rank_tol, "absolute singular value cutoff for rank decisions");
  app.add_option("--a", a_path, "left input matrix file (matmul)");
  app.add_option("--b", b_path, "right input matrix file (matmul)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    srkrp::cli::RunSpec spec;
    if (!config_path.empty()) spec = srkrp::cli::parse_config(read_file(config_path));

    if (app.count("--experiment")) spec.experiment = srkrp::cli::parse_experiment(experiment);
    if (app.count("--seed")) spec.seed = seed;
    if (app.count("--jobs")) spec.jobs = jobs;
    if (app.count("--output")) spec.output_path = output_path;

    auto& ov = spec.overrides;
    if (app.count("--trials-max")) ov["trials_max"] = trials_max;
    if (app.count("--target-failures")) ov["target_failures"] = target_failures;
    if (app.count("--target-successes")) ov["target_successes"] = target_successes;
    if (app.count("--theta")) {
      if (theta.size() == 1)
        ov["theta"] = theta.front();
      else
        ov["theta"] = theta;
    }
    if (app.count("--m")) ov["m"] = m;
    if (app.count("--n")) ov["n"] = n;
    if (app.count("--r")) ov["r"] = r;
    if (app.count("--s")) ov["s"] = s;
    if (app.count("--t")) ov["t"] = t;
    if (app.count("--workers")) ov["workers"] = workers;
    if (app.count("--stragglers")) ov["stragglers"] = stragglers;
    if (app.count("--extra-computations")) ov["extra_computations"] = extras;
    if (app.count("--udist")) ov["udist"] = udist;
    if (app.count("--vdist")) ov["vdist"] = vdist;
    if (app.count("--master-udist")) ov["master_udist"] = master_udist;
    if (app.count("--master-vdist")) ov["master_vdist"] = master_vdist;
    if (app.count("--coeff-dist")) ov["coeff_dist"] = coeff_dist;
    if (app.count("--norm")) ov["norm"] = norm;
    if (stability) ov["stability"] = true;
    if (app.count("--rank-tol")) ov["rank_tol"] = rank_tol;
    if (app.count("--a")) ov["a"] = a_path;
    if (app.count("--b")) ov["b"] = b_path;

    srkrp::cli::run(spec, std::cout);
    return 0;
  } catch (const srkrp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const srkrp::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return 2;
  } catch (const srkrp::ShapeError& e) {
    std::cerr << "shape error: " << e.what() << "\n";
    return 2;
  } catch (const srkrp::DecodeFailure& e) {
    std::cerr << "decode failed: " << e.what() << "\n";
    return 1;
  } catch (const srkrp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
