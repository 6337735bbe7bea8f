#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include "torus_lab/experiments.hpp"

namespace {

int fail(const std::string& kind, const std::string& what, torus::ExitCode code) {
  nlohmann::ordered_json e;
  e["error"] = kind;
  e["exit_code"] = static_cast<int>(code);
  e["message"] = what;
  std::cerr << e.dump() << '\n';
  return static_cast<int>(code);
}

struct Options {
  std::string config;
  std::string out;
  int workers = 0;
  bool verify = false;
};

int run(const std::string& verb, const Options& o) {
  using namespace torus;
  ExperimentConfig c = load_config(o.config);
  if (c.experiment.empty()) c.experiment = verb;
  if (c.experiment != verb)
    throw ValidationError("config describes experiment '" + c.experiment + "' but the command is '" + verb + "'");
  if (!o.out.empty()) c.output_dir = o.out;
  if (o.workers < 0) throw ValidationError("--workers must be >= 0");
#ifdef _OPENMP
  if (o.workers > 0) omp_set_num_threads(o.workers);
#endif
  validate(c);

  if (o.verify) {
    bool ok = true;
    for (const InvariantCheck& k : verify_invariants(c.A)) {
      std::printf("verify %-28s %.3e (tol %.0e) %s\n", k.name.c_str(), k.value, k.tolerance, k.pass() ? "ok" : "FAIL");
      ok = ok && k.pass();
    }
    if (!ok) throw InternalError("invariant suite failed");
  }

  const auto start = std::chrono::steady_clock::now();
  const ScanResult r = run_experiment(c);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const WrittenScan w = write_scan(r, to_json(c), c.output_dir, secs);

  std::printf("%s  hash %s  rows %zu  %.1f s\n", r.experiment.c_str(), w.hash.c_str(), r.rows.size(), secs);
  for (const std::string& line : r.notes) std::printf("  %s\n", line.c_str());
  std::printf("  csv      %s\n  manifest %s\n", w.csv.string().c_str(), w.manifest.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantized perturbed cat map experiments"};
  app.set_version_flag("--version", std::string(torus::version));
  app.require_subcommand(1);
  Options o;
  for (const std::string& tag : torus::experiment_tags()) {
    CLI::App* sub = app.add_subcommand(tag, "run the " + tag + " experiment");
    sub->add_option("--config", o.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--workers", o.workers, "OpenMP threads, 0 keeps the runtime default");
    sub->add_flag("--verify", o.verify, "run the invariant suite first");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return static_cast<int>(torus::ExitCode::validation);
  }
  const std::string verb = app.get_subcommands().front()->get_name();
  try {
    return run(verb, o);
  } catch (const torus::Error& e) {
    return fail(e.kind(), e.what(), e.code());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what(), torus::ExitCode::internal);
  }
}
