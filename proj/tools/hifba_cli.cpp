// hifba command line: run-inverse, run-nmf, validate.
//
// Every flag can also be given in an INI file passed with --config, under a
// section named after the subcommand ([run-inverse], [run-nmf], [validate]);
// flags on the command line win.

#include "hifba/harness/experiments.hpp"
#include "hifba/harness/validate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using hifba::harness::CommonConfig;
using nlohmann::json;

int fail(const std::string& type, const std::string& message, int code) {
  std::cerr << json{{"error", {{"type", type}, {"message", message}}}}.dump() << std::endl;
  return code;
}

struct CommonFlags {
  std::string out = "out";
  std::vector<std::uint64_t> seeds{1};
  std::optional<double> budget_secs;
  std::optional<std::size_t> budget_iters;
  std::size_t jobs = 1;

  void attach(CLI::App* sub) {
    sub->add_option("--out", out, "Output directory")->capture_default_str();
    sub->add_option("--seed", seeds, "Seed list, comma separated")->delimiter(',')->capture_default_str();
    auto* secs = sub->add_option("--budget-secs", budget_secs, "Wall-clock budget per run (seconds)");
    auto* iters = sub->add_option("--budget-iters", budget_iters, "Iteration budget per run");
    secs->excludes(iters);
    sub->add_option("--jobs", jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
  }

  CommonConfig config() const {
    CommonConfig c;
    c.out_dir = out;
    c.seeds = seeds;
    c.budget.seconds = budget_secs;
    c.budget.iterations = budget_iters;
    c.jobs = jobs;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"High-order inexact forward-backward algorithms: experiments and validation", "hifba"};
  app.set_version_flag("--version", std::string(hifba::harness::kVersion));
  app.require_subcommand(1);
  // Subcommands pass --config up to the root, where CLI11 reads it.
  app.fallthrough();
  app.set_config("--config", "", "INI configuration file (sections: [run-inverse], [run-nmf], [validate])");

  hifba::harness::InverseConfig inv;
  CommonFlags inv_common;
  std::optional<double> beta_h, beta_b, beta_s;
  auto* run_inverse = app.add_subcommand("run-inverse", "Sparse recovery with l_q fidelity and clipped penalty");
  inv_common.attach(run_inverse);
  run_inverse->add_option("--rows", inv.m, "Rows of A")->capture_default_str();
  run_inverse->add_option("--cols", inv.n, "Columns of A")->capture_default_str();
  run_inverse->add_option("--sparsity", inv.sparsity, "Fraction of nonzeros in x_true")->capture_default_str();
  run_inverse->add_option("--noise", inv.noise, "Laplace noise level")->capture_default_str();
  run_inverse->add_option("--lambda", inv.lambda, "Penalty weight")->capture_default_str();
  run_inverse->add_option("--q", inv.q_values, "Fidelity exponents")->delimiter(',')->capture_default_str();
  run_inverse->add_option("--solvers", inv.solvers, "hifba, boosted, sg_gdss, sg_css")
      ->delimiter(',')
      ->capture_default_str();
  run_inverse->add_option("--sg-css-alphas", inv.sg_css_alphas, "SG-CSS step sizes")
      ->delimiter(',')
      ->capture_default_str();
  run_inverse->add_option("--beta0-hifba", beta_h, "Inner beta0 for HiFBA (default: per-q table)");
  run_inverse->add_option("--beta0-boosted", beta_b, "Inner beta0 for Boosted HiFBA (default: per-q table)");
  run_inverse->add_option("--beta0-sg-gdss", beta_s, "beta0 for SG-GDSS (default: per-q table)");
  run_inverse->add_option("--vartheta", inv.vartheta, "Backtracking factor")->capture_default_str();
  run_inverse->add_option("--max-inner", inv.max_inner, "Inner iterations per pass")->capture_default_str();
  run_inverse->add_option("--step-tol", inv.step_tol, "Inner step tolerance")->capture_default_str();
  run_inverse->add_option("--max-restarts", inv.max_restarts, "Inner restarts")->capture_default_str();
  run_inverse->add_option("--max-iterations", inv.max_iterations, "Iteration cap under a seconds budget")
      ->capture_default_str();
  run_inverse->add_flag("--snr-squared", inv.snr_squared, "Also write the 20 log10 SNR column");

  hifba::harness::NmfConfig nmf;
  CommonFlags nmf_common;
  auto* run_nmf = app.add_subcommand("run-nmf", "Regularized NMF: HiFBA, Boosted HiFBA, BPG");
  nmf_common.attach(run_nmf);
  run_nmf->add_option("--data", nmf.data_path, "Dense CSV matrix (default: synthetic uniform data)");
  run_nmf->add_option("--rows", nmf.m, "Rows of synthetic X")->capture_default_str();
  run_nmf->add_option("--cols", nmf.n, "Columns of synthetic X")->capture_default_str();
  run_nmf->add_option("--data-lo", nmf.data_lo, "Uniform lower bound")->capture_default_str();
  run_nmf->add_option("--data-hi", nmf.data_hi, "Uniform upper bound")->capture_default_str();
  run_nmf->add_option("--rank", nmf.rank, "Factorization rank")->capture_default_str();
  run_nmf->add_option("--lambda", nmf.lambda, "l1 weight")->capture_default_str();
  run_nmf->add_option("--gamma-hifba", nmf.gamma_hifba, "HiFBA step")->capture_default_str();
  run_nmf->add_option("--gamma-boosted", nmf.gamma_boosted, "Boosted HiFBA step")->capture_default_str();
  run_nmf->add_option("--gamma-bpg", nmf.gamma_bpg, "BPG step")->capture_default_str();
  run_nmf->add_option("--vartheta", nmf.vartheta, "Backtracking factor")->capture_default_str();
  run_nmf->add_option("--solvers", nmf.solvers, "hifba, boosted, bpg")->delimiter(',')->capture_default_str();
  run_nmf->add_flag("--force", nmf.force, "Accept kernel parameters below the smoothness threshold");

  hifba::harness::ValidateConfig val;
  CommonFlags val_common;
  auto* validate = app.add_subcommand("validate", "Majorant, paraconcavity and envelope property suites");
  val_common.attach(validate);
  validate->add_option("--samples", val.samples, "Sample pairs per majorant check")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (*run_inverse) {
      inv.common = inv_common.config();
      inv.beta0_hifba = beta_h;
      inv.beta0_boosted = beta_b;
      inv.beta0_sg_gdss = beta_s;
      const auto report = hifba::harness::run_inverse(inv);
      std::cout << json{{"status", "ok"}, {"runs", report.cells.size()}, {"summary", report.summary_path.string()}}.dump()
                << std::endl;
    } else if (*run_nmf) {
      nmf.common = nmf_common.config();
      const auto report = hifba::harness::run_nmf(nmf);
      std::cout << json{{"status", "ok"}, {"runs", report.cells.size()}, {"out", nmf.common.out_dir}}.dump()
                << std::endl;
    } else if (*validate) {
      val.common = val_common.config();
      if (val.common.budget.iterations) val.samples = *val.common.budget.iterations;
      hifba::harness::ensure_directory(val.common.out_dir);
      const json report = hifba::harness::run_validate(val);
      const std::string text = report.dump(2) + "\n";
      hifba::harness::write_file_atomic(std::filesystem::path(val.common.out_dir) / "validate.json", text);
      json manifest = hifba::harness::manifest_base("validate", val.common);
      manifest["config"] = {{"samples", val.samples}};
      hifba::harness::write_file_atomic(std::filesystem::path(val.common.out_dir) / "manifest.json",
                                        manifest.dump(2) + "\n");
      std::cout << text;
      if (!report["all_ok"].get<bool>()) return fail("validation_failed", "one or more checks failed", 1);
    }
  } catch (const hifba::harness::IoError& e) {
    return fail("io", e.what(), 1);
  } catch (const hifba::CsvError& e) {
    return fail("io", e.what(), 1);
  } catch (const hifba::InvariantViolation& e) {
    return fail("invariant_violation", e.what(), 1);
  } catch (const hifba::SolverAbort& e) {
    return fail("solver_abort", e.what(), 1);
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 2);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 1);
  }
  return 0;
}
