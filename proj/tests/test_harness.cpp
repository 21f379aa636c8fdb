#include "hifba/harness/experiments.hpp"
#include "hifba/harness/validate.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

using namespace hifba;
using namespace hifba::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("hifba_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string(HIFBA_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

SolverTrace sample_trace() {
  SolverTrace t;
  for (std::size_t k = 0; k < 4; ++k) {
    IterationRecord r;
    r.k = k;
    r.phi = 1.0 / (k + 3.0);
    r.phi_prox = r.phi * 0.5;
    r.phi_best = r.phi;
    r.envelope_inexact = 0.1 + k;
    r.residual_norm = std::ldexp(1.0, -static_cast<int>(k));
    r.alpha = k == 3 ? 0.0 : 0.72;
    r.backtracks = k;
    r.epsilon_k = 1.0 / ((k + 1.0) * (k + 1.0));
    r.gamma_k = 0.99;
    r.sigma_k = 1e-300;
    r.inner_iterations = 25 * k;
    r.fallback = k == 2;
    r.wall_time_ms = 12.5 * k;
    r.snr_db = k == 0 ? kNaN : -3.25 + k;
    r.rel_err = k == 1 ? kInf : 0.3;
    t.records.push_back(r);
  }
  return t;
}

}  // namespace

TEST(Io, FormatParseRoundTrip) {
  for (double v : {0.0, -0.0, 1.0, 0.1, 1.0 / 3.0, 1e-300, -2.5e17, std::numeric_limits<double>::denorm_min(),
                   std::numeric_limits<double>::max()}) {
    EXPECT_EQ(parse_double(format_double(v)), v) << format_double(v);
  }
  EXPECT_EQ(format_double(kInf), "inf");
  EXPECT_EQ(format_double(-kInf), "-inf");
  EXPECT_EQ(format_double(kNaN), "nan");
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_TRUE(std::isnan(parse_double("nan")));
  EXPECT_EQ(parse_double("-inf"), -kInf);
  EXPECT_THROW(parse_double("1.0x"), IoError);
  EXPECT_THROW(parse_double(""), IoError);
}

TEST(Io, AtomicWriteAndDirectory) {
  const fs::path d = scratch("atomic");
  ensure_directory(d / "a" / "b");
  EXPECT_TRUE(fs::is_directory(d / "a" / "b"));
  EXPECT_FALSE(fs::exists(d / "a" / "b" / ".write_probe"));
  write_file_atomic(d / "x.txt", "first");
  write_file_atomic(d / "x.txt", "second\n");
  EXPECT_EQ(slurp(d / "x.txt"), "second\n");
  EXPECT_FALSE(fs::exists(d / "x.txt.tmp"));
  write_file_atomic(d / "blocker", "");
  EXPECT_THROW(ensure_directory(d / "blocker" / "sub"), IoError);
  EXPECT_THROW(write_file_atomic(d / "missing" / "y.txt", "z"), IoError);
}

TEST(Io, TraceCsvRoundTrip) {
  const SolverTrace t = sample_trace();
  const std::string text = trace_csv(t);
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_EQ(header.rfind("k,phi,envelope_inexact,residual_norm,alpha,backtracks,epsilon_k,wall_time_ms", 0), 0u);
  std::istringstream in(text);
  const TraceTable tab = parse_trace_csv(in);
  ASSERT_EQ(tab.header, trace_columns());
  ASSERT_EQ(tab.rows.size(), t.records.size());
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const auto& r = t.records[k];
    const auto& row = tab.rows[k];
    EXPECT_EQ(row[tab.index("k")], static_cast<double>(r.k));
    EXPECT_EQ(row[tab.index("phi")], r.phi);
    EXPECT_EQ(row[tab.index("phi_prox")], r.phi_prox);
    EXPECT_EQ(row[tab.index("residual_norm")], r.residual_norm);
    EXPECT_EQ(row[tab.index("epsilon_k")], r.epsilon_k);
    EXPECT_EQ(row[tab.index("sigma")], r.sigma_k);
    EXPECT_EQ(row[tab.index("wall_time_ms")], r.wall_time_ms);
    EXPECT_EQ(row[tab.index("fallback")], r.fallback ? 1.0 : 0.0);
    EXPECT_EQ(row[tab.index("inner_iters")], static_cast<double>(r.inner_iterations));
  }
  EXPECT_TRUE(std::isnan(tab.rows[0][tab.index("snr_db")]));
  EXPECT_EQ(tab.rows[1][tab.index("rel_err")], kInf);
  EXPECT_THROW(tab.index("nope"), IoError);
}

TEST(Io, DeterministicTraceZeroesWallTime) {
  const SolverTrace t = sample_trace();
  std::istringstream in(trace_csv(t, {false, true}));
  const TraceTable tab = parse_trace_csv(in);
  for (double w : tab.column("wall_time_ms")) EXPECT_EQ(w, 0.0);
  const auto sq = tab.column("snr_db_squared");
  const auto s = tab.column("snr_db");
  for (std::size_t i = 1; i < sq.size(); ++i) EXPECT_DOUBLE_EQ(sq[i], 2.0 * s[i]);
  EXPECT_EQ(timing_csv(t), "k,wall_time_ms\n0,0\n1,12.5\n2,25\n3,37.5\n");
}

TEST(Io, MalformedTraceRejected) {
  std::istringstream empty("");
  EXPECT_THROW(parse_trace_csv(empty), IoError);
  std::istringstream ragged("a,b\n1,2\n3\n");
  EXPECT_THROW(parse_trace_csv(ragged), IoError);
  std::istringstream junk("a\nfoo\n");
  EXPECT_THROW(parse_trace_csv(junk), IoError);
  EXPECT_THROW(load_trace_csv("/nonexistent/trace.csv"), IoError);
}

TEST(Stats, QuantileTypeSeven) {
  // Hand values for linear interpolation between order statistics.
  const std::vector<double> v{4.0, 1.0, 3.0, 2.0};
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile(v, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(median(v), 2.5);
  EXPECT_DOUBLE_EQ(iqr(v), 1.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(median({7.0, -1.0, 3.0, 10.0, 5.0}), 5.0);
  EXPECT_DOUBLE_EQ(iqr({2.0}), 0.0);
}

TEST(Stats, ArgminFiniteSkipsNan) {
  EXPECT_EQ(argmin_finite({kNaN, 3.0, 1.0, kNaN, 2.0}), 2u);
  EXPECT_EQ(argmin_finite({5.0, 5.0}), 0u);
  EXPECT_EQ(argmin_finite({kInf, 9.0}), 1u);
}

TEST(Svg, WellFormedAndEscaped) {
  const std::string s = line_chart_svg({"a<b & \"c\"", "x", "y"}, {{"one", {0, 1, 2}, {1, 4, 9}}, {"two", {0, 2}, {3, 3}}});
  EXPECT_EQ(s.rfind("<svg", 0), 0u);
  EXPECT_NE(s.find("</svg>"), std::string::npos);
  EXPECT_NE(s.find("a&lt;b &amp; &quot;c&quot;"), std::string::npos);
  EXPECT_EQ(s.find("a<b"), std::string::npos);
  EXPECT_NE(s.find(">one<"), std::string::npos);
  EXPECT_NE(s.find(">two<"), std::string::npos);
  std::size_t polylines = 0;
  for (std::size_t pos = 0; (pos = s.find("<polyline", pos)) != std::string::npos; ++pos) ++polylines;
  EXPECT_EQ(polylines, 2u);
  EXPECT_EQ(hifba::harness::detail::escape_xml("<>&\""), "&lt;&gt;&amp;&quot;");
}

TEST(Svg, LogScaleAndDegenerateInput) {
  EXPECT_NO_THROW(line_chart_svg({"t", "x", "y", true}, {{"s", {0, 1, 2, 3}, {1, 0, -1, kNaN}}}));
  const std::string empty = line_chart_svg({"t", "x", "y"}, {});
  EXPECT_NE(empty.find("</svg>"), std::string::npos);
  const std::string flat = line_chart_svg({"t", "x", "y"}, {{"s", {1, 1}, {2, 2}}});
  EXPECT_EQ(flat.find("nan"), std::string::npos);
  EXPECT_EQ(flat.find("inf"), std::string::npos);
}

TEST(Svg, DecimatesLongSeries) {
  Series s{"long", {}, {}};
  for (int i = 0; i < 10000; ++i) {
    s.x.push_back(i);
    s.y.push_back(std::sin(i * 0.01));
  }
  ChartSpec spec{"t", "x", "y"};
  spec.max_points = 100;
  const std::string svg = line_chart_svg(spec, {s});
  const auto a = svg.find("points=\"");
  ASSERT_NE(a, std::string::npos);
  const auto b = svg.find('"', a + 8);
  const std::string pts = svg.substr(a + 8, b - a - 8);
  const auto n = static_cast<std::size_t>(std::count(pts.begin(), pts.end(), ','));
  EXPECT_GE(n, 100u);
  EXPECT_LE(n, 101u);
}

TEST(Config, BudgetRules) {
  RunBudget b;
  EXPECT_FALSE(b.deterministic());
  EXPECT_NO_THROW(b.validate());
  b.iterations = 5;
  EXPECT_TRUE(b.deterministic());
  b.seconds = 1.0;
  EXPECT_FALSE(b.deterministic());
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b.iterations.reset();
  b.seconds = 0.0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
  b.seconds.reset();
  b.iterations = 0;
  EXPECT_THROW(b.validate(), std::invalid_argument);
}

TEST(Config, ReferenceBeta0) {
  const auto r11 = reference_beta0(1.1);
  EXPECT_EQ(r11.hifba, 0.97);
  EXPECT_EQ(r11.boosted, 0.86);
  EXPECT_EQ(r11.sg_gdss, 0.97);
  const auto r15 = reference_beta0(1.5);
  EXPECT_EQ(r15.hifba, 0.80);
  EXPECT_EQ(r15.boosted, 0.76);
  const auto r175 = reference_beta0(1.75);
  EXPECT_EQ(r175.hifba, 0.94);
  EXPECT_EQ(r175.boosted, 0.86);
  const auto r2 = reference_beta0(2.0);
  EXPECT_EQ(r2.hifba, 0.99);
  EXPECT_EQ(r2.boosted, 0.75);
  EXPECT_EQ(r2.sg_gdss, 0.99);
  EXPECT_EQ(reference_beta0(1.3).boosted, 0.9);
}

TEST(Config, InverseValidation) {
  InverseConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.q_values = {1.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.q_values = {2.5};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.solvers = {"cocain"};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.common.seeds.clear();
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.sg_css_alphas = {0.0};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.m = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Config, NmfValidation) {
  NmfConfig c;
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.rank = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.solvers = {"hifba", "mu"};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.data_lo = -1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(ParallelFor, CoversEveryIndexAndRethrows) {
  std::vector<int> hits(257, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(50, 3,
                            [](std::size_t i) {
                              if (i == 17) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
  parallel_for(0, 4, [](std::size_t) { FAIL(); });
}

TEST(Validate, ForwardBackwardDiffersFromProx) {
  const json r = counterexample_suite();
  ASSERT_EQ(r.size(), 1u);
  EXPECT_TRUE(r[0]["ok"].get<bool>());
  EXPECT_NEAR(r[0]["forward_backward_minimizer"].get<double>(), 3.0 - std::sqrt(10.0), 1e-4);
  EXPECT_NEAR(r[0]["shifted_prox_minimizer"].get<double>(), -3.0 + 2.0 * std::sqrt(2.0), 1e-4);
}

TEST(Validate, EnvelopeSandwichOnToys) {
  for (const ToyProblem& toy : toy_problems()) {
    const double gamma = std::min(1.0, 0.5 / toy.lp);
    const auto r = envelope_sandwich(toy, gamma, std::min(2.0 * gamma, 0.9 / toy.lp), toy.box.lo[0] + 1.0,
                                     toy.box.hi[0] - 1.0, 1001, 4001);
    EXPECT_LE(r.upper_violation, 0.0) << toy.name;
    EXPECT_LE(r.lower_violation, 1e-6) << toy.name;
    EXPECT_LE(r.monotone_violation, 2e-6) << toy.name;
    EXPECT_LE(r.min_gap, 1e-4) << toy.name;
    EXPECT_EQ(r.points, 1001u);
  }
}

TEST(Validate, FullSuitePasses) {
  ValidateConfig cfg;
  cfg.samples = 400;
  cfg.common.seeds = {3};
  const json r = run_validate(cfg);
  EXPECT_TRUE(r["all_ok"].get<bool>()) << r.dump(2);
  bool saw_fail_expected = false;
  for (const auto& c : r["checks"]) {
    EXPECT_EQ(c["expected"], c["observed"]) << c.dump();
    saw_fail_expected = saw_fail_expected || c["expected"] == "fail";
  }
  EXPECT_TRUE(saw_fail_expected);
}

TEST(Experiments, InverseSmallRunIsDeterministic) {
  const fs::path d = scratch("inverse");
  InverseConfig cfg;
  cfg.m = 20;
  cfg.n = 40;
  cfg.q_values = {1.5, 2.0};
  cfg.common.seeds = {1, 2};
  cfg.common.budget.iterations = 5;
  cfg.common.jobs = 3;
  cfg.sg_css_alphas = {0.1};
  cfg.common.out_dir = (d / "a").string();
  const auto rep = run_inverse(cfg);
  ASSERT_EQ(rep.cells.size(), 2u * 2u * 4u);
  ASSERT_EQ(rep.digests.size(), rep.cells.size());
  for (const auto& dg : rep.digests) {
    EXPECT_TRUE(std::isfinite(dg.snr_best));
    EXPECT_LE(dg.iterations, 5u);
  }

  const std::string summary = slurp(rep.summary_path);
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "p,n_seeds,hifba_beta0,hifba_snr_db,hifba_snr_iqr,hifba_snr_final_db,boosted_beta0,boosted_snr_db,"
            "boosted_snr_iqr,boosted_snr_final_db,sg_gdss_beta0,sg_gdss_snr_db,sg_gdss_snr_iqr,sg_gdss_snr_final_db,"
            "sg_css_0.1_snr_db,sg_css_0.1_snr_iqr,sg_css_0.1_snr_final_db");
  EXPECT_NE(summary.find("\n1.5,2,0.8,"), std::string::npos);
  EXPECT_NE(summary.find("\n2,2,0.99,"), std::string::npos);

  const json manifest = json::parse(slurp(d / "a" / "manifest.json"));
  EXPECT_EQ(manifest["command"], "run-inverse");
  EXPECT_EQ(manifest["budget"]["iterations"], 5);
  EXPECT_TRUE(fs::exists(d / "a" / "runs.csv"));
  EXPECT_TRUE(fs::exists(d / "a" / "plots" / "snr_vs_iteration_q1.5.svg"));
  EXPECT_TRUE(fs::exists(d / "a" / "plots" / "relerr_vs_iteration_q2.svg"));
  EXPECT_TRUE(fs::exists(d / "a" / "traces" / "inverse_q1.5_boosted_seed2.timing.csv"));

  cfg.common.out_dir = (d / "b").string();
  cfg.common.jobs = 1;
  run_inverse(cfg);
  for (const auto& c : rep.cells) {
    const std::string f = c.file_stem() + ".csv";
    EXPECT_EQ(slurp(d / "a" / "traces" / f), slurp(d / "b" / "traces" / f)) << f;
  }
  EXPECT_EQ(slurp(d / "a" / "summary.csv"), slurp(d / "b" / "summary.csv"));
}

TEST(Experiments, InverseTraceColumnsMatchDigest) {
  const fs::path d = scratch("digest");
  InverseConfig cfg;
  cfg.m = 15;
  cfg.n = 30;
  cfg.q_values = {1.75};
  cfg.solvers = {"boosted"};
  cfg.common.budget.iterations = 8;
  cfg.common.out_dir = d.string();
  const auto rep = run_inverse(cfg);
  const auto t = load_trace_csv(d / "traces" / (rep.cells[0].file_stem() + ".csv"));
  const auto phi = t.column("phi");
  const auto snr = t.column("snr_db");
  std::size_t best = 0;
  for (std::size_t i = 1; i < phi.size(); ++i)
    if (phi[i] < phi[best]) best = i;
  EXPECT_EQ(rep.digests[0].snr_best, snr[best]);
  EXPECT_EQ(rep.digests[0].snr_final, snr.back());
  for (double w : t.column("wall_time_ms")) EXPECT_EQ(w, 0.0);
}

TEST(Experiments, NmfSmallRun) {
  const fs::path d = scratch("nmf");
  NmfConfig cfg;
  cfg.m = 8;
  cfg.n = 6;
  cfg.rank = 2;
  cfg.data_hi = 1.0;
  cfg.lambda = 0.01;
  cfg.common.budget.iterations = 30;
  cfg.common.seeds = {4};
  cfg.common.out_dir = d.string();
  const auto rep = run_nmf(cfg);
  ASSERT_EQ(rep.cells.size(), 3u);
  for (std::size_t i = 0; i < rep.cells.size(); ++i) {
    const auto& dg = rep.digests[i];
    EXPECT_GE(dg.iterations, 1u) << rep.cells[i].solver;
    EXPECT_LE(dg.iterations, 30u) << rep.cells[i].solver;
    EXPECT_LE(dg.minimum, dg.final);
    EXPECT_LE(dg.final, dg.initial) << rep.cells[i].solver;
  }
  const std::string summary = slurp(d / "summary.csv");
  EXPECT_EQ(summary.substr(0, summary.find('\n')),
            "solver,seed,iterations,objective_initial,objective_final,objective_min,status");
  const json manifest = json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(manifest["command"], "run-nmf");
  EXPECT_EQ(manifest["config"]["rank"], 2);
  EXPECT_TRUE(fs::exists(d / "plots" / "objective_vs_iteration_seed4.svg"));
}

TEST(Experiments, NmfFromCsvData) {
  const fs::path d = scratch("nmf_csv");
  write_file_atomic(d / "x.csv", "1,0.5,0\n0.25,1,2\n0,0,1\n3,1,0.5\n");
  NmfConfig cfg;
  cfg.data_path = (d / "x.csv").string();
  cfg.rank = 2;
  cfg.solvers = {"bpg"};
  cfg.common.budget.iterations = 10;
  cfg.common.out_dir = (d / "out").string();
  const auto rep = run_nmf(cfg);
  const json manifest = json::parse(slurp(d / "out" / "manifest.json"));
  EXPECT_EQ(manifest["config"]["m"], 4);
  EXPECT_EQ(manifest["config"]["n"], 3);
  EXPECT_LT(rep.digests[0].final, rep.digests[0].initial);

  write_file_atomic(d / "neg.csv", "1,-1\n");
  cfg.data_path = (d / "neg.csv").string();
  EXPECT_THROW(run_nmf(cfg), CsvError);
}

TEST(Cli, UsageErrorsAreJson) {
  const fs::path d = scratch("cli_usage");
  auto r = cli("run-inverse --bogus", d);
  EXPECT_EQ(r.code, 2);
  json e = json::parse(r.err);
  EXPECT_EQ(e["error"]["type"], "usage");
  EXPECT_FALSE(e["error"]["message"].get<std::string>().empty());

  r = cli("run-inverse --budget-secs 1 --budget-iters 3 --out " + (d / "o").string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["type"], "usage");

  r = cli("", d);
  EXPECT_EQ(r.code, 2);
  EXPECT_NO_THROW(json::parse(r.err));
}

TEST(Cli, InvalidArgumentAndIoErrors) {
  const fs::path d = scratch("cli_args");
  auto r = cli("run-inverse --q 2.5 --budget-iters 1 --out " + (d / "o").string(), d);
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(json::parse(r.err)["error"]["type"], "invalid_argument");

  write_file_atomic(d / "file", "");
  r = cli("run-nmf --rows 4 --cols 4 --rank 1 --budget-iters 1 --out " + (d / "file" / "sub").string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err)["error"]["type"], "io");

  r = cli("run-nmf --data " + (d / "missing.csv").string() + " --budget-iters 1 --out " + (d / "o2").string(), d);
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err)["error"]["type"], "io");
}

TEST(Cli, VersionAndValidate) {
  const fs::path d = scratch("cli_validate");
  auto r = cli("--version", d);
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find(kVersion), std::string::npos);

  r = cli("validate --budget-iters 300 --out " + (d / "v").string(), d);
  EXPECT_EQ(r.code, 0) << r.err;
  const json rep = json::parse(slurp(d / "v" / "validate.json"));
  EXPECT_TRUE(rep["all_ok"].get<bool>());
  EXPECT_EQ(rep["samples"], 300);
  EXPECT_TRUE(fs::exists(d / "v" / "manifest.json"));
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const fs::path d = scratch("cli_config");
  write_file_atomic(d / "run.ini",
                    "[run-inverse]\nrows = 12\ncols = 24\nq = 1.5\nsolvers = boosted\nbudget-iters = 3\nseed = 7\n"
                    "out = " + (d / "from_config").string() + "\n");
  auto r = cli("run-inverse --config " + (d / "run.ini").string() + " --out " + (d / "from_flag").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_FALSE(fs::exists(d / "from_config"));
  const json m = json::parse(slurp(d / "from_flag" / "manifest.json"));
  EXPECT_EQ(m["config"]["m"], 12);
  EXPECT_EQ(m["config"]["n"], 24);
  EXPECT_EQ(m["seeds"], json::array({7}));
  EXPECT_EQ(m["budget"]["iterations"], 3);
  EXPECT_TRUE(fs::exists(d / "from_flag" / "traces" / "inverse_q1.5_boosted_seed7.csv"));

  r = cli("run-inverse --config " + (d / "run.ini").string() + " --rows 9 --out " + (d / "rows").string(), d);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(d / "rows" / "manifest.json"))["config"]["m"], 9);

  r = cli("run-inverse --config " + (d / "nope.ini").string(), d);
  EXPECT_NE(r.code, 0);
  EXPECT_NO_THROW(json::parse(r.err));
}
