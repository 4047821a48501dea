// Command-line front end: falling-moment tables, total-variation bounds,
// figure data bundles, two-stage planning, and seeded simulation.  Every
// command records a manifest that reproduces its outputs byte-for-byte.
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "grouptest/grouptest.hpp"

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string fmt_cell(double v) {
  if (v > 1.0) return "--";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Manifest location: next to an explicit output file, inside an output
// directory, or (stdout mode) in GROUPTEST_OUTDIR / the working directory.
std::string manifest_path_for(const std::string& out_path) {
  if (!out_path.empty()) return out_path + ".manifest.json";
  const char* env = std::getenv("GROUPTEST_OUTDIR");
  const std::string dir = env != nullptr && *env != '\0' ? env : ".";
  return dir + "/grouptest.manifest.json";
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(out_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file " + out_path);
  f << content;
}

// ---------------------------------------------------------------- moments --
struct MomentsParams {
  std::int64_t n = 0, k = 0, T = 0, smax = 0;
  double p = 0.0;
  std::string format = "csv";
  std::string out;
};

int run_moments(const MomentsParams& mp) {
  if (mp.format != "csv" && mp.format != "json")
    throw std::invalid_argument("moments: --format must be csv or json");
  if (mp.smax < 0) throw std::invalid_argument("moments: --smax must be >= 0");
  const grouptest::GroupTestInstance inst{mp.n, mp.k, mp.p, mp.T};
  const std::vector<grouptest::ComparisonMoments> rows =
      grouptest::comparison_table(inst, mp.smax);

  json jrows = json::array();
  for (const grouptest::ComparisonMoments& r : rows)
    jrows.push_back({{"s", r.s},
                     {"G", r.G},
                     {"Z", r.Z},
                     {"Y", r.Y},
                     {"X", r.X},
                     {"H", r.H}});

  std::string body;
  if (mp.format == "csv") {
    body = "s,G,Z,Y,X,H\n";
    for (const grouptest::ComparisonMoments& r : rows)
      body += std::to_string(r.s) + ',' + fmt(r.G) + ',' + fmt(r.Z) + ',' +
              fmt(r.Y) + ',' + fmt(r.X) + ',' + fmt(r.H) + '\n';
  } else {
    body = json{{"rows", jrows}}.dump(2) + "\n";
  }
  emit(mp.out, body);

  grouptest::RunManifest man;
  man.command = "moments";
  man.parameters = {{"n", mp.n},     {"k", mp.k},
                    {"p", mp.p},     {"T", mp.T},
                    {"smax", mp.smax}, {"format", mp.format},
                    {"out", mp.out}};
  man.outputs = {mp.out.empty() ? "-" : mp.out};
  man.results = {{"rows", jrows}};
  grouptest::write_manifest(man, manifest_path_for(mp.out));
  return 0;
}

// ------------------------------------------------------------------ stein --
struct SteinParamsCli {
  std::int64_t n = 0, k = 0, T = 0;
  double p = 0.0;
  bool grid = false;
  std::string out;
};

int run_stein(const SteinParamsCli& sp) {
  std::string body;
  json results;
  if (sp.grid) {
    const std::int64_t ks[] = {5, 10, 20};
    const double ps[] = {0.05, 0.1, 0.2};
    const std::int64_t Ts[] = {500, 1000};
    body =
        "k,T500_p0.05,T500_p0.1,T500_p0.2,T1000_p0.05,T1000_p0.1,T1000_p0.2\n";
    json cells = json::array();
    for (std::int64_t k : ks) {
      body += std::to_string(k);
      for (std::int64_t T : Ts)
        for (double p : ps) {
          const grouptest::GroupTestInstance inst{sp.n, k, p, T};
          const grouptest::BoundReport rep = grouptest::stein_bound(inst);
          body += ',' + fmt_cell(rep.total);
          cells.push_back(
              {{"k", k}, {"p", p}, {"T", T}, {"total", rep.total}});
        }
      body += '\n';
    }
    results = {{"grid", cells}};
  } else {
    const grouptest::GroupTestInstance inst{sp.n, sp.k, sp.p, sp.T};
    const grouptest::BoundReport rep = grouptest::stein_bound(inst);
    body = "quantity,value\n";
    body += "total," + fmt(rep.total) + '\n';
    body += "term_binomial_poisson," + fmt(rep.term_binomial_poisson) + '\n';
    body += "term_mixture," + fmt(rep.term_mixture) + '\n';
    body += "term_gamma_tail," + fmt(rep.term_gamma_tail) + '\n';
    body += "term_integral," + fmt(rep.term_integral) + '\n';
    body += "integrand_breakpoints," +
            std::to_string(rep.integrand_breakpoints) + '\n';
    results = {{"total", rep.total},
               {"term_binomial_poisson", rep.term_binomial_poisson},
               {"term_mixture", rep.term_mixture},
               {"term_gamma_tail", rep.term_gamma_tail},
               {"term_integral", rep.term_integral},
               {"integrand_breakpoints", rep.integrand_breakpoints}};
  }
  emit(sp.out, body);

  grouptest::RunManifest man;
  man.command = "stein";
  man.parameters = {{"n", sp.n},       {"k", sp.k},   {"p", sp.p},
                    {"T", sp.T},       {"grid", sp.grid},
                    {"out", sp.out}};
  man.outputs = {sp.out.empty() ? "-" : sp.out};
  man.results = results;
  grouptest::write_manifest(man, manifest_path_for(sp.out));
  return 0;
}

// ----------------------------------------------------------------- figure --
struct FigureParams {
  int id = 0;
  std::int64_t trials = 100000;
  std::uint64_t seed = 12345;
  std::string out;
};

std::string histogram_vs_nb_csv(const grouptest::GroupTestInstance& inst,
                                std::int64_t trials, std::uint64_t seed) {
  grouptest::SimulationConfig cfg{inst, trials, seed,
                                  grouptest::Engine::MixtureLevel};
  const grouptest::EmpiricalDist dist = grouptest::simulate_G(cfg);
  const grouptest::NegBinParams nb = grouptest::fit_moment_matched(inst);
  std::string body = "g,empirical_prob,nb_prob\n";
  for (std::size_t g = 0; g < dist.counts.size(); ++g) {
    const double emp = static_cast<double>(dist.counts[g]) /
                       static_cast<double>(dist.trials);
    body += std::to_string(g) + ',' + fmt(emp) + ',' +
            fmt(grouptest::nb_pmf(nb, static_cast<std::int64_t>(g))) + '\n';
  }
  return body;
}

int run_figure(const FigureParams& fp) {
  if (fp.out.empty())
    throw std::invalid_argument("figure: --out directory is required");
  if (fp.trials < 1) throw std::invalid_argument("figure: --trials >= 1");
  std::filesystem::create_directories(fp.out);
  std::vector<std::string> outputs;

  if (fp.id == 2 || fp.id == 3) {
    const std::int64_t sweep[] = {60, 80, 100, 120};
    for (std::int64_t T : sweep) {
      const grouptest::GroupTestInstance inst{500, 10, 0.1, T};
      const std::string name =
          fp.id == 2 ? "fig2_T" + std::to_string(T) + ".csv"
                     : "fig3_T1_" + std::to_string(T) + ".csv";
      const std::string path = fp.out + "/" + name;
      emit(path,
           histogram_vs_nb_csv(
               inst, fp.trials,
               grouptest::derive_seed(fp.seed,
                                      static_cast<std::uint64_t>(T))));
      outputs.push_back(path);
    }
  } else if (fp.id == 4) {
    const grouptest::GroupTestInstance base{500, 10, 0.1, 100};
    const std::int64_t T1 = 100;
    const grouptest::NegBinParams nb = grouptest::fit_moment_matched(base);
    std::string body =
        "T2,simulated_error,nb_exact_tail,chebyshev_bound,ld_bound\n";
    for (std::int64_t T2 = 12; T2 <= 60; T2 += 4) {
      const grouptest::TwoStageErrorEstimate est =
          grouptest::simulate_two_stage_error(
              base, T1, T2, fp.trials,
              grouptest::derive_seed(fp.seed,
                                     static_cast<std::uint64_t>(T2)));
      double nb_tail_exact = 0.0;
      for (std::int64_t z = T2 - base.k + 1; z <= base.L(); ++z)
        nb_tail_exact += grouptest::nb_pmf(nb, z);
      const grouptest::ErrorBound cheb =
          grouptest::chebyshev_error_bound(base, T1, T2);
      const grouptest::NbTailBound ld = grouptest::nb_tail_bound(
          nb, static_cast<double>(T2 - base.k + 1));
      body += std::to_string(T2) + ',' + fmt(est.rate) + ',' +
              fmt(nb_tail_exact) + ',' + fmt(cheb.value) + ',' +
              fmt(ld.value) + '\n';
    }
    const std::string path = fp.out + "/fig4.csv";
    emit(path, body);
    outputs.push_back(path);
  } else {
    throw std::invalid_argument("figure: --id must be 2, 3 or 4");
  }

  grouptest::RunManifest man;
  man.command = "figure";
  man.parameters = {{"id", fp.id},
                    {"trials", fp.trials},
                    {"seed", fp.seed},
                    {"out", fp.out}};
  man.seed = fp.seed;
  man.outputs = outputs;
  man.results = {{"files", outputs}};
  grouptest::write_manifest(man, fp.out + "/manifest.json");
  return 0;
}

// ------------------------------------------------------------------- plan --
struct PlanParams {
  std::int64_t n = 0, k = 0, budget = 0;
  double p = 0.0;  // 0 means default 1/k
  std::string out;
};

int run_plan(const PlanParams& pp) {
  const double p = pp.p > 0.0 ? pp.p : 1.0 / static_cast<double>(pp.k);
  const grouptest::GroupTestInstance inst{pp.n, pp.k, p, pp.budget};
  const grouptest::OptimalT1 opt = grouptest::optimal_T1(inst);
  const grouptest::TwoStagePlan plan = grouptest::plan_two_stage(inst);
  const grouptest::ErrorBound& cheb = plan.error_bounds.at("chebyshev");
  const grouptest::ErrorBound& nbt = plan.error_bounds.at("nb_tail");

  std::string body = "quantity,value\n";
  body += "budget," + std::to_string(pp.budget) + '\n';
  body += "T1," + std::to_string(plan.T1) + '\n';
  body += "T2," + std::to_string(plan.T2) + '\n';
  body += "T1_reference," + fmt(opt.reference) + '\n';
  body += "T1_exact," + fmt(opt.exact) + '\n';
  body += "expected_stage2," + fmt(plan.expected_stage2) + '\n';
  body += "expected_total," +
          fmt(grouptest::expected_total_tests(
              inst, static_cast<double>(plan.T1))) +
          '\n';
  body += "chebyshev_bound," + fmt(cheb.value) + '\n';
  body += "chebyshev_vacuous," + std::to_string(cheb.vacuous ? 1 : 0) + '\n';
  body += "nb_tail_bound," + fmt(nbt.value) + '\n';
  body += "nb_tail_vacuous," + std::to_string(nbt.vacuous ? 1 : 0) + '\n';
  body += "individual_feasible," +
          std::to_string(plan.individual_feasible ? 1 : 0) + '\n';
  body += "degenerate," + std::to_string(plan.degenerate ? 1 : 0) + '\n';
  emit(pp.out, body);

  grouptest::RunManifest man;
  man.command = "plan";
  man.parameters = {{"n", pp.n},
                    {"k", pp.k},
                    {"p", pp.p},
                    {"budget", pp.budget},
                    {"out", pp.out}};
  man.outputs = {pp.out.empty() ? "-" : pp.out};
  man.results = {{"T1", plan.T1},
                 {"T2", plan.T2},
                 {"T1_reference", opt.reference},
                 {"T1_exact", opt.exact},
                 {"expected_stage2", plan.expected_stage2},
                 {"chebyshev_bound", cheb.value},
                 {"chebyshev_vacuous", cheb.vacuous},
                 {"nb_tail_bound", nbt.value},
                 {"nb_tail_vacuous", nbt.vacuous},
                 {"individual_feasible", plan.individual_feasible},
                 {"degenerate", plan.degenerate}};
  grouptest::write_manifest(man, manifest_path_for(pp.out));
  return 0;
}

// --------------------------------------------------------------- simulate --
struct SimulateParams {
  std::int64_t n = 0, k = 0, T = 0, trials = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  std::string engine = "mixture";
  std::string out;
};

int run_simulate(const SimulateParams& sp) {
  grouptest::Engine engine;
  if (sp.engine == "matrix") {
    engine = grouptest::Engine::MatrixLevel;
  } else if (sp.engine == "mixture") {
    engine = grouptest::Engine::MixtureLevel;
  } else {
    throw std::invalid_argument("simulate: --engine must be matrix|mixture");
  }
  const grouptest::GroupTestInstance inst{sp.n, sp.k, sp.p, sp.T};
  grouptest::SimulationConfig cfg{inst, sp.trials, sp.seed, engine};
  const grouptest::EmpiricalDist dist = grouptest::simulate_G(cfg);
  std::ostringstream body;
  grouptest::write_histogram_csv(dist, body);
  emit(sp.out, body.str());

  grouptest::RunManifest man;
  man.command = "simulate";
  man.parameters = {{"n", sp.n},         {"k", sp.k},
                    {"p", sp.p},         {"T", sp.T},
                    {"trials", sp.trials}, {"seed", sp.seed},
                    {"engine", sp.engine}, {"out", sp.out}};
  man.seed = sp.seed;
  man.outputs = {sp.out.empty() ? "-" : sp.out};
  man.results = {{"trials", dist.trials},
                 {"empirical_mean",
                  grouptest::empirical_falling_moment(dist, 1)}};
  grouptest::write_manifest(man, manifest_path_for(sp.out));
  return 0;
}

// ------------------------------------------------------------------ rerun --
int run_rerun(const std::string& manifest_file) {
  const grouptest::RunManifest man = grouptest::load_manifest(manifest_file);
  const json& q = man.parameters;
  if (man.command == "moments") {
    MomentsParams mp;
    mp.n = q.at("n").get<std::int64_t>();
    mp.k = q.at("k").get<std::int64_t>();
    mp.p = q.at("p").get<double>();
    mp.T = q.at("T").get<std::int64_t>();
    mp.smax = q.at("smax").get<std::int64_t>();
    mp.format = q.at("format").get<std::string>();
    mp.out = q.at("out").get<std::string>();
    return run_moments(mp);
  }
  if (man.command == "stein") {
    SteinParamsCli sp;
    sp.n = q.at("n").get<std::int64_t>();
    sp.k = q.at("k").get<std::int64_t>();
    sp.p = q.at("p").get<double>();
    sp.T = q.at("T").get<std::int64_t>();
    sp.grid = q.at("grid").get<bool>();
    sp.out = q.at("out").get<std::string>();
    return run_stein(sp);
  }
  if (man.command == "figure") {
    FigureParams fp;
    fp.id = q.at("id").get<int>();
    fp.trials = q.at("trials").get<std::int64_t>();
    fp.seed = q.at("seed").get<std::uint64_t>();
    fp.out = q.at("out").get<std::string>();
    return run_figure(fp);
  }
  if (man.command == "plan") {
    PlanParams pp;
    pp.n = q.at("n").get<std::int64_t>();
    pp.k = q.at("k").get<std::int64_t>();
    pp.p = q.at("p").get<double>();
    pp.budget = q.at("budget").get<std::int64_t>();
    pp.out = q.at("out").get<std::string>();
    return run_plan(pp);
  }
  if (man.command == "simulate") {
    SimulateParams sp;
    sp.n = q.at("n").get<std::int64_t>();
    sp.k = q.at("k").get<std::int64_t>();
    sp.p = q.at("p").get<double>();
    sp.T = q.at("T").get<std::int64_t>();
    sp.trials = q.at("trials").get<std::int64_t>();
    sp.seed = q.at("seed").get<std::uint64_t>();
    sp.engine = q.at("engine").get<std::string>();
    sp.out = q.at("out").get<std::string>();
    return run_simulate(sp);
  }
  throw std::invalid_argument("rerun: unknown command " + man.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "group testing toolkit: exact intruder-count distribution, negative "
      "binomial approximations with error bounds, two-stage planning"};
  app.require_subcommand(1);

  MomentsParams mp;
  CLI::App* c_moments =
      app.add_subcommand("moments", "falling-moment comparison table");
  c_moments->add_option("--n", mp.n, "number of items")->required();
  c_moments->add_option("--k", mp.k, "number of defectives")->required();
  c_moments->add_option("--p", mp.p, "Bernoulli design density")->required();
  c_moments->add_option("--T", mp.T, "number of tests")->required();
  c_moments->add_option("--smax", mp.smax, "largest moment order")->required();
  c_moments->add_option("--format", mp.format, "csv or json");
  c_moments->add_option("--out", mp.out, "output file (default stdout)");

  SteinParamsCli sp;
  CLI::App* c_stein =
      app.add_subcommand("stein", "total-variation bound (single or grid)");
  c_stein->add_option("--n", sp.n, "number of items")->required();
  c_stein->add_option("--k", sp.k, "number of defectives");
  c_stein->add_option("--p", sp.p, "Bernoulli design density");
  c_stein->add_option("--T", sp.T, "number of tests");
  c_stein->add_flag("--grid", sp.grid,
                    "evaluate the k x p x T reference grid");
  c_stein->add_option("--out", sp.out, "output file (default stdout)");

  FigureParams fp;
  CLI::App* c_figure =
      app.add_subcommand("figure", "emit figure data as CSV bundles");
  c_figure->add_option("--id", fp.id, "figure id: 2, 3 or 4")->required();
  c_figure->add_option("--trials", fp.trials, "Monte Carlo trials");
  c_figure->add_option("--seed", fp.seed, "base RNG seed");
  c_figure->add_option("--out", fp.out, "output directory")->required();

  PlanParams pp;
  CLI::App* c_plan =
      app.add_subcommand("plan", "two-stage design for a test budget");
  c_plan->add_option("--n", pp.n, "number of items")->required();
  c_plan->add_option("--k", pp.k, "number of defectives")->required();
  c_plan->add_option("--p", pp.p, "design density (default 1/k)");
  c_plan->add_option("--budget", pp.budget, "total test budget")->required();
  c_plan->add_option("--out", pp.out, "output file (default stdout)");

  SimulateParams simp;
  CLI::App* c_sim =
      app.add_subcommand("simulate", "seeded Monte Carlo histogram of G");
  c_sim->add_option("--n", simp.n, "number of items")->required();
  c_sim->add_option("--k", simp.k, "number of defectives")->required();
  c_sim->add_option("--p", simp.p, "Bernoulli design density")->required();
  c_sim->add_option("--T", simp.T, "number of tests")->required();
  c_sim->add_option("--trials", simp.trials, "Monte Carlo trials")->required();
  c_sim->add_option("--seed", simp.seed, "RNG seed")->required();
  c_sim->add_option("--engine", simp.engine, "matrix or mixture");
  c_sim->add_option("--out", simp.out, "output file (default stdout)");

  std::string rerun_path;
  CLI::App* c_rerun =
      app.add_subcommand("rerun", "re-execute a recorded manifest");
  c_rerun->add_option("manifest", rerun_path, "manifest JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (c_moments->parsed()) return run_moments(mp);
    if (c_stein->parsed()) {
      if (!sp.grid && (sp.k == 0 || sp.p == 0.0 || sp.T == 0)) {
        std::cerr << "stein: --k, --p, --T are required without --grid\n";
        return 2;
      }
      return run_stein(sp);
    }
    if (c_figure->parsed()) return run_figure(fp);
    if (c_plan->parsed()) return run_plan(pp);
    if (c_sim->parsed()) return run_simulate(simp);
    if (c_rerun->parsed()) return run_rerun(rerun_path);
  } catch (const grouptest::resource_error& e) {
    std::cerr << "resource guard: " << e.what() << '\n';
    return 4;
  } catch (const grouptest::grouptest_error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
