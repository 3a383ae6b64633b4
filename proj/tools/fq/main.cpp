// fq: command-line front end.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fq/error.hpp"
#include "fq/free_energy/estimators.hpp"
#include "fq/free_energy/fep.hpp"
#include "fq/free_energy/neq.hpp"
#include "fq/guiding/curve.hpp"
#include "fq/model/system_io.hpp"
#include "fq/orchestrator/pipeline.hpp"
#include "fq/qre/estimate.hpp"
#include "fq/sampling/langevin.hpp"
#include "fq/surrogate/ensemble.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fq;

namespace {

std::atomic<bool> g_stop{false};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ValidationError("cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(p.string() + ": " + e.what());
  }
}

void write_json(const fs::path& p, const json& j) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  orchestrator::write_file_atomic(p, j.dump(2) + "\n", false);
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fs::path store_root(const std::string& flag) {
  return flag.empty() ? orchestrator::TaskStore::default_root() : fs::path(flag);
}

json tier_entry(const std::string& label, const free_energy::Estimate& e, double unit) {
  return {{"label", label}, {"dG", e.value * unit}, {"stderr", e.error * unit}};
}

// ---- fep run ---------------------------------------------------------------

int fep_run(const fs::path& config_path) {
  const auto cfg = read_json(config_path);
  const auto base = config_path.parent_path();
  const auto sys = model::load_system(resolve(base, cfg.at("system")));
  const model::ThermoState state(cfg.value("beta", 1.0));
  const double unit = cfg.value("kj_per_mol", 1.0);
  free_energy::FepConfig c;
  c.schedule = free_energy::LambdaSchedule::uniform_decoupling(cfg.value("windows", std::size_t{11}));
  c.sampling.dt = cfg.value("dt", 0.02);
  c.sampling.gamma = cfg.value("gamma", 1.0);
  c.sampling.n_equil = cfg.value("n_equil", std::size_t{500});
  c.sampling.n_steps = cfg.value("n_steps", std::size_t{20500});
  c.sampling.seed = cfg.value("seed", std::uint64_t{1});
  c.snapshot_stride = cfg.value("snapshot_stride", std::size_t{10});
  c.max_snapshots = cfg.value("max_snapshots", std::size_t{2000});
  c.mbar.n_bootstrap = cfg.value("n_bootstrap", std::size_t{200});
  c.mbar.seed = c.sampling.seed + 1;
  c.overlap_threshold = cfg.value("overlap_threshold", 0.03);
  c.max_refinements = cfg.value("max_refinements", std::size_t{2});
  const auto& pot = sys.potential;
  const auto r = free_energy::run_fep([&pot](std::span<const double> x, double l) { return pot.energy(x, l); },
                                      [&pot](double l) { return sampling::make_surface(pot, l); }, sys.start_coords,
                                      c, state);
  const fs::path out = fs::path(cfg.value("out", std::string("fep_out")));
  write_json(out / "mbar_result.json", {{"windows", r.schedule.values()},
                                        {"f_k", r.mbar.f},
                                        {"stderr", r.mbar.stderr_k},
                                        {"overlaps", r.overlaps},
                                        {"converged", r.mbar.converged},
                                        {"iterations", r.mbar.iterations},
                                        {"residual", r.mbar.residual}});
  // Coupling leg G(1) − G(0); the schedule runs decoupling-first.
  const free_energy::Estimate leg{-r.delta.value, r.delta.error};
  free_energy::Estimate solvation;
  if (cfg.contains("ligand_solvation")) {
    const auto& s = cfg.at("ligand_solvation");
    solvation = {s.at("dG").get<double>() / unit, s.value("stderr", 0.0) / unit};
  }
  const auto cycle = free_energy::binding_cycle(leg, solvation, cfg.value("tier", std::string("MM")));
  write_json(out / "binding_cycle.json",
             {{"units", cfg.value("units", std::string(unit == 1.0 ? "reduced" : "kJ/mol"))},
              {"tiers", json::array({{{"label", cycle.tier},
                                      {"partial_binding", tier_entry(cycle.tier, cycle.partial_binding, unit)},
                                      {"ligand_solvation", tier_entry(cycle.tier, cycle.ligand_solvation, unit)},
                                      {"dG", cycle.binding.value * unit},
                                      {"stderr", cycle.binding.error * unit}}})}});
  fmt::print("{} dG = {:.4f} +/- {:.4f}  (MBAR {})\n", cycle.tier, cycle.binding.value * unit,
             cycle.binding.error * unit, r.mbar.converged ? "converged" : "NOT converged");
  return r.mbar.converged ? 0 : 2;
}

// ---- neq run ---------------------------------------------------------------

// BASE at full coupling, plus either the MID oracle correction or a saved surrogate.
sampling::Surface target_surface(const model::OracleHierarchy& h, const surrogate::EnsembleSurrogate* ml) {
  sampling::Surface s = sampling::make_surface(h.base(), 1.0);
  if (ml) {
    s.evaluate = [&h, ml](std::span<const double> x) {
      auto ef = h.base().energy_and_forces(x, 1.0);
      const auto p = ml->predict(x);
      ef.energy += p.energy;
      for (std::size_t i = 0; i < ef.forces.size(); ++i) ef.forces[i] += p.forces[i];
      return ef;
    };
  } else {
    s.evaluate = [&h](std::span<const double> x) { return h.energy_and_forces(model::Tier::mid, x, 1.0); };
  }
  return s;
}

int neq_run(const fs::path& config_path) {
  const auto cfg = read_json(config_path);
  const auto base = config_path.parent_path();
  const auto sys = model::load_system(resolve(base, cfg.at("system")));
  const model::OracleHierarchy h(sys.potential, sys.oracle);
  const model::ThermoState state(cfg.value("beta", 1.0));
  const double unit = cfg.value("kj_per_mol", 1.0);
  std::optional<surrogate::EnsembleSurrogate> ml;
  if (cfg.contains("model")) ml = surrogate::EnsembleSurrogate::load(resolve(base, cfg.at("model")));
  const auto from = sampling::make_surface(h.base(), 1.0);
  const auto to = target_surface(h, ml ? &*ml : nullptr);

  const std::size_t n = cfg.value("switches", std::size_t{60});
  const std::size_t stride = cfg.value("stride", std::size_t{20});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  free_energy::SwitchProtocol proto;
  proto.switch_steps = cfg.value("switch_steps", std::size_t{200});
  proto.dt = cfg.value("dt", 0.02);
  proto.gamma = cfg.value("gamma", 1.0);
  sampling::LangevinParams lp;
  lp.dt = proto.dt;
  lp.gamma = proto.gamma;
  lp.n_equil = cfg.value("equil_steps", std::size_t{2000});
  lp.n_steps = lp.n_equil + n * stride;

  const auto starts_on = [&](const sampling::Surface& s, std::uint64_t sd) {
    lp.seed = sd;
    std::vector<std::vector<double>> out;
    for (auto& f : sampling::draw_snapshots(sampling::langevin_propagate(s, sys.start_coords, lp, state, 1.0), stride, n)) {
      out.push_back(std::move(f.coords));
    }
    return out;
  };
  const auto fwd_starts = starts_on(from, seed);
  const auto bwd_starts = starts_on(to, seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<free_energy::WorkRecord> records;
  std::vector<double> wf;
  std::vector<double> wb;
  for (std::size_t i = 0; i < fwd_starts.size(); ++i) {
    records.push_back(free_energy::neq_switch(from, to, fwd_starts[i], proto, free_energy::Direction::forward,
                                              seed + 1000 + i, state, i));
    wf.push_back(records.back().work);
  }
  for (std::size_t i = 0; i < bwd_starts.size(); ++i) {
    records.push_back(free_energy::neq_switch(from, to, bwd_starts[i], proto, free_energy::Direction::backward,
                                              seed + 100000 + i, state, i));
    wb.push_back(records.back().work);
  }
  free_energy::BootstrapOptions bo;
  bo.n_resamples = cfg.value("n_bootstrap", std::size_t{1000});
  bo.seed = seed + 7;
  const auto bar = free_energy::crooks_bar_estimate(wf, wb, state, bo);
  const auto jar = free_energy::jarzynski_estimate(wf, state, bo);

  const fs::path out = fs::path(cfg.value("out", std::string("neq_out")));
  fs::create_directories(out);
  free_energy::write_work_records_csv(records, out / "work_records.csv");
  const std::string label = cfg.value("tier", std::string(ml ? "MM+ML" : "MM+MID"));
  json tiers = json::array();
  json correction = {{"bar", tier_entry(label, bar.estimate, unit)},
                     {"jarzynski", tier_entry(label, jar, unit)},
                     {"converged", bar.converged}};
  if (cfg.contains("mm")) {
    // Chain onto a known MM leg: dG_tier = dG_MM + correction.
    const auto& mm = cfg.at("mm");
    const double v = mm.at("dG");
    const double e = mm.value("stderr", 0.0);
    tiers.push_back({{"label", "MM"}, {"dG", v}, {"stderr", e}});
    tiers.push_back({{"label", label},
                     {"dG", v + bar.estimate.value * unit},
                     {"stderr", std::hypot(e, bar.estimate.error * unit)},
                     {"n_switches", wf.size() + wb.size()}});
  }
  write_json(out / "binding_cycle.json", {{"units", unit == 1.0 ? "reduced" : "kJ/mol"},
                                          {"correction", correction},
                                          {"tiers", tiers}});
  fmt::print("{} correction = {:.4f} +/- {:.4f} over {}+{} switches\n", label, bar.estimate.value * unit,
             bar.estimate.error * unit, wf.size(), wb.size());
  return bar.converged ? 0 : 2;
}

// ---- pipeline / worker / report ---------------------------------------------

int pipeline_cmd(const fs::path& config_path, const std::string& store, int workers) {
  const auto cfg = orchestrator::PipelineConfig::load(config_path);
  orchestrator::PipelineRuntime rt;
  if (!store.empty()) rt.store = fs::path(store);
  if (workers >= 0) rt.workers = static_cast<std::size_t>(workers);
  const auto report = orchestrator::pipeline_run(cfg, rt);
  for (const auto& t : report.tiers) {
    fmt::print("{:8s} dG = {:9.4f} +/- {:.4f} {}\n", t.label, t.dG, t.std_error, report.units);
  }
  for (const auto& f : report.failures) std::cerr << "failure: " << f.dump() << "\n";
  fmt::print("status: {}\n", report.status);
  return report.status == "complete" ? 0 : 3;
}

int worker_cmd(const std::string& store, const std::string& kinds, double lease, double heartbeat, double drain,
               std::size_t max_tasks) {
  orchestrator::TaskStore s(store_root(store));
  orchestrator::WorkerOptions o;
  o.worker_id = orchestrator::make_worker_id("fq");
  o.kinds = split(kinds);
  o.lease_secs = lease;
  o.heartbeat_secs = heartbeat;
  o.drain_timeout = drain;
  o.max_tasks = max_tasks;
  o.stop = &g_stop;
  std::signal(SIGINT, [](int) { g_stop = true; });
  std::signal(SIGTERM, [](int) { g_stop = true; });
  const auto st = orchestrator::worker_loop(s, orchestrator::pipeline_handlers(), o);
  fmt::print("{}: claimed {} completed {} failed {} lost {}\n", o.worker_id, st.claimed, st.completed, st.failed,
             st.lost);
  return 0;
}

int report_cmd(const std::string& store, const std::string& run, const std::string& format, bool audit) {
  const auto root = store_root(store);
  const auto report = orchestrator::load_report(root, run);
  if (format == "csv") {
    std::cout << report.to_csv();
  } else {
    std::cout << report.to_json().dump(2) << "\n";
  }
  if (!audit) return 0;
  const orchestrator::TaskStore s(root);
  const auto problems = orchestrator::audit_provenance(s, report);
  for (const auto& p : problems) std::cerr << "audit: " << p << "\n";
  return problems.empty() ? 0 : 4;
}

// ---- qre / guiding ----------------------------------------------------------

int qre_cmd(const std::string& hamiltonian, const std::string& method, double epsilon, double overlap,
            const std::string& profile, int n_electrons) {
  qre::EstimateRequest r;
  r.hamiltonian = hamiltonian;
  r.method = method;
  r.epsilon = epsilon;
  r.eta = overlap;
  if (!profile.empty()) r.profile = qre::HardwareProfile::from_json(read_json(profile));
  if (n_electrons >= 0) r.n_electrons = static_cast<std::size_t>(n_electrons);
  std::cout << qre::estimate_resources(r).dump(2) << "\n";
  return 0;
}

int guiding_cmd(const std::string& family, const std::string& methods, const std::string& chi, const std::string& sos,
                const std::string& out) {
  guiding::CurveRequest req;
  const auto ms = split(methods);
  const auto has = [&](const char* m) { return std::find(ms.begin(), ms.end(), m) != ms.end(); };
  for (const auto& m : ms) {
    if (m != "hf" && m != "sos" && m != "mps") throw ValidationError("unknown guiding method '" + m + "'");
  }
  req.hf = has("hf");
  req.sos = has("sos");
  req.mps = has("mps");
  req.chi.clear();
  for (const auto& c : split(chi)) req.chi.push_back(std::stoul(c));
  req.sos_per_orbital.clear();
  for (const auto& c : split(sos)) req.sos_per_orbital.push_back(std::stoul(c));
  const auto members = guiding::load_family(family);
  const auto rows = guiding::overlap_curve(members, req);
  if (out.empty() || out == "-") {
    std::cout << guiding::format_curve_csv(rows);
  } else {
    guiding::write_curve_csv(rows, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fq: free-energy pipeline, resource estimation and guiding-state tools"};
  app.require_subcommand(1);
  int code = 0;

  auto* pipeline = app.add_subcommand("pipeline", "end-to-end three-tier run");
  pipeline->require_subcommand(1);
  auto* prun = pipeline->add_subcommand("run", "run or resume a pipeline");
  std::string p_config;
  std::string p_store;
  int p_workers = -1;
  prun->add_option("--config", p_config, "pipeline config JSON")->required()->check(CLI::ExistingFile);
  prun->add_option("--store", p_store, "store directory (default: config, then $FQ_STORE)");
  prun->add_option("--workers", p_workers, "in-process workers; 0 waits for external `fq worker`s");
  prun->callback([&] { code = pipeline_cmd(p_config, p_store, p_workers); });

  auto* worker = app.add_subcommand("worker", "claim and execute tasks");
  std::string w_store;
  std::string w_kinds;
  double w_lease = 300.0;
  double w_heartbeat = 60.0;
  double w_drain = -1.0;
  std::size_t w_max = 0;
  worker->add_option("--store", w_store, "store directory (default $FQ_STORE)");
  worker->add_option("--kinds", w_kinds, "comma-separated task kinds (default: all)");
  worker->add_option("--lease", w_lease, "lease seconds");
  worker->add_option("--heartbeat", w_heartbeat, "heartbeat seconds");
  worker->add_option("--drain-timeout", w_drain, "exit after this many idle seconds (negative: never)");
  worker->add_option("--max-tasks", w_max, "exit after this many tasks (0: unlimited)");
  worker->callback([&] { code = worker_cmd(w_store, w_kinds, w_lease, w_heartbeat, w_drain, w_max); });

  auto* report = app.add_subcommand("report", "print a run report");
  std::string r_store;
  std::string r_run;
  std::string r_format = "json";
  bool r_audit = false;
  report->add_option("--run", r_run, "run id")->required();
  report->add_option("--store", r_store, "store directory (default $FQ_STORE)");
  report->add_option("--format", r_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  report->add_flag("--audit", r_audit, "verify provenance back to artifacts");
  report->callback([&] { code = report_cmd(r_store, r_run, r_format, r_audit); });

  auto* fep = app.add_subcommand("fep", "alchemical FEP");
  fep->require_subcommand(1);
  std::string f_config;
  auto* frun = fep->add_subcommand("run", "MBAR over a lambda schedule");
  frun->add_option("--config", f_config)->required()->check(CLI::ExistingFile);
  frun->callback([&] { code = fep_run(f_config); });

  auto* neq = app.add_subcommand("neq", "nonequilibrium switching");
  neq->require_subcommand(1);
  std::string n_config;
  auto* nrun = neq->add_subcommand("run", "BASE to corrected surface switches");
  nrun->add_option("--config", n_config)->required()->check(CLI::ExistingFile);
  nrun->callback([&] { code = neq_run(n_config); });

  auto* qre = app.add_subcommand("qre", "quantum resource estimation");
  qre->require_subcommand(1);
  auto* est = qre->add_subcommand("estimate", "cost report for one Hamiltonian");
  std::string q_ham;
  std::string q_method = "qdrift";
  double q_eps = qre::presets::kAccuracyPerCircuit;
  double q_eta = 1.0;
  std::string q_profile;
  int q_nel = -1;
  est->add_option("--hamiltonian", q_ham, "FCIDUMP or Pauli text file")->required()->check(CLI::ExistingFile);
  est->add_option("--method", q_method)->check(
      CLI::IsMember({"qdrift", "trotter", "randomized_trotter", "qubitization"}));
  est->add_option("--epsilon", q_eps, "target accuracy in Hartree");
  est->add_option("--overlap", q_eta, "guiding-state overlap eta");
  est->add_option("--profile", q_profile, "hardware profile JSON")->check(CLI::ExistingFile);
  est->add_option("--electrons", q_nel, "electron count for the symmetry shift");
  est->callback([&] { code = qre_cmd(q_ham, q_method, q_eps, q_eta, q_profile, q_nel); });

  auto* guiding = app.add_subcommand("guiding", "guiding-state overlaps");
  guiding->require_subcommand(1);
  auto* curve = guiding->add_subcommand("curve", "overlap versus active-space size");
  std::string g_family;
  std::string g_methods = "hf,sos,mps";
  std::string g_chi = "2,4,8";
  std::string g_sos = "4";
  std::string g_out;
  curve->add_option("--family", g_family, "family JSON")->required()->check(CLI::ExistingFile);
  curve->add_option("--methods", g_methods);
  curve->add_option("--chi", g_chi);
  curve->add_option("--sos", g_sos, "SOS budgets as multiples of N");
  curve->add_option("--out", g_out, "CSV path (default stdout)");
  curve->callback([&] { code = guiding_cmd(g_family, g_methods, g_chi, g_sos, g_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 64;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
