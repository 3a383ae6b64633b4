#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "artifacts.hpp"
#include "fq/free_energy/fep.hpp"
#include "fq/free_energy/neq.hpp"
#include "fq/guiding/curve.hpp"
#include "fq/model/system_io.hpp"
#include "fq/orchestrator/pipeline.hpp"
#include "fq/qre/estimate.hpp"
#include "fq/sampling/langevin.hpp"
#include "fq/surrogate/active_learning.hpp"

namespace fq::orchestrator {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Loaded {
  model::SystemDefinition def;
  model::OracleHierarchy oracle;
  model::ThermoState state;
};

Loaded load(const json& p) {
  auto def = model::parse_system(p.at("system"));
  model::OracleHierarchy oracle(def.potential, def.oracle);
  return {std::move(def), std::move(oracle), model::ThermoState(p.at("beta").get<double>())};
}

// BASE at full coupling plus the surrogate correction.
sampling::Surface corrected_surface(const model::AlchemicalPotential& base, const surrogate::EnsembleSurrogate& ml) {
  sampling::Surface s = sampling::make_surface(base, 1.0);
  s.evaluate = [&base, &ml](std::span<const double> x) {
    auto ef = base.energy_and_forces(x, 1.0);
    const auto p = ml.predict(x);
    ef.energy += p.energy;
    for (std::size_t i = 0; i < ef.forces.size(); ++i) ef.forces[i] += p.forces[i];
    return ef;
  };
  return s;
}

surrogate::TrainingEntry oracle_label(const model::OracleHierarchy& h, model::Tier tier, std::span<const double> x,
                                      const std::string& id) {
  surrogate::TrainingEntry e;
  e.coords.assign(x.begin(), x.end());
  e.tier = tier;
  e.id = id;
  if (tier == model::Tier::high) {
    e.energy = h.energy(model::Tier::high, x, 1.0) - h.energy(model::Tier::base, x, 1.0);
    return e;
  }
  const auto top = h.energy_and_forces(tier, x, 1.0);
  const auto base = h.energy_and_forces(model::Tier::base, x, 1.0);
  e.energy = top.energy - base.energy;
  std::vector<double> f(top.forces.size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = top.forces[i] - base.forces[i];
  e.forces = std::move(f);
  return e;
}

json handle_fep(const TaskDocument& task, TaskContext&) {
  const auto& p = task.payload;
  const auto sys = load(p);
  free_energy::FepConfig c;
  c.schedule = free_energy::LambdaSchedule::uniform_decoupling(p.at("windows").get<std::size_t>());
  c.sampling.dt = p.at("dt");
  c.sampling.gamma = p.at("gamma");
  c.sampling.n_equil = p.at("n_equil");
  c.sampling.n_steps = p.at("n_steps");
  c.sampling.seed = p.at("seed");
  c.snapshot_stride = p.at("snapshot_stride");
  c.max_snapshots = p.at("max_snapshots");
  c.mbar.n_bootstrap = p.at("n_bootstrap");
  c.mbar.seed = p.at("seed").get<std::uint64_t>() + 1;
  c.overlap_threshold = p.at("overlap_threshold");
  c.max_refinements = p.at("max_refinements");
  const auto& pot = sys.def.potential;
  const auto r = free_energy::run_fep([&pot](std::span<const double> x, double l) { return pot.energy(x, l); },
                                      [&pot](double l) { return sampling::make_surface(pot, l); },
                                      sys.def.start_coords, c, sys.state);
  std::size_t n = 0;
  for (const auto& w : r.snapshots) n += w.size();
  // Schedules run 1 → 0, so the estimate is G(0) − G(1); report the coupling direction.
  return {{"dG", -r.delta.value},
          {"stderr", r.delta.error},
          {"windows", r.schedule.values()},
          {"overlaps", r.overlaps},
          {"mbar_converged", r.mbar.converged},
          {"n_samples", n}};
}

json handle_sample(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto sys = load(p);
  const std::size_t count = p.at("count");
  const std::size_t stride = p.at("stride");
  sampling::LangevinParams lp;
  lp.dt = p.at("dt");
  lp.gamma = p.at("gamma");
  lp.n_equil = p.at("n_equil");
  lp.n_steps = lp.n_equil + count * stride;
  lp.seed = p.at("seed");
  const auto traj = sampling::langevin_propagate(sampling::make_surface(sys.def.potential, 1.0), sys.def.start_coords,
                                                 lp, sys.state, 1.0);
  std::vector<std::vector<double>> coords;
  for (auto& f : sampling::draw_snapshots(traj, stride, count)) coords.push_back(std::move(f.coords));
  if (coords.size() != count) throw Error("sampling produced too few snapshots");
  const auto path = ctx.artifact_dir / "snapshots.json";
  write_file_atomic(path, json{{"coords", coords}}.dump());
  return {{"snapshots", artifact_ref(ctx.store, path)}, {"count", count}};
}

std::vector<std::vector<double>> snapshots_of(const TaskStore& store, const std::string& task_id) {
  return load_json_artifact(store, store.result(task_id).at("snapshots")).at("coords").get<std::vector<std::vector<double>>>();
}

json write_entries(TaskContext& ctx, const std::vector<surrogate::TrainingEntry>& entries, const std::string& name) {
  const auto path = ctx.artifact_dir / name;
  write_file_atomic(path, entries_to_json(entries).dump());
  return artifact_ref(ctx.store, path);
}

json handle_label_mid(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto sys = load(p);
  const auto snaps = snapshots_of(ctx.store, p.at("snapshots_task"));
  const std::size_t begin = p.at("begin");
  const std::size_t end = std::min(p.at("end").get<std::size_t>(), snaps.size());
  std::vector<surrogate::TrainingEntry> out;
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(oracle_label(sys.oracle, model::Tier::mid, snaps[i], fmt::format("mm{:05d}", i)));
  }
  return {{"entries", write_entries(ctx, out, "entries.json")}, {"count", out.size()}, {"tier", "MID"}};
}

// Deterministic transfer-set selection over the ML1 dataset.
std::vector<surrogate::TrainingEntry> transfer_candidates(const TaskStore& store, const json& p,
                                                          const Loaded& sys) {
  const auto dataset = entries_from_json(load_json_artifact(store, store.result(p.at("dataset_task")).at("dataset")));
  std::vector<double> totals;
  for (const auto& e : dataset) totals.push_back(sys.def.potential.energy(e.coords, 1.0) + e.energy);
  const double window = p.at("window_reduced");
  auto keep = surrogate::select_transfer_set(totals, window);
  const std::size_t max_points = p.at("max_points");
  std::vector<surrogate::TrainingEntry> out;
  if (keep.size() > max_points) {
    // Evenly spaced over the kept set.
    for (std::size_t i = 0; i < max_points; ++i) out.push_back(dataset[keep[i * keep.size() / max_points]]);
  } else {
    for (auto k : keep) out.push_back(dataset[k]);
  }
  return out;
}

json handle_label_high(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto sys = load(p);
  const auto selected = transfer_candidates(ctx.store, p, sys);
  const std::size_t begin = p.at("begin");
  const std::size_t end = std::min(p.at("end").get<std::size_t>(), selected.size());
  std::vector<surrogate::TrainingEntry> out;
  for (std::size_t i = begin; i < end; ++i) {
    out.push_back(oracle_label(sys.oracle, model::Tier::high, selected[i].coords, "hi-" + selected[i].id));
  }
  return {{"entries", write_entries(ctx, out, "entries.json")},
          {"count", out.size()},
          {"selected", selected.size()},
          {"tier", "HIGH"}};
}

surrogate::TrainConfig train_config(const json& ml, std::uint64_t seed) {
  surrogate::TrainConfig c;
  const std::string family = ml.at("family");
  c.family = family == "mlp" ? surrogate::RegressorKind::mlp : surrogate::RegressorKind::krr;
  c.members = ml.at("members");
  c.seed = seed;
  if (c.family == surrogate::RegressorKind::mlp) {
    c.mlp.hidden = {24, 24};
    c.mlp.max_epochs = 400;
  }
  return c;
}

json handle_train(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto sys = load(p);
  const auto& ml = p.at("ml");
  const std::uint64_t seed = p.at("seed");
  surrogate::TrainingSet initial;
  initial.split_seed = seed;
  for (const auto& id : p.at("label_tasks")) {
    for (auto& e : entries_from_json(load_json_artifact(ctx.store, ctx.store.result(id).at("entries")))) {
      initial.entries.push_back(std::move(e));
    }
  }
  surrogate::ActiveLearningConfig al;
  al.threshold = ml.at("sigma_threshold");
  al.budget = ml.at("budget");
  al.max_rounds = ml.at("max_rounds");
  al.max_per_round = ml.at("max_per_round");
  al.train = train_config(ml, seed);

  const std::size_t n_candidates = ml.at("candidates_per_round");
  const std::size_t steps = ml.at("candidate_steps");
  const std::size_t stride = std::max<std::size_t>(1, steps / std::max<std::size_t>(1, n_candidates));
  const auto start = initial.entries.front().coords;
  const auto& base = sys.def.potential;
  const model::ThermoState state = sys.state;
  auto sampler = [&](const surrogate::EnsembleSurrogate& model, std::size_t round) {
    sampling::LangevinParams lp;
    lp.dt = p.at("dt");
    lp.gamma = p.at("gamma");
    lp.n_equil = 0;
    lp.n_steps = stride * n_candidates;
    lp.seed = seed + 7919 * (round + 1);
    const auto traj = sampling::langevin_propagate(corrected_surface(base, model), start, lp, state, 1.0);
    std::vector<std::vector<double>> out;
    for (auto& f : sampling::draw_snapshots(traj, stride, n_candidates)) out.push_back(std::move(f.coords));
    return out;
  };
  auto labeler = [&](std::span<const double> x, const std::string& id) {
    return oracle_label(sys.oracle, model::Tier::mid, x, id);
  };
  const surrogate::Featurizer feat(base.system());
  const auto r = surrogate::active_learning_run(std::move(initial), feat, sampler, labeler, al);

  const auto model_path = ctx.artifact_dir / "ml1.fqml";
  r.model.save(model_path);
  const auto audit_path = ctx.artifact_dir / "audit.jsonl";
  surrogate::write_audit_log(r.audit, audit_path);
  const auto& md = r.model.metadata();
  return {{"model", artifact_ref(ctx.store, model_path)},
          {"dataset", write_entries(ctx, r.dataset.entries, "dataset.json")},
          {"audit", artifact_ref(ctx.store, audit_path)},
          {"converged", r.converged},
          {"added", r.added},
          {"rounds", r.rounds},
          {"final_max_sigma", r.final_max_sigma},
          {"n_train", md.n_train},
          {"train_rmse", md.train_rmse},
          {"val_rmse", md.val_rmse},
          {"dataset_hash", fmt::format("{:016x}", md.dataset_hash)}};
}

json handle_transfer(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto base_model =
      surrogate::EnsembleSurrogate::load(artifact_path(ctx.store, ctx.store.result(p.at("model_task")).at("model")));
  surrogate::TrainingSet high;
  high.split_seed = p.at("seed");
  for (const auto& id : p.at("label_tasks")) {
    for (auto& e : entries_from_json(load_json_artifact(ctx.store, ctx.store.result(id).at("entries")))) {
      high.entries.push_back(std::move(e));
    }
  }
  surrogate::TransferConfig tc;
  tc.seed = p.at("seed");
  const auto ml2 = surrogate::transfer_learn(base_model, high, tc);
  const auto path = ctx.artifact_dir / "ml2.fqml";
  ml2.save(path);
  const auto& md = ml2.metadata();
  return {{"model", artifact_ref(ctx.store, path)},
          {"n_high", high.size()},
          {"rmse_before_transfer", md.rmse_before_transfer},
          {"rmse_after_transfer", md.rmse_after_transfer}};
}

json handle_neq(const TaskDocument& task, TaskContext& ctx) {
  const auto& p = task.payload;
  const auto sys = load(p);
  const auto ml = surrogate::EnsembleSurrogate::load(artifact_path(ctx.store, ctx.store.result(p.at("model_task")).at("model")));
  const auto snaps = snapshots_of(ctx.store, p.at("snapshots_task"));
  const auto& base = sys.def.potential;
  const auto from = sampling::make_surface(base, 1.0);
  const auto to = corrected_surface(base, ml);
  free_energy::SwitchProtocol proto;
  proto.switch_steps = p.at("switch_steps");
  proto.dt = p.at("dt");
  proto.gamma = p.at("gamma");
  proto.id = fmt::format("linear-{}", proto.switch_steps);
  const std::string direction = p.at("direction");
  const std::size_t begin = p.at("begin");
  const std::size_t count = p.at("count");
  const std::uint64_t seed = p.at("seed");

  std::vector<std::vector<double>> starts;
  if (direction == "forward") {
    if (begin + count > snaps.size()) throw ValidationError("not enough MM snapshots for forward switches");
    starts.assign(snaps.begin() + static_cast<std::ptrdiff_t>(begin),
                  snaps.begin() + static_cast<std::ptrdiff_t>(begin + count));
  } else {
    sampling::LangevinParams lp;
    lp.dt = proto.dt;
    lp.gamma = proto.gamma;
    lp.n_equil = p.at("equil_steps");
    const std::size_t stride = p.at("stride");
    lp.n_steps = lp.n_equil + count * stride;
    lp.seed = seed ^ 0x9e3779b97f4a7c15ULL;
    const auto traj = sampling::langevin_propagate(to, snaps.at(begin % snaps.size()), lp, sys.state, 1.0);
    for (auto& f : sampling::draw_snapshots(traj, stride, count)) starts.push_back(std::move(f.coords));
  }
  const auto dir = direction == "forward" ? free_energy::Direction::forward : free_energy::Direction::backward;
  std::vector<free_energy::WorkRecord> records;
  std::vector<double> works;
  for (std::size_t i = 0; i < starts.size(); ++i) {
    records.push_back(free_energy::neq_switch(from, to, starts[i], proto, dir, seed + i, sys.state, begin + i));
    works.push_back(records.back().work);
  }
  const auto path = ctx.artifact_dir / "works.csv";
  free_energy::write_work_records_csv(records, path);
  return {{"direction", direction}, {"works", works}, {"records", artifact_ref(ctx.store, path)}};
}

json handle_qre(const TaskDocument& task, TaskContext&) {
  const auto& p = task.payload;
  qre::EstimateRequest r;
  r.hamiltonian = p.at("hamiltonian").get<std::string>();
  r.method = p.value("method", "qdrift");
  r.epsilon = p.value("epsilon", qre::presets::kAccuracyPerCircuit);
  r.eta = p.value("overlap", 1.0);
  if (p.contains("profile")) r.profile = qre::HardwareProfile::from_json(p.at("profile"));
  if (p.contains("n_electrons")) r.n_electrons = p.at("n_electrons").get<std::size_t>();
  return qre::estimate_resources(r);
}

json handle_guiding(const TaskDocument& task, TaskContext&) {
  const auto& p = task.payload;
  const auto family = p.contains("family_file") ? guiding::load_family(p.at("family_file").get<std::string>())
                                                : guiding::family_from_json(p.at("family"));
  guiding::CurveRequest req;
  const auto methods = p.value("methods", std::vector<std::string>{"hf", "sos", "mps"});
  req.hf = std::find(methods.begin(), methods.end(), "hf") != methods.end();
  req.sos = std::find(methods.begin(), methods.end(), "sos") != methods.end();
  req.mps = std::find(methods.begin(), methods.end(), "mps") != methods.end();
  if (p.contains("chi")) req.chi = p.at("chi").get<std::vector<std::size_t>>();
  const auto rows = guiding::overlap_curve(family, req);
  json out = json::array();
  for (const auto& row : rows) {
    out.push_back({{"n_orbitals", row.n_orbitals},
                   {"method", row.overlap.method},
                   {"param", row.overlap.param},
                   {"eta", row.overlap.eta}});
  }
  return {{"rows", out}};
}

}  // namespace

HandlerMap pipeline_handlers() {
  return {{"fep", handle_fep},           {"sample", handle_sample},     {"label_mid", handle_label_mid},
          {"label_high", handle_label_high}, {"train", handle_train},   {"transfer", handle_transfer},
          {"neq", handle_neq},           {"qre", handle_qre},           {"guiding", handle_guiding}};
}

}  // namespace fq::orchestrator
