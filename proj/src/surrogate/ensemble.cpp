#include "fq/surrogate/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <future>
#include <sstream>

#include "fq/error.hpp"

namespace fq::surrogate {

namespace {

constexpr char kMagic[4] = {'F', 'Q', 'M', 'L'};
constexpr std::uint32_t kFormatVersion = 1;

std::vector<std::unique_ptr<Regressor>> clone_all(const std::vector<std::unique_ptr<Regressor>>& src) {
  std::vector<std::unique_ptr<Regressor>> out;
  for (const auto& m : src) out.push_back(m->clone());
  return out;
}

Sample make_sample(const Featurizer& featurizer, const Normalization& norm,
                   const TrainingEntry& e, bool with_forces) {
  Sample s;
  Eigen::MatrixXd jac;
  const bool forces = with_forces && e.forces.has_value();
  const auto f = featurizer.featurize(e.coords, forces ? &jac : nullptr);
  s.x.resize(static_cast<Eigen::Index>(f.size()));
  for (std::size_t i = 0; i < f.size(); ++i) {
    s.x(static_cast<Eigen::Index>(i)) = (f[i] - norm.feature_mean[i]) / norm.feature_scale[i];
  }
  s.y = (e.energy - norm.energy_mean) / norm.energy_scale;
  if (forces) {
    s.has_forces = true;
    for (Eigen::Index i = 0; i < jac.rows(); ++i) jac.row(i) /= norm.feature_scale[static_cast<std::size_t>(i)];
    s.jacobian = std::move(jac);
    s.forces = Eigen::Map<const Eigen::VectorXd>(e.forces->data(), static_cast<Eigen::Index>(e.forces->size())) /
               norm.energy_scale;
  }
  return s;
}

Normalization fit_normalization(const Featurizer& featurizer, const TrainingSet& set, const std::vector<std::size_t>& idx) {
  Normalization n;
  const auto D = featurizer.size();
  n.feature_mean.assign(D, 0.0);
  n.feature_scale.assign(D, 0.0);
  std::vector<std::vector<double>> feats;
  feats.reserve(idx.size());
  double em = 0.0;
  for (auto i : idx) {
    feats.push_back(featurizer(set.entries[i].coords));
    em += set.entries[i].energy;
  }
  const double count = static_cast<double>(idx.size());
  em /= count;
  double ev = 0.0;
  for (auto i : idx) ev += (set.entries[i].energy - em) * (set.entries[i].energy - em);
  for (const auto& f : feats) {
    for (std::size_t d = 0; d < D; ++d) n.feature_mean[d] += f[d] / count;
  }
  for (const auto& f : feats) {
    for (std::size_t d = 0; d < D; ++d) n.feature_scale[d] += (f[d] - n.feature_mean[d]) * (f[d] - n.feature_mean[d]) / count;
  }
  for (auto& s : n.feature_scale) {
    s = std::sqrt(s);
    if (!(s > 1e-8)) s = 1.0;
  }
  n.energy_mean = em;
  n.energy_scale = std::sqrt(ev / count);
  if (!(n.energy_scale > 1e-12)) n.energy_scale = 1.0;
  return n;
}

}  // namespace

EnsembleSurrogate::EnsembleSurrogate(Featurizer featurizer, Normalization norm,
                                     std::vector<std::unique_ptr<Regressor>> members, TrainingMetadata metadata)
    : featurizer_(std::move(featurizer)), norm_(std::move(norm)), members_(std::move(members)), metadata_(std::move(metadata)) {
  if (members_.empty()) throw ValidationError("ensemble needs at least one member");
  if (norm_.feature_mean.size() != featurizer_.size() || norm_.feature_scale.size() != featurizer_.size()) {
    throw ValidationError("normalization does not match descriptor size");
  }
  for (const auto& m : members_) {
    if (!m || m->input_size() != featurizer_.size()) throw ValidationError("member input size does not match descriptor");
  }
}

EnsembleSurrogate::EnsembleSurrogate(const EnsembleSurrogate& other)
    : featurizer_(other.featurizer_), norm_(other.norm_), members_(clone_all(other.members_)), metadata_(other.metadata_) {}

EnsembleSurrogate& EnsembleSurrogate::operator=(const EnsembleSurrogate& other) {
  if (this != &other) {
    featurizer_ = other.featurizer_;
    norm_ = other.norm_;
    members_ = clone_all(other.members_);
    metadata_ = other.metadata_;
  }
  return *this;
}

RegressorKind EnsembleSurrogate::family() const {
  const Regressor* r = members_.front().get();
  while (r->kind() == RegressorKind::delta) r = &static_cast<const DeltaRegressor*>(r)->base();
  return r->kind();
}

std::vector<double> EnsembleSurrogate::normalized_features(std::span<const double> coords, Eigen::MatrixXd* jacobian) const {
  auto f = featurizer_.featurize(coords, jacobian);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = (f[i] - norm_.feature_mean[i]) / norm_.feature_scale[i];
  if (jacobian) {
    for (Eigen::Index i = 0; i < jacobian->rows(); ++i) jacobian->row(i) /= norm_.feature_scale[static_cast<std::size_t>(i)];
  }
  return f;
}

std::vector<double> EnsembleSurrogate::member_energies(std::span<const double> coords) const {
  const auto x = normalized_features(coords);
  std::vector<double> out;
  out.reserve(members_.size());
  for (const auto& m : members_) out.push_back(norm_.energy_mean + norm_.energy_scale * m->evaluate(x, {}));
  return out;
}

Prediction EnsembleSurrogate::predict_energy(std::span<const double> coords) const {
  const auto e = member_energies(coords);
  Prediction p;
  for (double v : e) p.energy += v;
  p.energy /= static_cast<double>(e.size());
  double var = 0.0;
  for (double v : e) var += (v - p.energy) * (v - p.energy);
  p.sigma = std::sqrt(var / static_cast<double>(e.size()));
  return p;
}

Prediction EnsembleSurrogate::predict(std::span<const double> coords) const {
  const auto x = normalized_features(coords);
  const auto D = x.size();
  std::vector<double> grad(D);
  std::vector<double> mean_grad(D, 0.0);
  std::vector<double> e;
  e.reserve(members_.size());
  for (const auto& m : members_) {
    e.push_back(norm_.energy_mean + norm_.energy_scale * m->evaluate(x, grad));
    for (std::size_t i = 0; i < D; ++i) mean_grad[i] += grad[i];
  }
  const double M = static_cast<double>(members_.size());
  Prediction p;
  for (double v : e) p.energy += v;
  p.energy /= M;
  double var = 0.0;
  for (double v : e) var += (v - p.energy) * (v - p.energy);
  p.sigma = std::sqrt(var / M);
  // Chain rule through the standardization: ∂E/∂f_i = s_E·ḡ_i / s_i.
  for (std::size_t i = 0; i < D; ++i) mean_grad[i] *= norm_.energy_scale / (M * norm_.feature_scale[i]);
  p.forces.assign(featurizer_.n_coords(), 0.0);
  featurizer_.pull_back(coords, mean_grad, p.forces);
  return p;
}

void EnsembleSurrogate::save(const std::filesystem::path& path) const {
  std::ostringstream body(std::ios::binary);
  BinaryWriter w(body);
  body.write(kMagic, 4);
  w.pod(kFormatVersion);
  w.pod(static_cast<std::uint32_t>(family()));
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(featurizer_.dim()));
  w.pod<std::uint64_t>(featurizer_.species().size());
  for (int s : featurizer_.species()) w.pod<std::int32_t>(s);
  w.pod<std::uint64_t>(featurizer_.spec().n_rbf);
  w.pod(featurizer_.spec().r_min);
  w.pod(featurizer_.spec().r_max);
  w.pod(featurizer_.spec().width);
  w.doubles(norm_.feature_mean);
  w.doubles(norm_.feature_scale);
  w.pod(norm_.energy_mean);
  w.pod(norm_.energy_scale);
  w.str(metadata_.role);
  w.pod(static_cast<std::uint32_t>(metadata_.tier));
  w.pod(metadata_.dataset_hash);
  w.pod<std::uint64_t>(metadata_.n_train);
  w.pod<std::uint64_t>(metadata_.n_validation);
  w.pod(metadata_.train_rmse);
  w.pod(metadata_.val_rmse);
  w.pod(metadata_.rmse_before_transfer);
  w.pod(metadata_.rmse_after_transfer);
  w.pod<std::uint64_t>(members_.size());
  for (const auto& m : members_) m->write(w);
  const std::string bytes = body.str();
  const std::uint64_t checksum = fnv1a(bytes.data(), bytes.size());

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write model file " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.write(reinterpret_cast<const char*>(&checksum), sizeof(checksum));
    if (!out) throw ValidationError("failed writing model file " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

EnsembleSurrogate EnsembleSurrogate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4 + sizeof(std::uint64_t) || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError("not an FQML model file", 0);
  }
  std::uint64_t stored = 0;
  std::memcpy(&stored, bytes.data() + bytes.size() - sizeof(stored), sizeof(stored));
  bytes.resize(bytes.size() - sizeof(stored));
  if (fnv1a(bytes.data(), bytes.size()) != stored) throw ParseError("model file checksum mismatch", 0);

  std::istringstream body(bytes, std::ios::binary);
  body.seekg(4);
  BinaryReader r(body);
  const auto version = r.pod<std::uint32_t>();
  if (version != kFormatVersion) throw ParseError("unsupported model format version " + std::to_string(version), 0);
  (void)r.pod<std::uint32_t>();  // family tag, recoverable from the members
  const auto dim = r.pod<std::uint32_t>();
  const auto n_particles = r.pod<std::uint64_t>();
  if (n_particles > 100000) throw ParseError("corrupt model file: particle count", 0);
  std::vector<int> species;
  for (std::uint64_t i = 0; i < n_particles; ++i) species.push_back(r.pod<std::int32_t>());
  DescriptorSpec spec;
  spec.n_rbf = r.pod<std::uint64_t>();
  spec.r_min = r.pod<double>();
  spec.r_max = r.pod<double>();
  spec.width = r.pod<double>();
  Normalization norm;
  norm.feature_mean = r.doubles();
  norm.feature_scale = r.doubles();
  norm.energy_mean = r.pod<double>();
  norm.energy_scale = r.pod<double>();
  TrainingMetadata meta;
  meta.role = r.str();
  meta.tier = static_cast<model::Tier>(r.pod<std::uint32_t>());
  meta.dataset_hash = r.pod<std::uint64_t>();
  meta.n_train = r.pod<std::uint64_t>();
  meta.n_validation = r.pod<std::uint64_t>();
  meta.train_rmse = r.pod<double>();
  meta.val_rmse = r.pod<double>();
  meta.rmse_before_transfer = r.pod<double>();
  meta.rmse_after_transfer = r.pod<double>();
  const auto n_members = r.pod<std::uint64_t>();
  if (n_members == 0 || n_members > 1000) throw ParseError("corrupt model file: member count", 0);
  std::vector<std::unique_ptr<Regressor>> members;
  for (std::uint64_t i = 0; i < n_members; ++i) members.push_back(Regressor::read(r));
  return EnsembleSurrogate(Featurizer(dim, std::move(species), spec), std::move(norm), std::move(members), std::move(meta));
}

// ---------------------------------------------------------------------------

EnsembleSurrogate train(const TrainingSet& dataset, const Featurizer& featurizer, const TrainConfig& config) {
  dataset.validate();
  if (config.members < 3) throw ValidationError("ensemble needs at least three members");
  if (dataset.entries.front().coords.size() != featurizer.n_coords()) {
    throw ValidationError("training coordinates do not match the descriptor system");
  }
  const auto split = split_dataset(dataset, config.train_fraction);
  if (split.train.empty()) throw ValidationError("training split is empty");
  const auto norm = fit_normalization(featurizer, dataset, split.train);

  const bool want_forces = config.family == RegressorKind::mlp && config.mlp.force_weight > 0.0;
  std::vector<Sample> tr;
  std::vector<Sample> va;
  for (auto i : split.train) tr.push_back(make_sample(featurizer, norm, dataset.entries[i], want_forces));
  for (auto i : split.validation) va.push_back(make_sample(featurizer, norm, dataset.entries[i], false));

  std::vector<std::future<std::unique_ptr<Regressor>>> jobs;
  for (std::size_t m = 0; m < config.members; ++m) {
    const std::uint64_t seed = config.seed * 0x9E3779B97F4A7C15ULL + m + 1;
    jobs.push_back(std::async(std::launch::async, [&, seed]() -> std::unique_ptr<Regressor> {
      if (config.family == RegressorKind::mlp) {
        auto net = std::make_unique<Mlp>(featurizer.size(), config.mlp.hidden, seed);
        fit_mlp(*net, tr, va, config.mlp, seed);
        return net;
      }
      if (config.family == RegressorKind::krr) return fit_krr(tr, va, config.krr, seed);
      throw ValidationError("unsupported regressor family for training");
    }));
  }
  std::vector<std::unique_ptr<Regressor>> members;
  for (auto& j : jobs) members.push_back(j.get());

  TrainingMetadata meta;
  meta.role = config.role;
  meta.tier = dataset.entries.front().tier;
  meta.dataset_hash = dataset.hash();
  meta.n_train = split.train.size();
  meta.n_validation = split.validation.size();
  EnsembleSurrogate model(featurizer, norm, std::move(members), meta);
  std::vector<TrainingEntry> tr_e;
  std::vector<TrainingEntry> va_e;
  for (auto i : split.train) tr_e.push_back(dataset.entries[i]);
  for (auto i : split.validation) va_e.push_back(dataset.entries[i]);
  model.metadata().train_rmse = energy_rmse(model, tr_e);
  model.metadata().val_rmse = va_e.empty() ? model.metadata().train_rmse : energy_rmse(model, va_e);
  return model;
}

double energy_rmse(const EnsembleSurrogate& model, const std::vector<TrainingEntry>& entries) {
  if (entries.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : entries) {
    const double d = model.predict_energy(e.coords).energy - e.energy;
    s += d * d;
  }
  return std::sqrt(s / static_cast<double>(entries.size()));
}

std::vector<std::size_t> select_transfer_set(std::span<const double> energies, double window) {
  if (energies.empty()) throw ValidationError("transfer selection needs at least one candidate");
  if (!(window >= 0.0)) throw ValidationError("transfer window must be non-negative");
  std::vector<double> sorted(energies.begin(), energies.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (std::abs(energies[i] - median) <= window) out.push_back(i);
  }
  return out;
}

EnsembleSurrogate transfer_learn(const EnsembleSurrogate& base, const TrainingSet& high, const TransferConfig& config) {
  if (high.size() < std::max<std::size_t>(config.min_entries, 1)) {
    throw ValidationError("insufficient transfer data: " + std::to_string(high.size()) + " entries");
  }
  high.validate();
  for (const auto& e : high.entries) {
    if (e.forces) throw ValidationError("transfer data must be energy-only (entry '" + e.id + "')");
  }
  const auto split = split_dataset(high, config.train_fraction);
  const auto& norm = base.normalization();
  std::vector<Sample> tr;
  std::vector<Sample> va;
  std::vector<TrainingEntry> va_e;
  for (auto i : split.train) tr.push_back(make_sample(base.featurizer(), norm, high.entries[i], false));
  for (auto i : split.validation) {
    va.push_back(make_sample(base.featurizer(), norm, high.entries[i], false));
    va_e.push_back(high.entries[i]);
  }
  if (tr.empty()) throw ValidationError("transfer training split is empty");

  std::vector<std::unique_ptr<Regressor>> members;
  for (std::size_t m = 0; m < base.size(); ++m) {
    const std::uint64_t seed = config.seed * 0x9E3779B97F4A7C15ULL + m + 1;
    const Regressor& src = base.member(m);
    if (src.kind() == RegressorKind::mlp) {
      auto net = std::make_unique<Mlp>(static_cast<const Mlp&>(src));
      fit_mlp(*net, tr, va, config.fine_tune, seed);
      members.push_back(std::move(net));
    } else {
      // Residual targets for this member.
      auto residual = [&](std::vector<Sample> s) {
        for (auto& x : s) x.y -= src.evaluate(std::span<const double>(x.x.data(), static_cast<std::size_t>(x.x.size())), {});
        return s;
      };
      auto delta = fit_krr(residual(tr), residual(va), config.delta, seed);
      members.push_back(std::make_unique<DeltaRegressor>(src.clone(), std::move(delta)));
    }
  }

  TrainingMetadata meta = base.metadata();
  meta.role = "ML2";
  meta.tier = high.entries.front().tier;
  meta.dataset_hash = high.hash();
  meta.n_train = split.train.size();
  meta.n_validation = split.validation.size();
  EnsembleSurrogate out(base.featurizer(), norm, std::move(members), meta);
  std::vector<TrainingEntry> tr_e;
  for (auto i : split.train) tr_e.push_back(high.entries[i]);
  out.metadata().train_rmse = energy_rmse(out, tr_e);
  out.metadata().val_rmse = va_e.empty() ? out.metadata().train_rmse : energy_rmse(out, va_e);
  out.metadata().rmse_before_transfer = energy_rmse(base, va_e);
  out.metadata().rmse_after_transfer = out.metadata().val_rmse;
  return out;
}

}  // namespace fq::surrogate
