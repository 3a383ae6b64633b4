#include "fq/surrogate/active_learning.hpp"

#include <algorithm>
#include <fstream>
#include <future>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "fq/error.hpp"

namespace fq::surrogate {

ActiveLearningResult active_learning_run(TrainingSet initial, const Featurizer& featurizer,
                                         const CandidateSampler& sampler, const Labeler& labeler,
                                         const ActiveLearningConfig& config) {
  if (!(config.threshold >= 0.0)) throw ValidationError("active learning threshold must be non-negative");
  std::vector<AuditEvent> audit;
  auto model = train(initial, featurizer, config.train);
  audit.push_back({"train", "", 0.0, fmt::format("trained on {} entries", initial.size()), 0});

  ActiveLearningResult result{std::move(model), std::move(initial), false, 0, 0, 0.0, {}};
  for (std::size_t round = 1;; ++round) {
    result.rounds = round;
    const auto candidates = sampler(result.model, round);
    std::vector<std::pair<double, std::size_t>> flagged;
    result.final_max_sigma = 0.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double s = result.model.predict_energy(candidates[i]).sigma;
      result.final_max_sigma = std::max(result.final_max_sigma, s);
      if (s > config.threshold) flagged.emplace_back(s, i);
    }
    if (flagged.empty()) {
      result.converged = true;
      audit.push_back({"converged", "", result.final_max_sigma, "no structure above threshold", round});
      break;
    }
    std::sort(flagged.begin(), flagged.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    const std::size_t remaining = config.budget - result.added;
    const std::size_t take = std::min({flagged.size(), remaining, config.max_per_round});
    std::vector<std::future<TrainingEntry>> jobs;
    std::vector<std::string> ids;
    for (std::size_t k = 0; k < flagged.size(); ++k) {
      const auto id = fmt::format("al-r{}-{}", round, flagged[k].second);
      if (k < take) {
        ids.push_back(id);
        const auto& coords = candidates[flagged[k].second];
        jobs.push_back(std::async(std::launch::async, [&labeler, &coords, id] { return labeler(coords, id); }));
        audit.push_back({"flag", id, flagged[k].first, "labeled", round});
      } else {
        audit.push_back({"flag", id, flagged[k].first, "skipped", round});
      }
    }
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      auto entry = jobs[k].get();
      if (entry.id != ids[k]) throw ValidationError("labeler changed structure id '" + ids[k] + "'");
      result.dataset.entries.push_back(std::move(entry));
    }
    result.added += take;

    if (take == 0) {
      audit.push_back({"budget_exhausted", "", result.final_max_sigma, "open flags remain", round});
      break;
    }
    result.model = train(result.dataset, featurizer, config.train);
    audit.push_back({"train", "", 0.0, fmt::format("trained on {} entries", result.dataset.size()), round});
    if (round >= config.max_rounds) {
      audit.push_back({"round_limit", "", result.final_max_sigma, "stopped before a clean sampling pass", round});
      break;
    }
  }
  result.audit = std::move(audit);
  return result;
}

void write_audit_log(std::span<const AuditEvent> events, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write audit log " + path.string());
  for (const auto& e : events) {
    nlohmann::json j{{"event", e.event}, {"structure_id", e.structure_id}, {"sigma", e.sigma}, {"action", e.action},
                     {"round", e.round}};
    out << j.dump() << '\n';
  }
}

}  // namespace fq::surrogate
