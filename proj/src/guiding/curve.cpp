#include "fq/guiding/curve.hpp"

#include <fstream>
#include <future>

#include <fmt/format.h>

#include "fq/error.hpp"
#include "fq/qre/generators.hpp"

namespace fq::guiding {

std::vector<FamilyMember> family_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  std::vector<FamilyMember> out;
  try {
    if (j.contains("fcidump")) {
      for (const auto& p : j.at("fcidump")) {
        std::filesystem::path file = p.get<std::string>();
        if (file.is_relative()) file = base / file;
        out.push_back({file.stem().string(), qre::parse_fcidump(file)});
      }
    } else if (j.value("generator", std::string{}) == "ppp_chain") {
      qre::PppChainSpec spec;
      spec.beta_short = j.value("beta_short", spec.beta_short);
      spec.beta_long = j.value("beta_long", spec.beta_long);
      spec.hubbard_u = j.value("hubbard_u", spec.hubbard_u);
      spec.bond_length = j.value("bond_length", spec.bond_length);
      const auto orbitals = j.value("orbitals", std::string("scf"));
      if (orbitals == "site") {
        spec.orbitals = qre::PppChainSpec::Orbitals::site;
      } else if (orbitals == "huckel") {
        spec.orbitals = qre::PppChainSpec::Orbitals::huckel;
      } else if (orbitals != "scf") {
        throw ValidationError("unknown orbital basis '" + orbitals + "'");
      }
      for (const auto& n : j.at("sizes")) {
        spec.n_sites = n.get<std::size_t>();
        out.push_back({fmt::format("ppp{}", spec.n_sites), qre::ppp_chain(spec)});
      }
    } else {
      throw ValidationError("family needs an 'fcidump' list or generator 'ppp_chain'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("family file: ") + e.what());
  }
  if (out.empty()) throw ValidationError("family is empty");
  return out;
}

std::vector<FamilyMember> load_family(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open family file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("family file " + path.string() + ": " + e.what());
  }
  return family_from_json(j, path.parent_path());
}

std::vector<CurveRow> overlap_curve(std::span<const FamilyMember> family, const CurveRequest& request) {
  auto one = [&request](const FamilyMember& m) {
    const auto g = exact_ground_state(m.integrals);
    const std::size_t n = m.integrals.n_spatial();
    std::vector<CurveRow> rows;
    if (request.hf) rows.push_back({n, hartree_fock_overlap(g.state, hartree_fock_determinant(g.state.sector)), g.degenerate});
    if (request.sos)
      for (auto f : request.sos_per_orbital) rows.push_back({n, sum_of_slater(g.state, f * n), g.degenerate});
    if (request.mps) {
      const auto exact = ci_to_mps(g.state);
      for (auto chi : request.chi) rows.push_back({n, mps_overlap(truncate_mps(exact, chi), g.state, chi), g.degenerate});
    }
    return rows;
  };
  std::vector<std::future<std::vector<CurveRow>>> jobs;
  for (const auto& m : family) jobs.push_back(std::async(std::launch::async, one, std::cref(m)));
  std::vector<CurveRow> out;
  for (auto& j : jobs) {
    auto rows = j.get();
    out.insert(out.end(), rows.begin(), rows.end());
  }
  return out;
}

std::string format_curve_csv(std::span<const CurveRow> rows) {
  std::string out = "n_orbitals,method,param,eta\n";
  for (const auto& r : rows) out += fmt::format("{},{},{},{:.15g}\n", r.n_orbitals, r.overlap.method, r.overlap.param, r.overlap.eta);
  return out;
}

void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write overlap table " + path.string());
  out << format_curve_csv(rows);
}

}  // namespace fq::guiding
