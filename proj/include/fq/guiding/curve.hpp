#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fq/guiding/overlap.hpp"
#include "fq/qre/integrals.hpp"

namespace fq::guiding {

/// Members of a system family, each an active space of growing size.
struct FamilyMember {
  std::string label;
  qre::FermionIntegrals integrals;
};

/// JSON family file: either {"generator": "ppp_chain", "sizes": [2, 3, ...], <chain params>}
/// or {"fcidump": ["a.fcidump", ...]} with paths relative to the file.
std::vector<FamilyMember> load_family(const std::filesystem::path& path);
std::vector<FamilyMember> family_from_json(const nlohmann::json& j, const std::filesystem::path& base = {});

struct CurveRequest {
  bool hf = true;
  bool sos = true;
  /// SOS budgets as multiples of N; the default {4} gives k = 4N.
  std::vector<std::size_t> sos_per_orbital{4};
  bool mps = true;
  std::vector<std::size_t> chi{2, 4, 8};
};

struct CurveRow {
  std::size_t n_orbitals = 0;
  OverlapResult overlap;
  bool degenerate = false;
};

/// One row per (member, method, parameter); members evaluated in parallel.
std::vector<CurveRow> overlap_curve(std::span<const FamilyMember> family, const CurveRequest& request);

/// `n_orbitals,method,param,eta`
void write_curve_csv(std::span<const CurveRow> rows, const std::filesystem::path& path);
std::string format_curve_csv(std::span<const CurveRow> rows);

}  // namespace fq::guiding
