#pragma once

#include <string>

#include "nsmp/checker.hpp"
#include "nsmp/multipliers.hpp"
#include "nsmp/problem.hpp"
#include "nsmp/solver.hpp"

namespace nsmp {

/// Loads a problem document: either {"ref": "REF-A"} or the full schema
/// with named built-in evaluators (affine/quadratic coefficient arrays).
/// See README for the schema.
OCProblem load_problem_json(const std::string& path);
OCProblem problem_from_json_text(const std::string& text);

/// Pack files are self-contained: grid, trajectory and multipliers
/// (written with 17 significant digits so re-reading is exact).
void write_pack_json(const std::string& path, const Process& process, const MultiplierPack& pack,
                     unsigned seed);
struct PackFile {
  Process process;
  MultiplierPack pack;
};
PackFile read_pack_json(const std::string& path);

/// Deterministic report serialization: keys in fixed order, floats as
/// %.12e, non-finite values as null.
std::string report_to_json(const CheckReport& report);
void write_report_json(const std::string& path, const CheckReport& report);

std::string trace_to_json(const ContinuationTrace& trace, unsigned seed);
void write_trace_json(const std::string& path, const ContinuationTrace& trace, unsigned seed);

void write_solution_csv(const std::string& path, const Process& process, unsigned seed);
void write_multipliers_csv(const std::string& path, const Process& process,
                           const MultiplierPack& pack, unsigned seed);
/// Flat nodewise residual table for plotting (one column per condition
/// that carries nodewise residuals).
void write_residuals_csv(const std::string& path, const Process& process,
                         const CheckReport& report, unsigned seed);

}  // namespace nsmp
