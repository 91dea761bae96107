#pragma once

// Reference CelebA values (10 template candidates per person) and
// the check shared by the acceptance binary and the standalone fixture.

#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>
#include <vector>

#include "embagg/dataset_io.hpp"
#include "embagg/evaluation.hpp"

namespace celeba {

struct Cell {
  embagg::Strategy strategy;
  double match;
  double nonmatch;
};

inline constexpr Cell kReference[] = {
    {embagg::Strategy::Baseline, 0.748, 1.958},
    {embagg::Strategy::Mean, 0.410, 1.622},
    {embagg::Strategy::Median, 0.422, 1.662},
    {embagg::Strategy::Min, 1.414, 2.567},
    {embagg::Strategy::Max, 1.409, 2.564},
    {embagg::Strategy::Percentile25, 0.552, 1.781},
    {embagg::Strategy::Percentile75, 0.552, 1.781},
    {embagg::Strategy::Optimal, 0.354, 1.604},
    {embagg::Strategy::BestPerComparison, 0.471, 2.173},
};

inline constexpr double kTolerance = 0.01;

inline const char* manifest_from_env() { return std::getenv("EMBAGG_CELEBA_MANIFEST"); }

/// Evaluates the dump and compares every cell; `log` receives one line per
/// out-of-tolerance cell. Returns true when all cells agree.
inline bool check(const std::string& manifest, std::ostream& log) {
  const auto data = embagg::load_dataset(manifest);
  const std::vector<embagg::Strategy> all(std::begin(embagg::kAllStrategies),
                                          std::end(embagg::kAllStrategies));
  const auto report =
      embagg::evaluate_strategies(data.persons, all, embagg::SplitSpec{},
                                  embagg::NonmatchSampling::full(), 1, data.name);
  bool ok = true;
  for (const auto& cell : kReference) {
    const auto* row = report.row(cell.strategy);
    if (row == nullptr) {
      log << "missing row " << embagg::strategy_key(cell.strategy) << "\n";
      ok = false;
      continue;
    }
    if (std::abs(row->match_distance - cell.match) > kTolerance) {
      log << embagg::strategy_key(cell.strategy) << " match " << row->match_distance
          << " vs " << cell.match << "\n";
      ok = false;
    }
    if (std::abs(row->nonmatch_distance - cell.nonmatch) > kTolerance) {
      log << embagg::strategy_key(cell.strategy) << " non-match " << row->nonmatch_distance
          << " vs " << cell.nonmatch << "\n";
      ok = false;
    }
  }
  return ok;
}

}  // namespace celeba
