#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "winnow/core.hpp"

namespace winnow {

struct Threshold {
  double value = 0.0;
};

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  // Judged pairs with no score available; outside the four counts.
  std::uint64_t skipped = 0;
};

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Score binarization: 1 iff score >= t (at-threshold counts as relevant).
int s_pre(double score, Threshold t);

// Uniform sample without replacement of round(fraction * size) judged pairs.
// Deterministic in seed, independent of insertion order.
JudgmentSet sample_judged_pairs(const JudgmentSet& judgments, double fraction,
                                std::uint64_t seed);

// Compares binarized scores against binarized judgments over the sample.
// Judged pairs without a score are skipped (and tallied as such).
ConfusionCounts confusion(const ScoresByQuery& scores, const JudgmentSet& sample,
                          const RelevancePolicy& policy, Threshold t);

// Each measure is 0 when its denominator is 0.
PrecisionRecallF1 prf1(const ConfusionCounts& counts);

struct ThresholdSearch {
  enum class Mode { grid, hill_climb };
  Mode mode = Mode::grid;
  double step = 0.05;
  double start = 0.5;  // hill_climb only
};

struct CalibrationRow {
  Threshold threshold;
  ConfusionCounts counts;
  PrecisionRecallF1 prf;
};

struct CalibrationReport {
  std::vector<CalibrationRow> rows;  // ascending threshold
  Threshold selected;
  PrecisionRecallF1 selected_prf;
  double sample_fraction = 1.0;
  std::uint64_t seed = 0;
  std::string search_mode;
  int policy_min_relevant_level = 1;

  std::string to_json() const;
};

// Grid mode sweeps t in {0, step, 2*step, ..., 1} and picks the max-F1
// threshold (ties go to the smallest, the more inclusive choice). Hill-climb
// starts at `start` and moves by `step` toward strictly higher F1 until
// neither neighbor improves.
CalibrationReport select_threshold(const ScoresByQuery& scores, const JudgmentSet& sample,
                                   const RelevancePolicy& policy,
                                   const ThresholdSearch& search);

}  // namespace winnow
