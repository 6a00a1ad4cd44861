#pragma once

#include "winnow/calibration.hpp"
#include "winnow/core.hpp"

namespace winnow {

// Threshold split of one ranked list. Both halves keep the input's relative
// order and original scores; ranks are renumbered from 1.
struct FilterOutcome {
  RankedList retained;
  RankedList discarded;
  Threshold threshold_used;
};

// Partitions the list by s_pre(score, t): at-or-above-threshold passages are
// retained, the rest discarded. Every passage must have a score.
FilterOutcome apply_filter(const RankedList& list, const ScoreMap& scores, Threshold t);

}  // namespace winnow
