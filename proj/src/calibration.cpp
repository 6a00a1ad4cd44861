#include "winnow/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <nlohmann/json.hpp>

#include "winnow/util.hpp"

namespace winnow {

namespace {

// Unbiased bounded draw; modulo with rejection to keep the sample uniform and
// reproducible across standard libraries (uniform_int_distribution is not
// portable across implementations).
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

int s_pre(double score, Threshold t) { return score >= t.value ? 1 : 0; }

JudgmentSet sample_judged_pairs(const JudgmentSet& judgments, double fraction,
                                std::uint64_t seed) {
  if (judgments.empty()) throw Error("cannot sample from an empty judgment set");
  if (!(fraction > 0.0) || fraction > 1.0) {
    throw Error("sample fraction must lie in (0, 1]");
  }
  std::vector<Judgment> pool = judgments.all();  // canonical order
  const std::size_t n = pool.size();
  const std::size_t k = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(n)));

  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(bounded_draw(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  JudgmentSet sample;
  for (std::size_t i = 0; i < k; ++i) sample.add(pool[i]);
  return sample;
}

ConfusionCounts confusion(const ScoresByQuery& scores, const JudgmentSet& sample,
                          const RelevancePolicy& policy, Threshold t) {
  ConfusionCounts counts;
  for (const auto& [query_id, per_query] : sample.by_query()) {
    auto q = scores.find(query_id);
    for (const auto& [passage_id, level] : per_query) {
      const RelevanceScore* score = nullptr;
      if (q != scores.end()) {
        auto p = q->second.find(passage_id);
        if (p != q->second.end()) score = &p->second;
      }
      if (!score) {
        ++counts.skipped;
        continue;
      }
      const int predicted = s_pre(score->value, t);
      const int actual = binarize_level(level, policy);
      if (predicted == 1 && actual == 1) ++counts.tp;
      else if (predicted == 1 && actual == 0) ++counts.fp;
      else if (predicted == 0 && actual == 1) ++counts.fn;
      else ++counts.tn;
    }
  }
  return counts;
}

PrecisionRecallF1 prf1(const ConfusionCounts& counts) {
  PrecisionRecallF1 out;
  const double tp = static_cast<double>(counts.tp);
  if (counts.tp + counts.fp > 0) out.precision = tp / static_cast<double>(counts.tp + counts.fp);
  if (counts.tp + counts.fn > 0) out.recall = tp / static_cast<double>(counts.tp + counts.fn);
  if (out.precision + out.recall > 0.0) {
    out.f1 = 2.0 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

namespace {

// Float-keyed visited set; thresholds are quantized to avoid duplicate rows
// from 0.1+0.2-style drift.
long long quantize(double t) { return std::llround(t * 1e9); }

}  // namespace

CalibrationReport select_threshold(const ScoresByQuery& scores, const JudgmentSet& sample,
                                   const RelevancePolicy& policy,
                                   const ThresholdSearch& search) {
  if (sample.empty()) throw Error("threshold selection needs a non-empty sample");
  if (!(search.step > 0.0) || search.step > 1.0) {
    throw Error("search step must lie in (0, 1]");
  }

  std::map<long long, CalibrationRow> evaluated;
  auto evaluate = [&](double value) -> const CalibrationRow& {
    value = std::clamp(value, 0.0, 1.0);
    const long long key = quantize(value);
    auto it = evaluated.find(key);
    if (it == evaluated.end()) {
      CalibrationRow row;
      row.threshold = Threshold{value};
      row.counts = confusion(scores, sample, policy, row.threshold);
      row.prf = prf1(row.counts);
      it = evaluated.emplace(key, std::move(row)).first;
    }
    return it->second;
  };

  CalibrationReport report;
  report.policy_min_relevant_level = policy.min_relevant_level;

  if (search.mode == ThresholdSearch::Mode::grid) {
    report.search_mode = "grid";
    double best_f1 = -1.0;
    double best_t = 0.0;
    for (long long i = 0;; ++i) {
      double t = static_cast<double>(i) * search.step;
      if (t > 1.0 + 1e-12) break;
      t = std::min(t, 1.0);
      const CalibrationRow& row = evaluate(t);
      // Ties break toward the smaller (more inclusive) threshold.
      if (row.prf.f1 > best_f1 + 1e-15) {
        best_f1 = row.prf.f1;
        best_t = row.threshold.value;
      }
      if (t >= 1.0) break;
    }
    if (evaluated.find(quantize(1.0)) == evaluated.end()) {
      const CalibrationRow& row = evaluate(1.0);
      if (row.prf.f1 > best_f1 + 1e-15) {
        best_f1 = row.prf.f1;
        best_t = 1.0;
      }
    }
    report.selected = Threshold{best_t};
  } else {
    report.search_mode = "hill_climb";
    double current = std::clamp(search.start, 0.0, 1.0);
    const CalibrationRow* current_row = &evaluate(current);
    for (int guard = 0; guard < 100000; ++guard) {
      const double lower = std::clamp(current - search.step, 0.0, 1.0);
      const double upper = std::clamp(current + search.step, 0.0, 1.0);
      const CalibrationRow& lower_row = evaluate(lower);
      const CalibrationRow& upper_row = evaluate(upper);
      const double f = current_row->prf.f1;
      const bool lower_better = lower_row.prf.f1 > f + 1e-15;
      const bool upper_better = upper_row.prf.f1 > f + 1e-15;
      if (!lower_better && !upper_better) break;
      // Prefer the strictly better neighbor; on an exact tie between the two,
      // go lower (more inclusive).
      if (lower_better &&
          (!upper_better || lower_row.prf.f1 >= upper_row.prf.f1 - 1e-15)) {
        current = lower;
        current_row = &lower_row;
      } else {
        current = upper;
        current_row = &upper_row;
      }
    }
    report.selected = current_row->threshold;
  }

  report.selected_prf = evaluate(report.selected.value).prf;
  for (const auto& [key, row] : evaluated) {
    (void)key;
    report.rows.push_back(row);
  }
  return report;
}

std::string CalibrationReport::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : rows) {
    rows_json.push_back({{"threshold", row.threshold.value},
                         {"tp", row.counts.tp},
                         {"tn", row.counts.tn},
                         {"fp", row.counts.fp},
                         {"fn", row.counts.fn},
                         {"skipped", row.counts.skipped},
                         {"precision", row.prf.precision},
                         {"recall", row.prf.recall},
                         {"f1", row.prf.f1}});
  }
  nlohmann::json doc = {
      {"search", search_mode},
      {"policy_min_relevant_level", policy_min_relevant_level},
      {"sample_fraction", sample_fraction},
      {"seed", seed},
      {"rows", std::move(rows_json)},
      {"selected",
       {{"threshold", selected.value},
        {"precision", selected_prf.precision},
        {"recall", selected_prf.recall},
        {"f1", selected_prf.f1}}}};
  return doc.dump(2) + "\n";
}

}  // namespace winnow
