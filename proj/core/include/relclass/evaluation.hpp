#pragma once

#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "relclass/data_io.hpp"

namespace relclass {

struct ClassMetrics {
  std::string name;
  int gold_count = 0;
  int pred_count = 0;
  int correct = 0;
  double p = 0, r = 0, f1 = 0;
};

struct EvalReport {
  std::string metric_name;  // "semeval_macro_f1" | "micro_f1"
  double aggregate = 0;     // the headline metric
  double accuracy = 0;      // exact-label accuracy over all instances
  int total = 0;
  std::vector<ClassMetrics> classes;
  std::vector<std::string> confusion_labels;
  std::vector<std::vector<int>> confusion;  // [gold][pred]

  nlohmann::json to_json() const;
  std::string to_table() const;
};

// Official scorer semantics: a directed label is correct only with the
// correct direction; each of the 9 families gets P/R/F1 over the union of
// its two directions; the headline macro-F1 averages the 9 families with
// Other excluded (Other still appears as a row and in the confusion).
EvalReport semeval_macro_f1(std::span<const std::string> gold,
                            std::span<const std::string> pred);

// Micro P/R/F1 of one positive label over a binary schema.
EvalReport micro_prf(std::span<const std::string> gold,
                     std::span<const std::string> pred,
                     const std::string& positive_label);

// Dev/headline metric for a task: semeval -> macro-F1, bb3 -> Lives_In F1.
EvalReport evaluate(const LabelSchema& schema,
                    std::span<const std::string> gold,
                    std::span<const std::string> pred);

}  // namespace relclass
