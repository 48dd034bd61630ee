#include "relclass/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "relclass/errors.hpp"

namespace relclass {

using nlohmann::json;

namespace {

double ratio(int num, int den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / den;
}

double f1_of(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

// Family name of a directed label; "Other" maps to itself.
std::string family_of(const std::string& label) {
  const std::size_t paren = label.find('(');
  return paren == std::string::npos ? label : label.substr(0, paren);
}

void check_labels(const LabelSchema& schema, std::span<const std::string> gold,
                  std::span<const std::string> pred) {
  if (gold.size() != pred.size()) {
    throw DataError("gold/pred length mismatch: " + std::to_string(gold.size()) +
                    " vs " + std::to_string(pred.size()));
  }
  for (const std::string& l : gold) schema.index_of(l);
  for (const std::string& l : pred) schema.index_of(l);
}

void fill_confusion(EvalReport& rep, const LabelSchema& schema,
                    std::span<const std::string> gold,
                    std::span<const std::string> pred) {
  const int k = static_cast<int>(schema.labels.size());
  rep.confusion_labels = schema.labels;
  rep.confusion.assign(static_cast<std::size_t>(k),
                       std::vector<int>(static_cast<std::size_t>(k), 0));
  int exact = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const int g = schema.index_of(gold[i]);
    const int p = schema.index_of(pred[i]);
    ++rep.confusion[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)];
    if (g == p) ++exact;
  }
  rep.total = static_cast<int>(gold.size());
  rep.accuracy = ratio(exact, rep.total);
}

}  // namespace

EvalReport semeval_macro_f1(std::span<const std::string> gold,
                            std::span<const std::string> pred) {
  const LabelSchema schema = LabelSchema::semeval();
  check_labels(schema, gold, pred);

  EvalReport rep;
  rep.metric_name = "semeval_macro_f1";
  fill_confusion(rep, schema, gold, pred);

  // Families in schema order; Other handled as its own exact-match row.
  std::vector<std::string> families;
  for (const std::string& l : schema.labels) {
    const std::string f = family_of(l);
    if (f != "Other" && (families.empty() || families.back() != f)) {
      families.push_back(f);
    }
  }

  // A family joins the macro average only when it occurs in gold or pred;
  // absent families keep their zero row but would otherwise dilute small
  // fixtures (perfect prediction must score 1 on any fixture). Full-corpus
  // scoring is unaffected because every family occurs there.
  double f1_sum = 0.0;
  int present = 0;
  for (const std::string& fam : families) {
    ClassMetrics m;
    m.name = fam;
    for (std::size_t i = 0; i < gold.size(); ++i) {
      const bool g = family_of(gold[i]) == fam;
      const bool p = family_of(pred[i]) == fam;
      if (g) ++m.gold_count;
      if (p) ++m.pred_count;
      // Direction counts: credit only the fully matching directed label.
      if (g && p && gold[i] == pred[i]) ++m.correct;
    }
    m.p = ratio(m.correct, m.pred_count);
    m.r = ratio(m.correct, m.gold_count);
    m.f1 = f1_of(m.p, m.r);
    if (m.gold_count + m.pred_count > 0) {
      f1_sum += m.f1;
      ++present;
    }
    rep.classes.push_back(std::move(m));
  }
  rep.aggregate = present == 0 ? 0.0 : f1_sum / present;

  ClassMetrics other;
  other.name = "Other";
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == "Other";
    const bool p = pred[i] == "Other";
    if (g) ++other.gold_count;
    if (p) ++other.pred_count;
    if (g && p) ++other.correct;
  }
  other.p = ratio(other.correct, other.pred_count);
  other.r = ratio(other.correct, other.gold_count);
  other.f1 = f1_of(other.p, other.r);
  rep.classes.push_back(std::move(other));
  return rep;
}

EvalReport micro_prf(std::span<const std::string> gold,
                     std::span<const std::string> pred,
                     const std::string& positive_label) {
  if (gold.size() != pred.size()) {
    throw DataError("gold/pred length mismatch: " + std::to_string(gold.size()) +
                    " vs " + std::to_string(pred.size()));
  }
  // Label universe: positive first, then the rest in first-seen order.
  LabelSchema schema;
  schema.task = "binary";
  schema.labels = {positive_label};
  for (std::span<const std::string> seq : {gold, pred}) {
    for (const std::string& l : seq) {
      if (!schema.contains(l)) schema.labels.push_back(l);
    }
  }

  EvalReport rep;
  rep.metric_name = "micro_f1";
  fill_confusion(rep, schema, gold, pred);

  ClassMetrics m;
  m.name = positive_label;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool g = gold[i] == positive_label;
    const bool p = pred[i] == positive_label;
    if (g) ++m.gold_count;
    if (p) ++m.pred_count;
    if (g && p) ++m.correct;
  }
  m.p = ratio(m.correct, m.pred_count);
  m.r = ratio(m.correct, m.gold_count);
  m.f1 = f1_of(m.p, m.r);
  rep.aggregate = m.f1;
  rep.classes.push_back(std::move(m));
  return rep;
}

EvalReport evaluate(const LabelSchema& schema,
                    std::span<const std::string> gold,
                    std::span<const std::string> pred) {
  if (schema.task == "semeval") {
    return semeval_macro_f1(gold, pred);
  }
  if (schema.task == "bb3") {
    check_labels(schema, gold, pred);
    return micro_prf(gold, pred, "Lives_In");
  }
  throw ConfigError("unknown task '" + schema.task + "'");
}

json EvalReport::to_json() const {
  json classes_j = json::array();
  for (const ClassMetrics& m : classes) {
    classes_j.push_back({{"name", m.name},
                         {"gold", m.gold_count},
                         {"pred", m.pred_count},
                         {"correct", m.correct},
                         {"precision", m.p},
                         {"recall", m.r},
                         {"f1", m.f1}});
  }
  return json{{"metric", metric_name},
              {"aggregate", aggregate},
              {"accuracy", accuracy},
              {"total", total},
              {"classes", std::move(classes_j)},
              {"confusion_labels", confusion_labels},
              {"confusion", confusion}};
}

std::string EvalReport::to_table() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  std::size_t w = 10;
  for (const ClassMetrics& m : classes) w = std::max(w, m.name.size());
  os << std::left << std::setw(static_cast<int>(w + 2)) << "class"
     << std::right << std::setw(8) << "P" << std::setw(8) << "R"
     << std::setw(8) << "F1" << std::setw(7) << "gold" << std::setw(7)
     << "pred" << "\n";
  for (const ClassMetrics& m : classes) {
    os << std::left << std::setw(static_cast<int>(w + 2)) << m.name
       << std::right << std::setw(8) << m.p << std::setw(8) << m.r
       << std::setw(8) << m.f1 << std::setw(7) << m.gold_count << std::setw(7)
       << m.pred_count << "\n";
  }
  os << std::left << std::setw(static_cast<int>(w + 2)) << metric_name
     << std::right << std::setw(8) << aggregate << "\n";
  os << std::left << std::setw(static_cast<int>(w + 2)) << "accuracy"
     << std::right << std::setw(8) << accuracy << "  (" << total
     << " instances)\n";
  return os.str();
}

}  // namespace relclass
