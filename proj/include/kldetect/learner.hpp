#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kldetect/error.hpp"
#include "kldetect/flow_table.hpp"

namespace kldetect {

using json = nlohmann::json;

/// Uniform interface satisfied by the seven base models and the three
/// ensembles. predict() is derived from predict_proba() with the 0.5 tie
/// going to class 0; voting overrides it with the hard-majority rule.
class Learner {
 public:
  virtual ~Learner() = default;

  virtual double predict_proba_row(std::span<const double> x) const = 0;

  virtual int predict_row(std::span<const double> x) const {
    return predict_proba_row(x) > 0.5 ? 1 : 0;
  }

  virtual std::string kind() const = 0;
  virtual size_t n_features() const = 0;
  virtual json save_state() const = 0;

  // non-fatal training diagnostics (non-convergence, subsampling, ...)
  virtual std::vector<std::string> warnings() const { return {}; }
  virtual bool converged() const { return true; }

  std::vector<double> predict_proba(const FlowTable& table) const {
    check_width(table.n_features());
    std::vector<double> out(table.n_rows());
    for (size_t r = 0; r < table.n_rows(); ++r) out[r] = predict_proba_row(table.row(r));
    return out;
  }

  std::vector<int> predict(const FlowTable& table) const {
    check_width(table.n_features());
    std::vector<int> out(table.n_rows());
    for (size_t r = 0; r < table.n_rows(); ++r) out[r] = predict_row(table.row(r));
    return out;
  }

 protected:
  void check_width(size_t width) const {
    require(width == n_features(), ErrorCode::DimensionMismatch,
            kind() + " expects " + std::to_string(n_features()) + " features, got " +
                std::to_string(width));
  }
};

using LearnerPtr = std::unique_ptr<Learner>;

inline double training_accuracy(const Learner& model, const FlowTable& table) {
  auto preds = model.predict(table);
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == table.labels()[i]) ++correct;
  }
  return double(correct) / double(preds.size());
}

}  // namespace kldetect
