#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gki/model.hpp"

namespace gki {

/// Frozen graph representation: [Φ_E, Φ_S], length 2·K·L.
struct Embedding {
  std::string graph_id;
  RowVector vector;
  std::optional<int> label;
  std::optional<std::string> disease_tag;
};

/// Encoder forward and both graph maps per graph. Heads are not used.
std::vector<Embedding> embed(ModelParams& params, const ModelConfig& cfg,
                             const std::vector<PatientGraph>& graphs);

void write_embeddings(std::ostream& out, const std::vector<Embedding>& embeddings);
std::vector<Embedding> read_embeddings(std::istream& in);

/// L2-regularised logistic regression on standardised features.
/// Objective: mean log-loss + ||w||² / (2·C·n).
struct LogisticModel {
  RowVector mean;
  RowVector scale;
  RowVector weights;
  double bias = 0.0;
  int iterations = 0;

  std::vector<double> predict_proba(const Matrix& x) const;
};

struct LogisticOptions {
  int max_iter = 500;
  double tol = 1e-8;
};

/// Throws DataError unless both classes occur in `y`.
LogisticModel logistic_regression_fit(const Matrix& x, const std::vector<int>& y, double c,
                                      const LogisticOptions& opt = {});
std::vector<double> logistic_regression_predict(const LogisticModel& model, const Matrix& x);

/// Regularisation grid 50^-4 ... 50^4.
std::vector<double> c_grid();

/// Top-k corpus ids by inner product with the query (the query's own id is
/// skipped). Ties go to the smaller id.
std::vector<std::string> knn_search(const Embedding& query, const std::vector<Embedding>& corpus,
                                    int k);

/// Rank statistic with midranks for ties. Throws DataError with one class.
double metric_auroc(const std::vector<double>& scores, const std::vector<int>& truth);
/// Unweighted mean of per-class F1 over classes 0..num_classes-1.
double metric_f1_macro(const std::vector<int>& predicted, const std::vector<int>& truth,
                       int num_classes = 2);
/// Mean over queries of the fraction of the first k retrieved tags equal to the query tag.
double metric_precision_at_k(const std::vector<std::string>& query_tags,
                             const std::vector<std::vector<std::string>>& retrieved_tags, int k);

enum class EvalTask { classify, similarity };

EvalTask parse_eval_task(const std::string& s);
std::string to_string(EvalTask t);

struct FoldRecord {
  int repeat = 0;
  int fold = 0;
  bool skipped = false;
  std::string reason;
  std::optional<double> auroc;
  std::optional<double> f1_macro;
  std::optional<double> precision_at_1;
  std::optional<double> precision_at_10;
  std::optional<double> c;
};

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;
  int count = 0;
};

struct EvalReport {
  std::string task;
  int repeats = 0;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<FoldRecord> records;

  std::optional<MetricSummary> summary(const std::string& metric) const;
  int skipped() const;
  nlohmann::json to_json() const;
  void write_csv(std::ostream& out) const;
};

struct CvOptions {
  int repeats = 5;
  int folds = 10;
  std::uint64_t seed = 1;
  int inner_folds = 3;
  LogisticOptions solver;
};

/// Stratified repeated k-fold. Classification stratifies on label and picks C
/// by inner-fold AUROC; similarity stratifies on disease_tag and queries each
/// held-out member against the training part.
EvalReport repeated_cv(const std::vector<Embedding>& embeddings, EvalTask task,
                       const CvOptions& opt = {});

/// Stratified fold index per sample. Throws DataError when a class has fewer
/// than `folds` members or fewer than two classes exist.
std::vector<int> stratified_folds(const std::vector<std::string>& strata, int folds, Rng& rng);

}  // namespace gki
