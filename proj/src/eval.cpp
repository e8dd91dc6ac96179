#include "gki/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

namespace gki {

using json = nlohmann::json;

std::vector<Embedding> embed(ModelParams& params, const ModelConfig& cfg,
                             const std::vector<PatientGraph>& graphs) {
  const BoundModel model = bind_model(params, cfg.kernel, false);
  std::vector<Embedding> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) {
    const PreparedGraph prepared = prepare_graph(g, cfg);
    const GraphPass pass = forward_graph(prepared, model, cfg.kernel);
    const Matrix& ge = pass.views.graph_euclidean.value();
    const Matrix& gs = pass.views.graph_spherical.value();
    Embedding e;
    e.graph_id = g.graph_id;
    e.vector.resize(ge.cols() + gs.cols());
    e.vector << ge.row(0), gs.row(0);
    if (!e.vector.allFinite()) throw NumericError("non-finite embedding for graph " + g.graph_id);
    e.label = g.label;
    e.disease_tag = g.disease_tag;
    out.push_back(std::move(e));
  }
  return out;
}

void write_embeddings(std::ostream& out, const std::vector<Embedding>& embeddings) {
  for (const auto& e : embeddings) {
    json obj;
    obj["graph_id"] = e.graph_id;
    obj["vector"] = std::vector<double>(e.vector.data(), e.vector.data() + e.vector.size());
    obj["label"] = e.label ? json(*e.label) : json(nullptr);
    obj["disease_tag"] = e.disease_tag ? json(*e.disease_tag) : json(nullptr);
    out << obj.dump() << '\n';
  }
}

std::vector<Embedding> read_embeddings(std::istream& in) {
  std::vector<Embedding> out;
  std::string line;
  int line_no = 0;
  Eigen::Index dim = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json obj = json::parse(line);
      Embedding e;
      e.graph_id = obj.at("graph_id").get<std::string>();
      const auto v = obj.at("vector").get<std::vector<double>>();
      e.vector = Eigen::Map<const RowVector>(v.data(), static_cast<Eigen::Index>(v.size()));
      if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) e.label = it->get<int>();
      if (auto it = obj.find("disease_tag"); it != obj.end() && !it->is_null()) {
        e.disease_tag = it->get<std::string>();
      }
      if (!e.vector.allFinite()) throw DataError("non-finite vector");
      if (dim >= 0 && e.vector.size() != dim) throw DataError("vector length differs from line 1");
      dim = e.vector.size();
      out.push_back(std::move(e));
    } catch (const json::exception& err) {
      throw DataError("embeddings line " + std::to_string(line_no) + ": " + err.what());
    } catch (const DataError& err) {
      throw DataError("embeddings line " + std::to_string(line_no) + ": " + err.what());
    }
  }
  return out;
}

namespace {

double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct LogisticProblem {
  const Matrix& x;  // standardised
  Vector y;
  double lambda;

  double objective(const Vector& w, double b) const {
    const Vector z = (x * w).array() + b;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < z.size(); ++i) loss += log1p_exp(z(i)) - y(i) * z(i);
    return loss / static_cast<double>(z.size()) + 0.5 * lambda * w.squaredNorm();
  }

  void gradient(const Vector& w, double b, Vector& gw, double& gb) const {
    const Vector z = (x * w).array() + b;
    Vector r(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y(i);
    const double n = static_cast<double>(z.size());
    gw = x.transpose() * r / n + lambda * w;
    gb = r.sum() / n;
  }
};

Matrix standardise(const Matrix& x, const RowVector& mean, const RowVector& scale) {
  return (x.rowwise() - mean).array().rowwise() / scale.array();
}

Matrix rows_of(const std::vector<Embedding>& e, const std::vector<std::size_t>& idx) {
  Matrix m(static_cast<Eigen::Index>(idx.size()), e.at(idx.at(0)).vector.size());
  for (std::size_t i = 0; i < idx.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = e[idx[i]].vector;
  return m;
}

}  // namespace

std::vector<double> LogisticModel::predict_proba(const Matrix& x) const {
  if (x.cols() != weights.size()) throw ShapeError("logistic predict: feature dimension mismatch");
  const Vector z = (standardise(x, mean, scale) * weights.transpose()).array() + bias;
  std::vector<double> p(static_cast<std::size_t>(z.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) p[static_cast<std::size_t>(i)] = sigmoid(z(i));
  return p;
}

LogisticModel logistic_regression_fit(const Matrix& x, const std::vector<int>& y, double c,
                                      const LogisticOptions& opt) {
  if (x.rows() != static_cast<Eigen::Index>(y.size())) throw ShapeError("logistic fit: rows vs labels");
  if (!(c > 0.0)) throw DataError("logistic fit: C must be > 0");
  const bool has0 = std::count(y.begin(), y.end(), 0) > 0;
  const bool has1 = std::count(y.begin(), y.end(), 1) > 0;
  if (!has0 || !has1) throw DataError("logistic fit: training labels contain a single class");

  LogisticModel model;
  model.mean = x.colwise().mean();
  model.scale = ((x.rowwise() - model.mean).array().square().colwise().mean()).sqrt();
  for (Eigen::Index j = 0; j < model.scale.size(); ++j) {
    if (!(model.scale(j) > 1e-12)) model.scale(j) = 1.0;
  }
  const Matrix xs = standardise(x, model.mean, model.scale);
  Vector yv(x.rows());
  for (std::size_t i = 0; i < y.size(); ++i) yv(static_cast<Eigen::Index>(i)) = y[i];
  const LogisticProblem prob{xs, yv, 1.0 / (c * static_cast<double>(x.rows()))};

  Vector w = Vector::Zero(x.cols());
  double b = 0.0;
  double f = prob.objective(w, b);
  double step = 1.0;
  Vector gw;
  double gb = 0.0;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    prob.gradient(w, b, gw, gb);
    const double gnorm2 = gw.squaredNorm() + gb * gb;
    if (std::sqrt(gnorm2) < opt.tol) break;
    step = std::min(step * 2.0, 1e6);
    double f_new = 0.0;
    Vector w_new;
    double b_new = 0.0;
    for (int k = 0; k < 60; ++k) {
      w_new = w - step * gw;
      b_new = b - step * gb;
      f_new = prob.objective(w_new, b_new);
      if (f_new <= f - 0.5 * step * gnorm2) break;
      step *= 0.5;
    }
    w = std::move(w_new);
    b = b_new;
    const double decrease = f - f_new;
    f = f_new;
    if (decrease <= opt.tol * std::max(1.0, std::abs(f))) {
      ++it;
      break;
    }
  }
  model.weights = w.transpose();
  model.bias = b;
  model.iterations = it;
  return model;
}

std::vector<double> logistic_regression_predict(const LogisticModel& model, const Matrix& x) {
  return model.predict_proba(x);
}

std::vector<double> c_grid() {
  std::vector<double> out;
  for (int e = -4; e <= 4; ++e) out.push_back(std::pow(50.0, e));
  return out;
}

std::vector<std::string> knn_search(const Embedding& query, const std::vector<Embedding>& corpus,
                                    int k) {
  if (k < 0) throw DataError("knn_search: k must be >= 0");
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(corpus.size());
  for (const auto& e : corpus) {
    if (e.graph_id == query.graph_id) continue;
    if (e.vector.size() != query.vector.size()) throw ShapeError("knn_search: dimension mismatch");
    scored.emplace_back(e.vector.dot(query.vector), &e.graph_id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return *a.second < *b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i) out.push_back(*scored[i].second);
  return out;
}

double metric_auroc(const std::vector<double>& scores, const std::vector<int>& truth) {
  if (scores.size() != truth.size() || scores.empty()) throw DataError("auroc: size mismatch or empty");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::vector<double> rank(scores.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
    i = j + 1;
  }
  double pos = 0.0, neg = 0.0, rank_sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == 1) {
      pos += 1.0;
      rank_sum += rank[i];
    } else {
      neg += 1.0;
    }
  }
  if (pos == 0.0 || neg == 0.0) throw DataError("auroc: needs both classes");
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double metric_f1_macro(const std::vector<int>& predicted, const std::vector<int>& truth,
                       int num_classes) {
  if (predicted.size() != truth.size() || truth.empty()) throw DataError("f1: size mismatch or empty");
  double total = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predicted[i] == c, t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double denom = 2 * tp + fp + fn;
    total += denom > 0 ? 2 * tp / denom : 0.0;
  }
  return total / num_classes;
}

double metric_precision_at_k(const std::vector<std::string>& query_tags,
                             const std::vector<std::vector<std::string>>& retrieved_tags, int k) {
  if (query_tags.empty() || query_tags.size() != retrieved_tags.size()) {
    throw DataError("precision@k: size mismatch or empty");
  }
  if (k < 1) throw DataError("precision@k: k must be >= 1");
  double total = 0.0;
  for (std::size_t q = 0; q < query_tags.size(); ++q) {
    const auto& r = retrieved_tags[q];
    const std::size_t top = std::min<std::size_t>(r.size(), static_cast<std::size_t>(k));
    if (top == 0) continue;
    double hit = 0.0;
    for (std::size_t i = 0; i < top; ++i) hit += r[i] == query_tags[q];
    total += hit / static_cast<double>(top);
  }
  return total / static_cast<double>(query_tags.size());
}

EvalTask parse_eval_task(const std::string& s) {
  if (s == "classify") return EvalTask::classify;
  if (s == "similarity") return EvalTask::similarity;
  throw DataError("unknown eval task '" + s + "'");
}

std::string to_string(EvalTask t) { return t == EvalTask::classify ? "classify" : "similarity"; }

std::vector<int> stratified_folds(const std::vector<std::string>& strata, int folds, Rng& rng) {
  if (folds < 2) throw DataError("folds must be >= 2");
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);
  if (groups.size() < 2) throw DataError("cannot stratify: fewer than 2 classes present");
  for (const auto& [name, members] : groups) {
    if (static_cast<int>(members.size()) < folds) {
      throw DataError("class '" + name + "' has " + std::to_string(members.size()) +
                      " samples; at least " + std::to_string(folds) + " per class are required");
    }
  }
  std::vector<int> fold(strata.size(), -1);
  std::size_t running = 0;
  for (auto& [name, members] : groups) {
    rng.shuffle(members);
    for (std::size_t m : members) fold[m] = static_cast<int>(running++ % static_cast<std::size_t>(folds));
  }
  return fold;
}

namespace {

std::vector<int> labels_of(const std::vector<Embedding>& e, const std::vector<std::size_t>& idx) {
  std::vector<int> out;
  for (std::size_t i : idx) out.push_back(*e[i].label);
  return out;
}

double auroc_for_c(const std::vector<Embedding>& e, const std::vector<std::size_t>& train,
                   double c, const std::vector<int>& inner_fold, int inner_folds,
                   const LogisticOptions& solver) {
  double sum = 0.0;
  int used = 0;
  for (int f = 0; f < inner_folds; ++f) {
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < train.size(); ++i) (inner_fold[i] == f ? te : tr).push_back(train[i]);
    const auto ytr = labels_of(e, tr);
    const auto yte = labels_of(e, te);
    const auto model = logistic_regression_fit(rows_of(e, tr), ytr, c, solver);
    sum += metric_auroc(model.predict_proba(rows_of(e, te)), yte);
    ++used;
  }
  return sum / used;
}

void classify_fold(const std::vector<Embedding>& e, const std::vector<std::size_t>& train,
                   const std::vector<std::size_t>& test, const CvOptions& opt, Rng inner_rng,
                   FoldRecord& rec) {
  const auto ytr = labels_of(e, train);
  const auto yte = labels_of(e, test);
  if (std::count(ytr.begin(), ytr.end(), 1) == 0 || std::count(ytr.begin(), ytr.end(), 0) == 0) {
    rec.skipped = true;
    rec.reason = "single-class training fold";
    return;
  }
  if (std::count(yte.begin(), yte.end(), 1) == 0 || std::count(yte.begin(), yte.end(), 0) == 0) {
    rec.skipped = true;
    rec.reason = "single-class test fold";
    return;
  }
  std::vector<std::string> strata;
  for (int y : ytr) strata.push_back(std::to_string(y));
  const auto inner = stratified_folds(strata, opt.inner_folds, inner_rng);
  double best_c = 0.0, best = -1.0;
  for (double c : c_grid()) {
    const double a = auroc_for_c(e, train, c, inner, opt.inner_folds, opt.solver);
    if (a > best) {
      best = a;
      best_c = c;
    }
  }
  const auto model = logistic_regression_fit(rows_of(e, train), ytr, best_c, opt.solver);
  const auto p = model.predict_proba(rows_of(e, test));
  std::vector<int> pred;
  for (double v : p) pred.push_back(v >= 0.5 ? 1 : 0);
  rec.c = best_c;
  rec.auroc = metric_auroc(p, yte);
  rec.f1_macro = metric_f1_macro(pred, yte, 2);
}

void similarity_fold(const std::vector<Embedding>& e, const std::vector<std::size_t>& train,
                     const std::vector<std::size_t>& test, FoldRecord& rec) {
  std::vector<Embedding> corpus;
  for (std::size_t i : train) corpus.push_back(e[i]);
  std::map<std::string, const Embedding*> by_id;
  for (const auto& c : corpus) by_id[c.graph_id] = &c;
  std::vector<std::string> tags;
  std::vector<std::vector<std::string>> top1, top10;
  for (std::size_t q : test) {
    tags.push_back(*e[q].disease_tag);
    const auto ids = knn_search(e[q], corpus, 10);
    std::vector<std::string> t;
    for (const auto& id : ids) t.push_back(*by_id.at(id)->disease_tag);
    top10.push_back(t);
    top1.push_back(std::vector<std::string>(t.begin(), t.begin() + std::min<std::size_t>(1, t.size())));
  }
  rec.precision_at_1 = metric_precision_at_k(tags, top1, 1);
  rec.precision_at_10 = metric_precision_at_k(tags, top10, 10);
}

std::string num(const std::optional<double>& v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

const std::optional<double>& metric_field(const FoldRecord& r, const std::string& metric) {
  if (metric == "auroc") return r.auroc;
  if (metric == "f1_macro") return r.f1_macro;
  if (metric == "precision_at_1") return r.precision_at_1;
  if (metric == "precision_at_10") return r.precision_at_10;
  throw DataError("unknown metric '" + metric + "'");
}

const char* kMetrics[] = {"auroc", "f1_macro", "precision_at_1", "precision_at_10"};

}  // namespace

EvalReport repeated_cv(const std::vector<Embedding>& embeddings, EvalTask task,
                       const CvOptions& opt) {
  if (opt.repeats < 1) throw DataError("repeats must be >= 1");
  if (embeddings.empty()) throw DataError("repeated_cv: no embeddings");
  std::vector<std::string> strata;
  for (const auto& e : embeddings) {
    if (task == EvalTask::classify) {
      if (!e.label) throw DataError("graph " + e.graph_id + " has no label");
      if (*e.label != 0 && *e.label != 1) throw DataError("graph " + e.graph_id + " label is not binary");
      strata.push_back(std::to_string(*e.label));
    } else {
      if (!e.disease_tag) throw DataError("graph " + e.graph_id + " has no disease_tag");
      strata.push_back(*e.disease_tag);
    }
  }

  EvalReport report;
  report.task = to_string(task);
  report.repeats = opt.repeats;
  report.folds = opt.folds;
  report.seed = opt.seed;
  const Rng master(opt.seed);
  for (int r = 0; r < opt.repeats; ++r) {
    Rng rng = master.stream("cv", static_cast<std::uint64_t>(r));
    const auto fold = stratified_folds(strata, opt.folds, rng);
    for (int f = 0; f < opt.folds; ++f) {
      std::vector<std::size_t> train, test;
      for (std::size_t i = 0; i < embeddings.size(); ++i) (fold[i] == f ? test : train).push_back(i);
      FoldRecord rec;
      rec.repeat = r;
      rec.fold = f;
      if (task == EvalTask::classify) {
        try {
          classify_fold(embeddings, train, test, opt,
                        master.stream("inner", static_cast<std::uint64_t>(r * opt.folds + f)), rec);
        } catch (const DataError& err) {
          rec.skipped = true;
          rec.reason = err.what();
        }
      } else {
        similarity_fold(embeddings, train, test, rec);
      }
      report.records.push_back(rec);
    }
  }
  return report;
}

std::optional<MetricSummary> EvalReport::summary(const std::string& metric) const {
  std::vector<double> v;
  for (const auto& r : records) {
    if (r.skipped) continue;
    if (const auto& m = metric_field(r, metric)) v.push_back(*m);
  }
  if (v.empty()) return std::nullopt;
  MetricSummary s;
  s.count = static_cast<int>(v.size());
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / s.count;
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / s.count);
  return s;
}

int EvalReport::skipped() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const FoldRecord& r) { return r.skipped; }));
}

json EvalReport::to_json() const {
  auto opt_num = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["task"] = task;
  j["repeats"] = repeats;
  j["folds"] = folds;
  j["seed"] = seed;
  j["skipped_folds"] = skipped();
  json summ = json::object();
  for (const char* m : kMetrics) {
    if (auto s = summary(m)) summ[m] = {{"mean", s->mean}, {"std", s->std}, {"count", s->count}};
  }
  j["summary"] = summ;
  json recs = json::array();
  for (const auto& r : records) {
    json o;
    o["repeat"] = r.repeat;
    o["fold"] = r.fold;
    o["skipped"] = r.skipped;
    if (r.skipped) o["reason"] = r.reason;
    o["auroc"] = opt_num(r.auroc);
    o["f1_macro"] = opt_num(r.f1_macro);
    o["precision_at_1"] = opt_num(r.precision_at_1);
    o["precision_at_10"] = opt_num(r.precision_at_10);
    o["C"] = opt_num(r.c);
    recs.push_back(o);
  }
  j["records"] = recs;
  return j;
}

void EvalReport::write_csv(std::ostream& out) const {
  out << "repeat,fold,status,auroc,f1_macro,precision_at_1,precision_at_10,C\n";
  for (const auto& r : records) {
    out << r.repeat << ',' << r.fold << ',' << (r.skipped ? "skipped" : "ok") << ','
        << num(r.auroc) << ',' << num(r.f1_macro) << ',' << num(r.precision_at_1) << ','
        << num(r.precision_at_10) << ',' << num(r.c) << '\n';
  }
  for (const char* stat : {"mean", "std"}) {
    out << stat << ",,summary";
    for (const char* m : kMetrics) {
      const auto s = summary(m);
      out << ',' << (s ? num(std::string(stat) == "mean" ? s->mean : s->std) : "");
    }
    out << ",\n";
  }
}

}  // namespace gki
