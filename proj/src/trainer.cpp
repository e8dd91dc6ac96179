#include "gki/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace gki {

using json = nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 0) throw DataError("epochs must be >= 0");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw DataError("lr must be > 0");
  loss_config().validate();
  model_config(1).validate();
}

ModelConfig TrainConfig::model_config(int input_dim) const {
  ModelConfig m;
  m.input_dim = input_dim;
  m.hidden = hidden;
  m.layers = layers;
  m.clusters = clusters;
  m.head_hidden = head_hidden;
  m.head_out = head_out;
  m.adjacency = adjacency;
  m.transform = edge_transform;
  m.kernel.pinv_mode = pinv_mode;
  m.kernel.radius = sphere_radius;
  m.kernel.clamp_eps = clamp_eps;
  return m;
}

LossConfig TrainConfig::loss_config() const {
  LossConfig l;
  l.temperature = temperature;
  l.negatives = negatives;
  return l;
}

json TrainConfig::to_json() const {
  return json{{"seed", seed},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"lr", lr},
              {"layers", layers},
              {"hidden", hidden},
              {"clusters", clusters},
              {"head_hidden", head_hidden},
              {"head_out", head_out},
              {"temperature", temperature},
              {"pinv_mode", to_string(pinv_mode)},
              {"negatives_mode", to_string(negatives)},
              {"edge_transform", to_string(edge_transform)},
              {"adjacency", to_string(adjacency)},
              {"sphere_radius", sphere_radius},
              {"clamp_eps", clamp_eps},
              {"checkpoint", checkpoint_path},
              {"log", log_path}};
}

TrainConfig TrainConfig::from_json(const json& j) { return from_json(j, TrainConfig{}); }

TrainConfig TrainConfig::from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw DataError("config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "lr") c.lr = v.get<double>();
      else if (key == "layers") c.layers = v.get<int>();
      else if (key == "hidden") c.hidden = v.get<int>();
      else if (key == "clusters") c.clusters = v.get<int>();
      else if (key == "head_hidden") c.head_hidden = v.get<int>();
      else if (key == "head_out") c.head_out = v.get<int>();
      else if (key == "temperature") c.temperature = v.get<double>();
      else if (key == "pinv_mode") c.pinv_mode = parse_pinv_mode(v.get<std::string>());
      else if (key == "negatives_mode") c.negatives = parse_negatives_mode(v.get<std::string>());
      else if (key == "edge_transform") c.edge_transform = parse_edge_transform(v.get<std::string>());
      else if (key == "adjacency") c.adjacency = parse_adjacency_mode(v.get<std::string>());
      else if (key == "sphere_radius") c.sphere_radius = v.get<double>();
      else if (key == "clamp_eps") c.clamp_eps = v.get<double>();
      else if (key == "checkpoint") c.checkpoint_path = v.get<std::string>();
      else if (key == "log") c.log_path = v.get<std::string>();
      else throw DataError("unknown config key '" + key + "'");
    } catch (const json::exception& e) {
      throw DataError("config key '" + key + "': " + e.what());
    }
  }
  return c;
}

void TrainLog::write_csv(std::ostream& out) const {
  out << "epoch,L,L_NG,L_GG,L_rec,seconds\n";
  char buf[256];
  for (const auto& r : epochs) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.6f\n", r.epoch, r.total,
                  r.node_graph, r.graph_graph, r.rec, r.seconds);
    out << buf;
  }
}

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

// Loss for one set of graphs differentiated together; returns summed components.
EpochRecord run_tape(ModelParams& params, const std::vector<const PreparedGraph*>& graphs,
                     const ModelConfig& mc, const LossConfig& lc) {
  const BoundModel model = bind_model(params, mc.kernel, true);
  std::vector<GraphPass> passes;
  std::vector<ProjectedViews> projected;
  passes.reserve(graphs.size());
  for (const PreparedGraph* g : graphs) {
    passes.push_back(forward_graph(*g, model, mc.kernel));
    projected.push_back(project(passes.back().views, model.node_head, model.graph_head));
  }
  const BatchContext ctx = make_batch_context(projected);

  ad::Var ng, rec;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    const ad::Var term = node_graph_loss(projected[i], i, ctx, lc);
    ng = ng ? ad::add(ng, term) : term;
    rec = rec ? ad::add(rec, passes[i].rec) : passes[i].rec;
  }
  const ad::Var gg = graph_graph_loss(ctx, lc);
  const LossBreakdown loss = total_loss(ng, gg, rec, lc);
  ad::backward(loss.total);

  EpochRecord r;
  r.total = loss.total.scalar();
  r.node_graph = loss.node_graph;
  r.graph_graph = loss.graph_graph;
  r.rec = loss.rec;
  return r;
}

void write_epoch_checkpoint(const TrainState& state, const TrainConfig& cfg, int input_dim) {
  if (cfg.checkpoint_path.empty()) return;
  namespace fs = std::filesystem;
  std::error_code ec;
  const fs::path path(cfg.checkpoint_path);
  if (fs::exists(path)) {
    fs::rename(path, fs::path(cfg.checkpoint_path + ".prev"), ec);
    if (ec) throw DataError("cannot rotate checkpoint " + cfg.checkpoint_path + ": " + ec.message());
  }
  write_checkpoint(cfg.checkpoint_path, make_checkpoint(state, cfg, input_dim));
}

void run_epochs(TrainState& state, const std::vector<PreparedGraph>& prepared,
                const TrainConfig& cfg, int n_epochs, int input_dim) {
  const Rng master(cfg.seed);
  const double n_graphs = static_cast<double>(prepared.size());
  for (int e = 0; e < n_epochs; ++e) {
    const int epoch = state.epochs_completed + 1;
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(prepared.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = master.stream("batching", static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    EpochRecord sums;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const PreparedGraph*> batch;
      for (std::size_t k = start; k < end; ++k) batch.push_back(&prepared[order[k]]);

      EpochRecord r;
      try {
        r = train_step(state, batch, cfg);
      } catch (const NumericError& err) {
        throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index) + ": " + err.what());
      }
      sums.total += r.total;
      sums.node_graph += r.node_graph;
      sums.graph_graph += r.graph_graph;
      sums.rec += r.rec;
      ++batch_index;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.total = sums.total / n_graphs;
    rec.node_graph = sums.node_graph / n_graphs;
    rec.graph_graph = sums.graph_graph / n_graphs;
    rec.rec = sums.rec / n_graphs;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    state.log.epochs.push_back(rec);
    state.epochs_completed = epoch;
    write_epoch_checkpoint(state, cfg, input_dim);
  }
  if (!cfg.log_path.empty()) {
    std::ofstream out(cfg.log_path);
    if (!out) throw DataError("cannot write training log: " + cfg.log_path);
    state.log.write_csv(out);
  }
}

int dataset_input_dim(const std::vector<PatientGraph>& graphs) {
  if (graphs.empty()) throw DataError("pretrain: dataset is empty");
  const int d = graphs.front().feature_dim;
  for (const auto& g : graphs) {
    if (g.feature_dim != d) throw DataError("pretrain: graphs disagree on vocabulary size");
  }
  return d;
}

std::vector<PreparedGraph> prepare_all(const std::vector<PatientGraph>& graphs,
                                       const ModelConfig& mc) {
  std::vector<PreparedGraph> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(prepare_graph(g, mc));
  return out;
}

}  // namespace

EpochRecord train_step(TrainState& state, const std::vector<const PreparedGraph*>& batch,
                       const TrainConfig& cfg) {
  if (batch.empty()) throw DataError("train_step: empty batch");
  const ModelConfig mc = cfg.model_config(batch.front()->graph->feature_dim);
  const LossConfig lc = cfg.loss_config();
  state.params.zero_grad();
  EpochRecord r;
  if (cfg.negatives == NegativesMode::self_only) {
    // one tape per graph, released before the next one is built
    for (const PreparedGraph* g : batch) {
      const EpochRecord one = run_tape(state.params, {g}, mc, lc);
      r.total += one.total;
      r.node_graph += one.node_graph;
      r.graph_graph += one.graph_graph;
      r.rec += one.rec;
    }
  } else {
    r = run_tape(state.params, batch, mc, lc);
  }
  check_finite(r.total, "total loss");
  const auto params = state.params.all();
  adam_step(params, state.adam, AdamConfig{cfg.lr});
  return r;
}

TrainState pretrain(const std::vector<PatientGraph>& graphs, const TrainConfig& cfg) {
  cfg.validate();
  const int input_dim = dataset_input_dim(graphs);
  const ModelConfig mc = cfg.model_config(input_dim);
  TrainState state;
  state.params = ModelParams::init(mc, cfg.seed);
  state.adam.reset(state.params.all());
  const auto prepared = prepare_all(graphs, mc);
  run_epochs(state, prepared, cfg, cfg.epochs, input_dim);
  return state;
}

TrainState resume(const std::string& checkpoint_path, const std::vector<PatientGraph>& graphs,
                  const TrainConfig& cfg) {
  cfg.validate();
  const int input_dim = dataset_input_dim(graphs);
  TrainState state = restore_checkpoint(read_checkpoint(checkpoint_path), cfg, input_dim);
  const auto prepared = prepare_all(graphs, cfg.model_config(input_dim));
  run_epochs(state, prepared, cfg, cfg.epochs, input_dim);
  return state;
}

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg, int input_dim) {
  Checkpoint ckpt;
  ckpt.meta["format"] = "GKI1";
  ckpt.meta["seed"] = cfg.seed;
  ckpt.meta["step"] = state.adam.step;
  ckpt.meta["epoch"] = state.epochs_completed;
  ckpt.meta["input_dim"] = input_dim;
  ckpt.meta["config"] = cfg.to_json();
  const auto params = state.params.all();
  for (const Param* p : params) ckpt.arrays.push_back({p->name, p->value});
  if (state.adam.m.size() == params.size()) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      ckpt.arrays.push_back({"adam.m/" + params[i]->name, state.adam.m[i]});
      ckpt.arrays.push_back({"adam.v/" + params[i]->name, state.adam.v[i]});
    }
  }
  return ckpt;
}

TrainState restore_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg, int input_dim) {
  TrainState state;
  state.params = ModelParams::init(cfg.model_config(input_dim), cfg.seed);
  auto params = state.params.all();

  std::vector<std::string> problems;
  if (ckpt.meta.value("input_dim", -1) != input_dim) {
    problems.push_back("input_dim: checkpoint " + std::to_string(ckpt.meta.value("input_dim", -1)) +
                       " vs config " + std::to_string(input_dim));
  }
  for (Param* p : params) {
    const auto* a = ckpt.find(p->name);
    if (a == nullptr) {
      problems.push_back(p->name + ": missing from checkpoint");
    } else if (a->value.rows() != p->value.rows() || a->value.cols() != p->value.cols()) {
      problems.push_back(p->name + ": checkpoint " + shape_str(a->value) + " vs config " +
                         shape_str(p->value));
    }
  }
  for (const auto& a : ckpt.arrays) {
    if (a.name.rfind("adam.", 0) == 0) continue;
    bool known = false;
    for (const Param* p : params) known = known || p->name == a.name;
    if (!known) problems.push_back(a.name + ": not in config");
  }
  if (!problems.empty()) {
    std::string msg = "checkpoint does not match config:";
    for (const auto& p : problems) msg += " [" + p + "]";
    throw DataError(msg);
  }

  for (Param* p : params) {
    p->value = ckpt.find(p->name)->value;
    p->zero_grad();
  }
  state.adam.reset(params);
  bool have_moments = true;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = ckpt.find("adam.m/" + params[i]->name);
    const auto* v = ckpt.find("adam.v/" + params[i]->name);
    if (m == nullptr || v == nullptr) {
      have_moments = false;
      break;
    }
    state.adam.m[i] = m->value;
    state.adam.v[i] = v->value;
  }
  if (have_moments) {
    state.adam.step = ckpt.meta.value("step", 0L);
  } else {
    state.adam.reset(params);
  }
  state.epochs_completed = ckpt.meta.value("epoch", 0);
  return state;
}

std::pair<ModelParams, TrainConfig> load_model(const std::string& checkpoint_path,
                                               int* input_dim) {
  const Checkpoint ckpt = read_checkpoint(checkpoint_path);
  if (!ckpt.meta.contains("config") || !ckpt.meta.contains("input_dim")) {
    throw DataError("checkpoint lacks config/input_dim: " + checkpoint_path);
  }
  const TrainConfig cfg = TrainConfig::from_json(ckpt.meta.at("config"));
  const int dim = ckpt.meta.at("input_dim").get<int>();
  if (input_dim != nullptr) *input_dim = dim;
  TrainState state = restore_checkpoint(ckpt, cfg, dim);
  return {std::move(state.params), cfg};
}

}  // namespace gki
