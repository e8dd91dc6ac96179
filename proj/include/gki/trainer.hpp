#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gki/checkpoint.hpp"
#include "gki/model.hpp"
#include "gki/optim.hpp"

namespace gki {

/// Pre-training configuration. Defaults follow the clinical column of the
/// reference hyperparameter table; desk-scale runs override hidden/clusters.
struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 100;
  int batch_size = 128;
  double lr = 0.001;
  int layers = 2;
  int hidden = 128;
  int clusters = 512;
  int head_hidden = 128;
  int head_out = 128;
  double temperature = 0.01;
  PinvMode pinv_mode = PinvMode::identity;
  NegativesMode negatives = NegativesMode::batch;
  EdgeTransform edge_transform = EdgeTransform::raw;
  AdjacencyMode adjacency = AdjacencyMode::symmetric;
  double sphere_radius = 1.0;
  double clamp_eps = 1e-6;
  std::string checkpoint_path;  // empty: no checkpoints
  std::string log_path;         // empty: no CSV log

  void validate() const;
  ModelConfig model_config(int input_dim) const;
  LossConfig loss_config() const;

  /// Flat-key JSON; unknown keys are rejected.
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  static TrainConfig from_json(const nlohmann::json& j, TrainConfig base);
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double total = 0.0;
  double node_graph = 0.0;
  double graph_graph = 0.0;
  double rec = 0.0;
  double seconds = 0.0;
};

/// Per-epoch means over graphs of each loss component.
struct TrainLog {
  std::vector<EpochRecord> epochs;

  void write_csv(std::ostream& out) const;
};

struct TrainState {
  ModelParams params;
  AdamState adam;
  int epochs_completed = 0;
  TrainLog log;
};

/// Mini-batch pre-training: per epoch a seeded shuffle, then per batch the
/// encoder, clustering, kernel views, projections, losses and one Adam step.
/// Batch mode differentiates the whole batch at once; self_only mode handles
/// each graph on its own and accumulates gradients, so no cross-graph
/// candidate matrix ever exists.
TrainState pretrain(const std::vector<PatientGraph>& graphs, const TrainConfig& cfg);

/// Continues a checkpointed run for `cfg.epochs` further epochs with restored
/// optimizer moments. Shapes in the checkpoint must match `cfg`.
TrainState resume(const std::string& checkpoint_path, const std::vector<PatientGraph>& graphs,
                  const TrainConfig& cfg);

/// Runs one optimizer step on `batch` and returns summed loss components.
EpochRecord train_step(TrainState& state, const std::vector<const PreparedGraph*>& batch,
                       const TrainConfig& cfg);

Checkpoint make_checkpoint(const TrainState& state, const TrainConfig& cfg, int input_dim);
/// Restores params (and optimizer state when present). Throws DataError listing
/// every differing field when shapes disagree with `cfg`.
TrainState restore_checkpoint(const Checkpoint& ckpt, const TrainConfig& cfg, int input_dim);
/// Loads the model and the config stored in a checkpoint.
std::pair<ModelParams, TrainConfig> load_model(const std::string& checkpoint_path,
                                               int* input_dim = nullptr);

}  // namespace gki
