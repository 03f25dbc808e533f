#pragma once

// Self-describing JSON model checkpoints.
//
//   {
//     "format": "gazekit-checkpoint", "version": 1,
//     "model_kind": "static" | "trn" | "lstm",
//     "loss_kind": "pinball" | "mse",
//     "dims": {features, hidden, embed, state, layers, window},
//     "dropout_rate": number,
//     "train_config": {lr, adam_beta1, adam_beta2, adam_eps, batch_size, epochs,
//                      seed, loss, window, train_stride, dropout_rate},
//     "tensors": [ {"name": "mlp1.W", "shape": [rows, cols],
//                   "values": [row-major doubles]}, ... ]
//   }
//
// Tensor names and order follow ModelParams::for_each. Doubles are written
// in shortest round-trip form, so save -> load is exact.

#include <json.hpp>

#include <string>

#include "gazekit/train.hpp"

namespace gazekit {

inline constexpr const char* kCheckpointFormat = "gazekit-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  LossKind loss = LossKind::Pinball;
  TrainConfig train;
};

nlohmann::json to_json(const TrainConfig& c);
/// Missing keys keep `base`; unknown keys are a ConfigError.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

nlohmann::json to_json(const Checkpoint& ck);
/// Throws IOFailure for a malformed document or mismatched tensor shapes.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gazekit
