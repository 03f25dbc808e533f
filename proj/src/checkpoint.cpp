#include "gazekit/checkpoint.hpp"

#include <map>

#include "gazekit/io.hpp"

namespace gazekit {

namespace {

nlohmann::json dims_json(const ModelDims& d) {
  return {{"features", d.features}, {"hidden", d.hidden}, {"embed", d.embed},
          {"state", d.state},       {"layers", d.layers}, {"window", d.window}};
}

ModelDims dims_from_json(const nlohmann::json& j, ModelDims d) {
  for (const auto& [k, v] : j.items()) {
    if (k == "features") d.features = v.get<int>();
    else if (k == "hidden") d.hidden = v.get<int>();
    else if (k == "embed") d.embed = v.get<int>();
    else if (k == "state") d.state = v.get<int>();
    else if (k == "layers") d.layers = v.get<int>();
    else if (k == "window") d.window = v.get<int>();
    else throw Error(ErrorCode::ConfigError, "unknown dims key: " + k);
  }
  return d;
}

}  // namespace

nlohmann::json to_json(const TrainConfig& c) {
  return {{"lr", c.lr},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"seed", c.seed},
          {"loss", to_string(c.loss_kind)},
          {"window", c.window},
          {"train_stride", c.train_stride},
          {"dims", dims_json(c.dims)},
          {"dropout_rate", c.dropout_rate}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "train config must be an object");
  try {
    for (const auto& [k, v] : j.items()) {
      if (k == "lr") c.lr = v.get<double>();
      else if (k == "adam_beta1") c.adam_beta1 = v.get<double>();
      else if (k == "adam_beta2") c.adam_beta2 = v.get<double>();
      else if (k == "adam_eps") c.adam_eps = v.get<double>();
      else if (k == "batch_size") c.batch_size = v.get<int>();
      else if (k == "epochs") c.epochs = v.get<int>();
      else if (k == "seed") c.seed = v.get<std::uint64_t>();
      else if (k == "loss") c.loss_kind = parse_loss_kind(v.get<std::string>());
      else if (k == "window") c.window = v.get<int>();
      else if (k == "train_stride") c.train_stride = v.get<int>();
      else if (k == "dims") c.dims = dims_from_json(v, c.dims);
      else if (k == "dropout_rate") c.dropout_rate = v.get<double>();
      else throw Error(ErrorCode::ConfigError, "unknown train config key: " + k);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const Checkpoint& ck) {
  nlohmann::json tensors = nlohmann::json::array();
  ck.params.for_each([&](const std::string& name, const Eigen::Ref<const Eigen::MatrixXd>& m) {
    nlohmann::json values = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) values.push_back(m(r, c));
    }
    tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"values", std::move(values)}});
  });
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"model_kind", to_string(ck.params.kind)},
          {"loss_kind", to_string(ck.loss)},
          {"dims", dims_json(ck.params.dims)},
          {"dropout_rate", ck.params.dropout_rate},
          {"train_config", to_json(ck.train)},
          {"tensors", std::move(tensors)}};
}

Checkpoint checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != kCheckpointFormat) throw Error(ErrorCode::IOFailure, "not a gazekit checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::IOFailure, "unsupported checkpoint version");
    }
    Checkpoint ck;
    ck.loss = parse_loss_kind(j.at("loss_kind").get<std::string>());
    ck.train = train_config_from_json(j.at("train_config"));
    const ModelDims dims = dims_from_json(j.at("dims"), ModelDims{});
    ck.params = init_model(parse_model_kind(j.at("model_kind").get<std::string>()), dims,
                           j.at("dropout_rate").get<double>(), 0);

    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    std::size_t used = 0;
    ck.params.for_each([&](const std::string& name, Eigen::Ref<Eigen::MatrixXd> m) {
      const auto it = by_name.find(name);
      if (it == by_name.end()) throw Error(ErrorCode::IOFailure, "checkpoint lacks tensor " + name);
      const nlohmann::json& t = *it->second;
      const auto shape = t.at("shape").get<std::vector<Eigen::Index>>();
      const auto& values = t.at("values");
      if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
          values.size() != static_cast<std::size_t>(m.size())) {
        throw Error(ErrorCode::IOFailure, "tensor " + name + " has the wrong shape");
      }
      std::size_t k = 0;
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = values[k++].get<double>();
      }
      ++used;
    });
    if (used != by_name.size()) throw Error(ErrorCode::IOFailure, "checkpoint has unexpected tensors");
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::IOFailure, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) { write_text_file(path, to_json(ck).dump() + "\n"); }

Checkpoint load_checkpoint(const std::string& path) { return checkpoint_from_json(read_json_file(path)); }

}  // namespace gazekit
