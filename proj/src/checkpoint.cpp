#include "advmt/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace advmt {

namespace {

using nlohmann::json;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::string take(std::size_t n, const char* what) {
    if (bytes_.size() - pos_ < n)
      throw CheckpointError(CheckpointErrc::Truncated, std::string("checkpoint truncated while reading ") + what);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32(const char* what) {
    const std::string b = take(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return v;
  }

  double f64(const char* what) {
    const std::string b = take(8, what);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[i]);
    return std::bit_cast<double>(v);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

json config_to_json(const Config& c) {
  json tasks = json::array();
  for (const auto& t : c.tasks)
    tasks.push_back({{"name", t.name}, {"corpus", t.corpus.generic_string()}, {"min_frequency", t.min_frequency}});
  return {
      {"d_e", c.model.embedding_dim},
      {"d_h", c.model.hidden_dim},
      {"d_m2", c.model.mlp_hidden_dim},
      {"architecture", architecture_str(c.model.architecture)},
      {"learning_rate", c.train.adam.learning_rate},
      {"adam_beta1", c.train.adam.beta1},
      {"adam_beta2", c.train.adam.beta2},
      {"adam_epsilon", c.train.adam.epsilon},
      {"batch_size", c.train.batch_size},
      {"margin", c.train.margin},
      {"max_steps", c.train.max_steps},
      {"eval_interval", c.train.eval_interval},
      {"seed", c.train.seed},
      {"dev_fraction", c.train.dev_fraction},
      {"resample_negatives", c.train.resample_negatives},
      {"weight_eval", c.train.weights.eval},
      {"weight_adv1", c.train.weights.adv_discriminator},
      {"weight_adv2", c.train.weights.adv_shared},
      {"tasks", tasks},
  };
}

Config config_from_json(const json& j) {
  Config c;
  c.model.embedding_dim = j.at("d_e").get<std::size_t>();
  c.model.hidden_dim = j.at("d_h").get<std::size_t>();
  c.model.mlp_hidden_dim = j.at("d_m2").get<std::size_t>();
  c.model.architecture = parse_architecture(j.at("architecture").get<std::string>());
  c.train.adam.learning_rate = j.at("learning_rate").get<double>();
  c.train.adam.beta1 = j.at("adam_beta1").get<double>();
  c.train.adam.beta2 = j.at("adam_beta2").get<double>();
  c.train.adam.epsilon = j.at("adam_epsilon").get<double>();
  c.train.batch_size = j.at("batch_size").get<std::size_t>();
  c.train.margin = j.at("margin").get<double>();
  c.train.max_steps = j.at("max_steps").get<long>();
  c.train.eval_interval = j.at("eval_interval").get<long>();
  c.train.seed = j.at("seed").get<std::uint64_t>();
  c.train.dev_fraction = j.at("dev_fraction").get<double>();
  c.train.resample_negatives = j.at("resample_negatives").get<bool>();
  c.train.weights.eval = j.at("weight_eval").get<double>();
  c.train.weights.adv_discriminator = j.at("weight_adv1").get<double>();
  c.train.weights.adv_shared = j.at("weight_adv2").get<double>();
  for (const auto& t : j.at("tasks"))
    c.tasks.push_back({t.at("name").get<std::string>(), t.at("corpus").get<std::string>(), t.at("min_frequency").get<int>()});
  return c;
}

}  // namespace

std::string serialize_checkpoint(const Model& model, const Config& config) {
  json manifest = json::array();
  const auto& store = model.parameters();
  for (std::size_t i = 0; i < store.size(); ++i)
    manifest.push_back({{"name", store[i].name()}, {"scope", scope_str(store[i].scope())}, {"shape", store[i].shape()}});
  json tasks = json::array();
  for (std::size_t k = 0; k < model.task_count(); ++k) tasks.push_back(model.task(static_cast<int>(k)).name);

  // The snapshot records the architecture actually built, which differs
  // from the configured one when adversarial training was switched off.
  json cfg = config_to_json(config);
  cfg["architecture"] = architecture_str(model.config().architecture);
  cfg["d_e"] = model.config().embedding_dim;
  cfg["d_h"] = model.config().hidden_dim;
  cfg["d_m2"] = model.config().mlp_hidden_dim;

  const json header = {{"format_version", kCheckpointVersion}, {"config", cfg}, {"tasks", tasks}, {"tensors", manifest}};
  const std::string header_text = header.dump();

  std::string out(kCheckpointMagic, 8);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  for (std::size_t k = 0; k < model.task_count(); ++k) {
    const Vocabulary& v = model.task(static_cast<int>(k)).vocab;
    put_u32(out, static_cast<std::uint32_t>(v.min_frequency()));
    put_u32(out, static_cast<std::uint32_t>(v.size() - 2));
    for (std::size_t id = 2; id < v.size(); ++id) {
      const std::string& tok = v.token(static_cast<int>(id));
      put_u32(out, static_cast<std::uint32_t>(tok.size()));
      out += tok;
    }
  }
  for (std::size_t i = 0; i < store.size(); ++i)
    for (double d : store[i].value.values()) put_f64(out, d);
  return out;
}

LoadedCheckpoint deserialize_checkpoint(const std::string& bytes) {
  Reader in(bytes);
  if (bytes.size() < 8 || bytes.compare(0, 8, kCheckpointMagic, 8) != 0)
    throw CheckpointError(CheckpointErrc::BadMagic, "bad magic: not an advmt checkpoint");
  in.take(8, "magic");
  const std::uint32_t header_len = in.u32("header length");
  const std::string header_text = in.take(header_len, "header");

  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointErrc::Malformed, std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointVersion)
      throw CheckpointError(CheckpointErrc::VersionMismatch, "checkpoint format version " + std::to_string(version) +
                                                                 ", expected " + std::to_string(kCheckpointVersion));
    Config config = config_from_json(header.at("config"));
    const auto names = header.at("tasks").get<std::vector<std::string>>();

    std::vector<TaskSpec> specs;
    for (const auto& name : names) {
      const std::uint32_t min_freq = in.u32("vocabulary");
      const std::uint32_t count = in.u32("vocabulary");
      std::vector<std::string> tokens;
      for (std::uint32_t i = 0; i < count; ++i) tokens.push_back(in.take(in.u32("token length"), "token"));
      specs.push_back({name, Vocabulary::from_tokens(tokens, static_cast<int>(min_freq))});
    }

    Model model(config.model, specs, 0);
    const auto& manifest = header.at("tensors");
    auto& store = model.parameters();
    if (manifest.size() != store.size())
      throw CheckpointError(CheckpointErrc::Malformed, "manifest declares " + std::to_string(manifest.size()) +
                                                           " tensors, model expects " + std::to_string(store.size()));
    std::vector<Tensor> values;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
      const auto& entry = manifest[i];
      const auto name = entry.at("name").get<std::string>();
      const Shape shape = entry.at("shape").get<Shape>();
      if (name != store[i].name() || shape != store[i].shape() ||
          parse_scope(entry.at("scope").get<std::string>()) != store[i].scope())
        throw CheckpointError(CheckpointErrc::Malformed, "manifest entry " + std::to_string(i) + " (" + name +
                                                             ") does not match the model layout");
      std::vector<double> v(shape_size(shape));
      for (auto& d : v) d = in.f64(name.c_str());
      values.emplace_back(shape, std::move(v));
    }
    if (in.remaining() != 0)
      throw CheckpointError(CheckpointErrc::TrailingBytes,
                            std::to_string(in.remaining()) + " trailing bytes after the last tensor payload");
    model.restore(values);
    return {std::move(model), std::move(config)};
  } catch (const CheckpointError&) {
    throw;
  } catch (const json::exception& e) {
    throw CheckpointError(CheckpointErrc::Malformed, std::string("checkpoint header: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointErrc::Malformed, std::string("checkpoint header: ") + e.what());
  } catch (const DataError& e) {
    throw CheckpointError(CheckpointErrc::Malformed, std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const Config& config) {
  const std::string bytes = serialize_checkpoint(model, config);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrc::Io, "cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrc::Io, "failed writing checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrc::Io, "cannot read checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace advmt
