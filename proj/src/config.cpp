#include "advmt/config.hpp"

#include <fstream>
#include <istream>
#include <sstream>

namespace advmt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  std::istringstream is(value);
  T out{};
  if (!(is >> out) || !(is >> std::ws).eof()) throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("invalid value '" + value + "' for key '" + key + "'");
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  const long v = parse_number<long>(key, value);
  if (v <= 0) throw ConfigError("key '" + key + "' must be positive");
  return static_cast<std::size_t>(v);
}

}  // namespace

Config parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  Config c;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) throw ConfigError("empty value for key '" + key + "'");

    if (key == "d_e") c.model.embedding_dim = parse_size(key, value);
    else if (key == "d_h") c.model.hidden_dim = parse_size(key, value);
    else if (key == "d_m2") c.model.mlp_hidden_dim = parse_size(key, value);
    else if (key == "architecture") {
      try {
        c.model.architecture = parse_architecture(value);
      } catch (const ConfigError&) {
        throw ConfigError("invalid value '" + value + "' for key 'architecture'");
      }
    }
    else if (key == "learning_rate") c.train.adam.learning_rate = parse_number<double>(key, value);
    else if (key == "adam_beta1") c.train.adam.beta1 = parse_number<double>(key, value);
    else if (key == "adam_beta2") c.train.adam.beta2 = parse_number<double>(key, value);
    else if (key == "adam_epsilon") c.train.adam.epsilon = parse_number<double>(key, value);
    else if (key == "batch_size") c.train.batch_size = parse_size(key, value);
    else if (key == "margin") c.train.margin = parse_number<double>(key, value);
    else if (key == "max_steps") c.train.max_steps = static_cast<long>(parse_size(key, value));
    else if (key == "eval_interval") c.train.eval_interval = static_cast<long>(parse_size(key, value));
    else if (key == "seed") c.train.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "dev_fraction") c.train.dev_fraction = parse_number<double>(key, value);
    else if (key == "resample_negatives") c.train.resample_negatives = parse_bool(key, value);
    else if (key == "weight_eval") c.train.weights.eval = parse_number<double>(key, value);
    else if (key == "weight_adv1") c.train.weights.adv_discriminator = parse_number<double>(key, value);
    else if (key == "weight_adv2") c.train.weights.adv_shared = parse_number<double>(key, value);
    else if (key == "task") {
      std::istringstream is(value);
      TaskConfig t;
      std::string path, extra;
      if (!(is >> t.name >> path)) throw ConfigError("key 'task' expects: <name> <corpus path> [min_frequency]");
      if (is >> extra) t.min_frequency = static_cast<int>(parse_size(key, extra));
      if (is >> extra) throw ConfigError("key 'task' has trailing fields");
      t.corpus = path;
      if (t.corpus.is_relative() && !base_dir.empty()) t.corpus = base_dir / t.corpus;
      c.tasks.push_back(std::move(t));
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  validate(c);
  return c;
}

Config read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  return parse_config(in, path.parent_path());
}

void validate(const Config& c) {
  if (c.tasks.empty()) throw ConfigError("config declares no task");
  if (!(c.train.adam.learning_rate > 0)) throw ConfigError("key 'learning_rate' must be positive");
  if (!(c.train.adam.beta1 > 0 && c.train.adam.beta1 < 1)) throw ConfigError("key 'adam_beta1' must be in (0, 1)");
  if (!(c.train.adam.beta2 > 0 && c.train.adam.beta2 < 1)) throw ConfigError("key 'adam_beta2' must be in (0, 1)");
  if (!(c.train.adam.epsilon > 0)) throw ConfigError("key 'adam_epsilon' must be positive");
  if (!(c.train.margin > 0)) throw ConfigError("key 'margin' must be positive");
  if (c.train.eval_interval > c.train.max_steps) throw ConfigError("key 'eval_interval' exceeds max_steps");
  if (!(c.train.dev_fraction >= 0 && c.train.dev_fraction < 1)) throw ConfigError("key 'dev_fraction' must be in [0, 1)");
  for (const auto* w : {&c.train.weights.eval, &c.train.weights.adv_discriminator, &c.train.weights.adv_shared})
    if (!(*w >= 0)) throw ConfigError("loss weights must be non-negative");
  for (std::size_t i = 0; i < c.tasks.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (c.tasks[i].name == c.tasks[j].name) throw ConfigError("duplicate task name '" + c.tasks[i].name + "'");
}

}  // namespace advmt
