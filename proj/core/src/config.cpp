#include "mrgan/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mrgan/errors.hpp"

namespace mrgan {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true|false, got '" + v + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_u64(key, item));
  }
  if (out.empty()) throw ConfigError(key + ": expected a comma-separated seed list");
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Shape parse_image_shape(const std::string& text) {
  Shape out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, 'x')) {
    item = trim(item);
    out.push_back(parse_u64("model.image_shape", item));
  }
  if (out.empty() || (out.size() != 1 && out.size() != 3)) {
    throw ConfigError("model.image_shape: expected F or CxHxW, got '" + text + "'");
  }
  return out;
}

std::string image_shape_to_string(const Shape& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(shape[i]);
  }
  return out;
}

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value', got '" +
                        t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw ConfigError(key + ": duplicate key");
    kv[key] = val;
  }

  RunConfig cfg;
  auto take = [&](const char* key) -> const std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) {
      cfg.defaulted_keys.push_back(key);
      return nullptr;
    }
    const std::string* v = &it->second;
    return v;
  };

  if (auto* v = take("mode")) cfg.mode = *v;
  if (auto* v = take("run_name")) cfg.run_name = *v;
  if (auto* v = take("output_dir")) cfg.output_dir = *v;
  if (auto* v = take("seeds")) cfg.seeds = parse_seed_list("seeds", *v);
  if (auto* v = take("checkpoint_every")) cfg.checkpoint_every = parse_u64("checkpoint_every", *v);

  if (auto* v = take("data.source")) cfg.data_source = *v;
  if (auto* v = take("data.kind")) cfg.data_kind = *v;
  if (auto* v = take("data.samples")) cfg.data_samples = parse_u64("data.samples", *v);
  if (auto* v = take("data.test_samples")) {
    cfg.data_test_samples = parse_u64("data.test_samples", *v);
  }
  if (auto* v = take("data.noise")) cfg.data_noise = parse_double("data.noise", *v);
  if (auto* v = take("data.images")) cfg.data_images = *v;
  if (auto* v = take("data.labels")) cfg.data_labels = *v;
  if (auto* v = take("data.test_images")) cfg.data_test_images = *v;
  if (auto* v = take("data.test_labels")) cfg.data_test_labels = *v;
  if (auto* v = take("data.n_labeled")) cfg.n_labeled = parse_u64("data.n_labeled", *v);
  if (auto* v = take("data.n_validation")) cfg.n_validation = parse_u64("data.n_validation", *v);
  if (auto* v = take("data.split_seed")) cfg.split_seed = parse_u64("data.split_seed", *v);

  if (auto* v = take("model.profile")) cfg.profile = *v;
  if (auto* v = take("model.width")) cfg.width = parse_double("model.width", *v);
  if (auto* v = take("model.latent_dim")) cfg.latent_dim = parse_u64("model.latent_dim", *v);
  if (auto* v = take("model.classes")) cfg.classes = parse_u64("model.classes", *v);
  if (auto* v = take("model.image_shape")) cfg.image_shape = parse_image_shape(*v);
  if (auto* v = take("model.lrelu_slope")) cfg.lrelu_slope = parse_double("model.lrelu_slope", *v);
  if (auto* v = take("model.bn_momentum")) cfg.bn_momentum = parse_double("model.bn_momentum", *v);
  if (auto* v = take("model.generator_weightnorm")) {
    cfg.generator_weightnorm = parse_bool("model.generator_weightnorm", *v);
  }
  if (auto* v = take("model.generator_checkpoint")) cfg.generator_checkpoint = *v;

  if (auto* v = take("loss.lambda")) cfg.lambda = parse_double("loss.lambda", *v);
  if (auto* v = take("loss.epsilon")) cfg.epsilon = parse_double("loss.epsilon", *v);
  if (auto* v = take("loss.mc_samples")) cfg.mc_samples = parse_u64("loss.mc_samples", *v);
  if (auto* v = take("loss.penalty_target")) cfg.penalty_target = *v;

  if (auto* v = take("train.batch_size")) cfg.batch_size = parse_u64("train.batch_size", *v);
  if (auto* v = take("train.epochs")) cfg.epochs = parse_u64("train.epochs", *v);
  if (auto* v = take("train.decay_start")) {
    cfg.decay_start = parse_u64("train.decay_start", *v);
    cfg.decay_start_set = true;
  }
  if (auto* v = take("train.adam.alpha")) cfg.adam_alpha = parse_double("train.adam.alpha", *v);
  if (auto* v = take("train.adam.beta1")) cfg.adam_beta1 = parse_double("train.adam.beta1", *v);
  if (auto* v = take("train.adam.beta2")) cfg.adam_beta2 = parse_double("train.adam.beta2", *v);
  if (auto* v = take("train.adam.eps")) cfg.adam_eps = parse_double("train.adam.eps", *v);
  if (auto* v = take("train.ema_decay")) cfg.ema_decay = parse_double("train.ema_decay", *v);

  static const char* known[] = {
      "mode", "run_name", "output_dir", "seeds", "checkpoint_every",
      "data.source", "data.kind", "data.samples", "data.test_samples", "data.noise",
      "data.images", "data.labels", "data.test_images", "data.test_labels",
      "data.n_labeled", "data.n_validation", "data.split_seed",
      "model.profile", "model.width", "model.latent_dim", "model.classes",
      "model.image_shape", "model.lrelu_slope", "model.bn_momentum",
      "model.generator_weightnorm", "model.generator_checkpoint",
      "loss.lambda", "loss.epsilon", "loss.mc_samples", "loss.penalty_target",
      "train.batch_size", "train.epochs", "train.decay_start", "train.adam.alpha",
      "train.adam.beta1", "train.adam.beta2", "train.adam.eps", "train.ema_decay"};
  for (const auto& [key, _] : kv) {
    if (std::find_if(std::begin(known), std::end(known),
                     [&](const char* k) { return key == k; }) == std::end(known)) {
      throw ConfigError("unknown config field '" + key + "'");
    }
  }

  // Profile-dependent defaults.
  if (cfg.batch_size == 0) {
    cfg.batch_size = cfg.profile == "conv-small" ? 50 : 25;
  }
  if (cfg.epochs == 0) {
    if (cfg.profile == "conv-large") {
      cfg.epochs = 1400;
    } else if (cfg.profile == "conv-small") {
      cfg.epochs = 400;
    } else {
      cfg.epochs = 60;
    }
  }
  if (!cfg.decay_start_set) {
    if (cfg.profile == "conv-large") {
      cfg.decay_start = 1200;
    } else if (cfg.profile == "conv-small") {
      cfg.decay_start = 300;
    } else {
      cfg.decay_start = cfg.epochs * 3 / 4;
    }
    if (cfg.decay_start > cfg.epochs) cfg.decay_start = cfg.epochs;
  }

  // Validation.
  if (cfg.mode != "joint" && cfg.mode != "two-stage" && cfg.mode != "baseline") {
    throw ConfigError("mode: expected joint | two-stage | baseline, got '" + cfg.mode + "'");
  }
  if (cfg.mode == "two-stage" && cfg.generator_checkpoint.empty()) {
    throw ConfigError("model.generator_checkpoint: required in two-stage mode");
  }
  if (cfg.data_source != "synthetic" && cfg.data_source != "idx") {
    throw ConfigError("data.source: expected synthetic | idx, got '" + cfg.data_source + "'");
  }
  if (cfg.data_source == "idx" && (cfg.data_images.empty() || cfg.data_labels.empty())) {
    throw ConfigError("data.images/data.labels: required for data.source = idx");
  }
  if (cfg.lambda < 0.0) throw ConfigError("loss.lambda: must be >= 0");
  if (cfg.epsilon <= 0.0) throw ConfigError("loss.epsilon: must be > 0");
  if (cfg.width <= 0.0) throw ConfigError("model.width: must be > 0");
  if (cfg.classes < 1) throw ConfigError("model.classes: must be >= 1");
  if (cfg.latent_dim < 1) throw ConfigError("model.latent_dim: must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (cfg.decay_start > cfg.epochs) {
    throw ConfigError("train.decay_start: must be <= train.epochs");
  }
  if (cfg.adam_beta1 < 0.0 || cfg.adam_beta1 >= 1.0 || cfg.adam_beta2 < 0.0 ||
      cfg.adam_beta2 >= 1.0) {
    throw ConfigError("train.adam.beta1/beta2: must lie in [0,1)");
  }
  if (cfg.ema_decay < 0.0 || cfg.ema_decay > 1.0) {
    throw ConfigError("train.ema_decay: must lie in [0,1]");
  }
  if (cfg.lrelu_slope < 0.0) throw ConfigError("model.lrelu_slope: must be >= 0");
  if (cfg.bn_momentum < 0.0 || cfg.bn_momentum >= 1.0) {
    throw ConfigError("model.bn_momentum: must lie in [0,1)");
  }
  if (cfg.penalty_target != "logits" && cfg.penalty_target != "probabilities" &&
      cfg.penalty_target != "log-probabilities") {
    throw ConfigError("loss.penalty_target: expected logits | probabilities | "
                      "log-probabilities, got '" + cfg.penalty_target + "'");
  }
  if (cfg.seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_echo(const RunConfig& cfg) {
  std::string out;
  if (!cfg.defaulted_keys.empty()) {
    out += "# defaulted:";
    for (const auto& k : cfg.defaulted_keys) {
      out += ' ';
      out += k;
    }
    out += '\n';
  }
  return out + serialize_config(cfg);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "mode = " << cfg.mode << '\n';
  os << "run_name = " << cfg.run_name << '\n';
  os << "output_dir = " << cfg.output_dir << '\n';
  os << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i) os << ',';
    os << cfg.seeds[i];
  }
  os << '\n';
  os << "checkpoint_every = " << cfg.checkpoint_every << '\n';
  os << "data.source = " << cfg.data_source << '\n';
  os << "data.kind = " << cfg.data_kind << '\n';
  os << "data.samples = " << cfg.data_samples << '\n';
  os << "data.test_samples = " << cfg.data_test_samples << '\n';
  os << "data.noise = " << fmt_double(cfg.data_noise) << '\n';
  os << "data.images = " << cfg.data_images << '\n';
  os << "data.labels = " << cfg.data_labels << '\n';
  os << "data.test_images = " << cfg.data_test_images << '\n';
  os << "data.test_labels = " << cfg.data_test_labels << '\n';
  os << "data.n_labeled = " << cfg.n_labeled << '\n';
  os << "data.n_validation = " << cfg.n_validation << '\n';
  os << "data.split_seed = " << cfg.split_seed << '\n';
  os << "model.profile = " << cfg.profile << '\n';
  os << "model.width = " << fmt_double(cfg.width) << '\n';
  os << "model.latent_dim = " << cfg.latent_dim << '\n';
  os << "model.classes = " << cfg.classes << '\n';
  os << "model.image_shape = " << image_shape_to_string(cfg.image_shape) << '\n';
  os << "model.lrelu_slope = " << fmt_double(cfg.lrelu_slope) << '\n';
  os << "model.bn_momentum = " << fmt_double(cfg.bn_momentum) << '\n';
  os << "model.generator_weightnorm = " << (cfg.generator_weightnorm ? "true" : "false") << '\n';
  os << "model.generator_checkpoint = " << cfg.generator_checkpoint << '\n';
  os << "loss.lambda = " << fmt_double(cfg.lambda) << '\n';
  os << "loss.epsilon = " << fmt_double(cfg.epsilon) << '\n';
  os << "loss.mc_samples = " << cfg.mc_samples << '\n';
  os << "loss.penalty_target = " << cfg.penalty_target << '\n';
  os << "train.batch_size = " << cfg.batch_size << '\n';
  os << "train.epochs = " << cfg.epochs << '\n';
  os << "train.decay_start = " << cfg.decay_start << '\n';
  os << "train.adam.alpha = " << fmt_double(cfg.adam_alpha) << '\n';
  os << "train.adam.beta1 = " << fmt_double(cfg.adam_beta1) << '\n';
  os << "train.adam.beta2 = " << fmt_double(cfg.adam_beta2) << '\n';
  os << "train.adam.eps = " << fmt_double(cfg.adam_eps) << '\n';
  os << "train.ema_decay = " << fmt_double(cfg.ema_decay) << '\n';
  return os.str();
}

}  // namespace mrgan
