#include "ganov/config.hpp"

#include <fstream>
#include <sstream>

#include "ganov/errors.hpp"

namespace ganov {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw ValidationError("config: key '" + key + "' expects a real, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ValidationError("config: key '" + key + "' expects a boolean, got '" + v + "'");
}

ImageShape parse_shape(const std::string& key, const std::string& v) {
  ImageShape s;
  std::istringstream ss(v);
  char c1, c2;
  if (!(ss >> s.channels >> c1 >> s.height >> c2 >> s.width) || c1 != ',' ||
      c2 != ',' || !ss.eof())
    throw ValidationError("config: key '" + key + "' expects c,h,w, got '" + v + "'");
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto bad = [](const std::string& key, const std::string& why) {
    throw ValidationError("config: " + key + " " + why);
  };
  if (latent_dim < 2) bad("latent_dim", "must be >= 2");
  if (image_shape.channels < 1 || image_shape.height < 1 || image_shape.width < 1)
    bad("image_shape", "must be positive");
  if (gan_iterations < 1) bad("gan_iterations", "must be >= 1");
  if (radius_interval < 1) bad("radius_interval", "must be >= 1");
  if (gan_learning_rate <= 0) bad("gan_learning_rate", "must be > 0");
  if (sphere_learning_rate < 0) bad("sphere_learning_rate", "must be >= 0");
  if (lambda < 0) bad("lambda", "must be >= 0");
  if (!(nu > 0.0 && nu <= 1.0)) bad("nu", "must lie in (0,1]");
  if (distribution_set_size < 1) bad("distribution_set_size", "must be >= 1");
  if (verification_batch_size < 1) bad("verification_batch_size", "must be >= 1");
  if (!(suspicion_threshold > 0.5 && suspicion_threshold < 1.0))
    bad("suspicion_threshold", "must lie in (0.5,1)");
  if (gan_batch_size < 1) bad("gan_batch_size", "must be >= 1");
  if (sphere_batch_size < 1) bad("sphere_batch_size", "must be >= 1");
  if (base_width < 1) bad("base_width", "must be >= 1");
}

void apply_config_line(ExperimentConfig& cfg, const std::string& raw) {
  std::string line = raw.substr(0, raw.find('#'));
  line = trim(line);
  if (line.empty()) return;
  size_t eq = line.find('=');
  if (eq == std::string::npos)
    throw ValidationError("config: expected key=value, got '" + line + "'");
  std::string key = trim(line.substr(0, eq));
  std::string val = trim(line.substr(eq + 1));

  if (key == "latent_dim") cfg.latent_dim = parse_int(key, val);
  else if (key == "image_shape") cfg.image_shape = parse_shape(key, val);
  else if (key == "gan_iterations") cfg.gan_iterations = parse_int(key, val);
  else if (key == "radius_interval") cfg.radius_interval = parse_int(key, val);
  else if (key == "gan_learning_rate") cfg.gan_learning_rate = parse_real(key, val);
  else if (key == "sphere_learning_rate") cfg.sphere_learning_rate = parse_real(key, val);
  else if (key == "lambda") cfg.lambda = parse_real(key, val);
  else if (key == "nu") cfg.nu = parse_real(key, val);
  else if (key == "distribution_set_size") cfg.distribution_set_size = parse_int(key, val);
  else if (key == "verification_batch_size") cfg.verification_batch_size = parse_int(key, val);
  else if (key == "suspicion_threshold") cfg.suspicion_threshold = parse_real(key, val);
  else if (key == "seed") cfg.seed = parse_int(key, val);
  else if (key == "architecture_id") cfg.architecture_id = val;
  else if (key == "use_pearson_loss") cfg.use_pearson_loss = parse_bool(key, val);
  else if (key == "gan_batch_size") cfg.gan_batch_size = parse_int(key, val);
  else if (key == "sphere_batch_size") cfg.sphere_batch_size = parse_int(key, val);
  else if (key == "base_width") cfg.base_width = parse_int(key, val);
  else throw ValidationError("config: unknown key '" + key + "'");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  while (std::getline(in, line)) apply_config_line(cfg, line);
  cfg.validate();
  return cfg;
}

}  // namespace ganov
