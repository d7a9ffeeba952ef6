#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganov/attacks.hpp"
#include "ganov/config.hpp"
#include "ganov/dataset.hpp"
#include "ganov/errors.hpp"
#include "ganov/losses.hpp"
#include "ganov/models.hpp"
#include "ganov/pipeline.hpp"
#include "ganov/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ganov;

namespace {

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["latent_dim"] = c.latent_dim;
  j["image_shape"] = {c.image_shape.channels, c.image_shape.height,
                      c.image_shape.width};
  j["gan_iterations"] = c.gan_iterations;
  j["radius_interval"] = c.radius_interval;
  j["gan_learning_rate"] = c.gan_learning_rate;
  j["sphere_learning_rate"] = c.sphere_learning_rate;
  j["lambda"] = c.lambda;
  j["nu"] = c.nu;
  j["distribution_set_size"] = c.distribution_set_size;
  j["verification_batch_size"] = c.verification_batch_size;
  j["suspicion_threshold"] = c.suspicion_threshold;
  j["seed"] = c.seed;
  j["architecture_id"] = c.architecture_id;
  j["use_pearson_loss"] = c.use_pearson_loss;
  j["gan_batch_size"] = c.gan_batch_size;
  j["sphere_batch_size"] = c.sphere_batch_size;
  j["base_width"] = c.base_width;
  return j;
}

class RunRecord {
 public:
  RunRecord(std::string command, int64_t seed)
      : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["seed"] = seed;
    j_["metrics"] = json::object();
    j_["artifacts"] = json::object();
  }

  void set_config(const ExperimentConfig& c) { j_["config"] = config_to_json(c); }
  void metric(const std::string& k, const json& v) { j_["metrics"][k] = v; }
  void artifact(const std::string& k, const std::string& path) {
    j_["artifacts"][k] = path;
  }

  void write(const fs::path& out_dir) {
    auto elapsed = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start_)
                       .count();
    j_["wall_clock_seconds"] = elapsed;
    fs::create_directories(out_dir);
    std::ofstream out(out_dir / "run_record.json");
    out << j_.dump(2) << "\n";
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

// A verification image source: either a generator artifact (sampled live,
// fresh latents per batch) or a directory of images (the box-free case).
class ImageSource {
 public:
  ImageSource(const std::string& path, const ImageShape& shape, Rng rng)
      : rng_(std::move(rng)) {
    if (fs::exists(fs::path(path) / "manifest.json")) {
      gen_.emplace(models::Generator::load(path));
      if (!(gen_->output_shape() == shape))
        throw ValidationError("source '" + path +
                              "': generator output shape mismatch");
    } else {
      pool_ = ingest_dataset(path, shape).stacked();
    }
  }

  explicit ImageSource(models::Generator gen, Rng rng)
      : gen_(std::move(gen)), rng_(std::move(rng)) {}

  // Draws one batch; generator sources sample fresh latents, directory
  // sources sample a random subset (reduced, with a warning, if short).
  Tensor batch(int64_t size) {
    if (gen_) {
      Tensor z = models::sample_latents(size, gen_->latent_dim(), rng_);
      return gen_->generate(z, false);
    }
    int64_t n = pool_.shape[0];
    if (n < size) {
      if (!warned_) {
        std::cerr << "warning: source has " << n << " images, fewer than batch "
                  << size << "; using all of them\n";
        warned_ = true;
      }
      size = n;
    }
    std::vector<int64_t> idx(static_cast<size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng_.shuffle(idx);
    Tensor out({size, pool_.shape[1], pool_.shape[2], pool_.shape[3]});
    int64_t stride = pool_.numel() / n;
    for (int64_t i = 0; i < size; ++i)
      std::copy(pool_.data.begin() + idx[i] * stride,
                pool_.data.begin() + (idx[i] + 1) * stride,
                out.data.begin() + i * stride);
    return out;
  }

 private:
  std::optional<models::Generator> gen_;
  Tensor pool_;
  Rng rng_{0};
  bool warned_ = false;
};

verification::Verdict replicated_verify(const pipeline::Hypersphere& sphere,
                                        ImageSource& reference,
                                        ImageSource& suspect, int64_t batch,
                                        int64_t replicates, double threshold) {
  verification::Verdict v;
  double sum = 0.0;
  for (int64_t r = 0; r < replicates; ++r) {
    verification::Verdict one = verification::verify(
        sphere, reference.batch(batch), suspect.batch(batch), threshold);
    v.replicate_aucs.push_back(one.auc);
    v.reference_size = one.reference_size;
    v.suspect_size = one.suspect_size;
    sum += one.auc;
  }
  v.auc = sum / static_cast<double>(replicates);
  v.threshold = threshold;
  v.is_pirated = v.auc < threshold;
  return v;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir) {
  ExperimentConfig cfg = load_config(config_path);
  RunRecord rec("train", cfg.seed);
  rec.set_config(cfg);

  Dataset data = ingest_dataset(data_dir, cfg.image_shape);
  Rng rng(static_cast<uint64_t>(cfg.seed));
  Rng init_rng = rng.fork(1);
  models::Generator G(cfg, init_rng);
  models::Discriminator D(cfg, init_rng);
  pipeline::GanHistory hist = pipeline::train_gan(G, D, data, cfg, rng);

  fs::create_directories(out_dir);
  G.save((fs::path(out_dir) / "generator").string());
  D.save((fs::path(out_dir) / "discriminator").string());
  pipeline::write_gan_log((fs::path(out_dir) / "train_log.csv").string(), hist);

  const auto& last = hist.iters.back();
  rec.metric("final_d_loss", last.d_loss);
  rec.metric("final_g_loss", last.g_loss);
  rec.metric("final_mean_rho", last.mean_rho);
  rec.artifact("generator", (fs::path(out_dir) / "generator").string());
  rec.artifact("discriminator", (fs::path(out_dir) / "discriminator").string());
  rec.write(out_dir);
  std::cout << "trained " << cfg.architecture_id << " for " << cfg.gan_iterations
            << " iterations; artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_empower(const std::string& gen_path, const std::string& disc_path,
                const std::string& config_path, const std::string& out_dir,
                bool ambiguity) {
  ExperimentConfig cfg = load_config(config_path);
  RunRecord rec(ambiguity ? "empower --ambiguity" : "empower", cfg.seed);
  rec.set_config(cfg);

  models::Generator G = models::Generator::load(gen_path);
  Rng rng(static_cast<uint64_t>(cfg.seed));
  pipeline::DistributionSet dprime =
      pipeline::build_distribution_set(G, cfg.distribution_set_size, rng);

  pipeline::Hypersphere sphere = [&] {
    if (ambiguity) return attacks::ambiguity_train(dprime, cfg, rng);
    models::Discriminator D = models::Discriminator::load(disc_path);
    return pipeline::train_hypersphere(D, dprime, cfg, rng);
  }();

  fs::create_directories(out_dir);
  sphere.save((fs::path(out_dir) / "hypersphere").string(), cfg.lambda, cfg.seed);
  pipeline::write_sphere_log((fs::path(out_dir) / "sphere_log.csv").string(),
                             sphere.training_log);
  rec.metric("radius", sphere.radius);
  rec.metric("epochs", static_cast<int64_t>(sphere.training_log.size()));
  rec.metric("final_loss", sphere.training_log.back().loss);
  rec.artifact("hypersphere", (fs::path(out_dir) / "hypersphere").string());
  rec.write(out_dir);
  std::cout << "hypersphere R=" << sphere.radius << " after "
            << sphere.training_log.size() << " epochs; artifacts in " << out_dir
            << "\n";
  return 0;
}

int cmd_verify(const std::string& sphere_path, const std::string& reference_src,
               const std::string& suspect_src, double threshold, int64_t batch,
               int64_t replicates, int64_t seed, const std::string& out_dir) {
  RunRecord rec("verify", seed);
  pipeline::Hypersphere sphere = pipeline::Hypersphere::load(sphere_path);
  Rng rng(static_cast<uint64_t>(seed));
  ImageSource reference(reference_src, sphere.spec.image_shape, rng.fork(1));
  ImageSource suspect(suspect_src, sphere.spec.image_shape, rng.fork(2));

  verification::Verdict v =
      replicated_verify(sphere, reference, suspect, batch, replicates, threshold);

  fs::create_directories(out_dir);
  std::ofstream vf(fs::path(out_dir) / "verdict.json");
  vf << v.to_json() << "\n";
  rec.metric("mean_auc", v.auc);
  rec.metric("is_pirated", v.is_pirated);
  rec.metric("replicate_aucs", v.replicate_aucs);
  rec.write(out_dir);
  std::cout << "mean AUC over " << replicates << " replicates: " << v.auc
            << " (threshold " << threshold << ") -> "
            << (v.is_pirated ? "PIRATED" : "not pirated") << "\n";
  return 0;
}

int cmd_attack(const std::string& sphere_path, const std::string& gen_path,
               const std::string& attack_spec, const std::string& sweep,
               int64_t batch, int64_t replicates, int64_t seed,
               const std::string& out_dir) {
  RunRecord rec("attack", seed);
  pipeline::Hypersphere sphere = pipeline::Hypersphere::load(sphere_path);
  models::Generator G = models::Generator::load(gen_path);

  std::vector<double> points;
  if (!sweep.empty()) {
    std::stringstream ss(sweep);
    std::string tok;
    while (std::getline(ss, tok, ',')) points.push_back(std::stod(tok));
  }

  bool is_prune = attack_spec == "prune" || attack_spec.rfind("prune:", 0) == 0;
  attacks::TransformationSpec tspec;
  if (!is_prune) {
    tspec = attacks::TransformationSpec::parse(attack_spec);
    tspec.seed = seed;
    if (points.empty()) points.push_back(tspec.magnitude);
  } else if (points.empty()) {
    size_t colon = attack_spec.find(':');
    points.push_back(colon == std::string::npos
                         ? 0.2
                         : std::stod(attack_spec.substr(colon + 1)));
  }

  fs::create_directories(out_dir);
  std::ofstream csv(fs::path(out_dir) / "attack_log.csv");
  csv << "attack,magnitude,mean_auc,mean_ssim,is_pirated\n";

  Rng rng(static_cast<uint64_t>(seed));
  json sweep_metrics = json::array();
  for (double mag : points) {
    Rng ref_rng = rng.fork(101);
    Rng sus_rng = rng.fork(202);
    double auc_sum = 0.0, ssim_sum = 0.0;
    std::string label;
    for (int64_t r = 0; r < replicates; ++r) {
      Tensor reference;
      {
        Tensor z = models::sample_latents(batch, G.latent_dim(), ref_rng);
        reference = G.generate(z, false);
      }
      Tensor z = models::sample_latents(batch, G.latent_dim(), sus_rng);
      Tensor clean = G.generate(z, false);
      Tensor suspect;
      if (is_prune) {
        models::Generator Gp = attacks::prune_generator(G, mag, seed);
        suspect = Gp.generate(z, false);
        label = "prune";
      } else {
        attacks::TransformationSpec s = tspec;
        if (s.kind == attacks::TransformKind::blur)
          s.blur_sigma = mag;
        else
          s.magnitude = mag;
        s.seed = seed + r;
        suspect = attacks::transform_images(clean, s);
        label = s.describe();
      }
      auc_sum += verification::verify(sphere, reference, suspect).auc;
      ssim_sum += verification::mean_ssim(clean, suspect);
    }
    double mean_auc = auc_sum / static_cast<double>(replicates);
    double mean_ssim = ssim_sum / static_cast<double>(replicates);
    bool pirated = mean_auc < 0.60;
    csv << label << "," << mag << "," << mean_auc << "," << mean_ssim << ","
        << (pirated ? "true" : "false") << "\n";
    sweep_metrics.push_back({{"magnitude", mag},
                             {"mean_auc", mean_auc},
                             {"mean_ssim", mean_ssim},
                             {"is_pirated", pirated}});
    std::cout << label << " @ " << mag << ": AUC " << mean_auc << ", SSIM "
              << mean_ssim << (pirated ? " -> PIRATED" : " -> not pirated")
              << "\n";
  }
  rec.metric("sweep", sweep_metrics);
  rec.write(out_dir);
  return 0;
}

int cmd_report(const std::string& dir) {
  bool found = false;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.path().filename() != "run_record.json") continue;
    found = true;
    std::ifstream in(entry.path());
    json j;
    in >> j;
    std::cout << entry.path().parent_path().string() << ": "
              << j.value("command", "?") << " (seed " << j.value("seed", 0)
              << ", " << j.value("wall_clock_seconds", 0.0) << "s)\n";
    for (auto& [k, v] : j["metrics"].items())
      std::cout << "  " << k << " = " << v.dump() << "\n";
  }
  if (!found) std::cout << "no run records under " << dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Box-free GAN ownership verification"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir;
  auto* train = app.add_subcommand("train", "Train a GAN pair on a dataset");
  train->add_option("--config", config_path, "key=value config file")->required();
  train->add_option("--data", data_dir, "directory of PNG/JPEG images")->required();
  train->add_option("--out", out_dir, "output directory")->required();

  std::string gen_path, disc_path;
  bool ambiguity = false;
  auto* empower = app.add_subcommand("empower", "Fit the verification hypersphere");
  empower->add_option("--generator", gen_path)->required();
  empower->add_option("--discriminator", disc_path);
  empower->add_option("--config", config_path)->required();
  empower->add_option("--out", out_dir)->required();
  empower->add_flag("--ambiguity", ambiguity,
                    "random-initialized encoder (forgery baseline)");

  std::string sphere_path, reference_src, suspect_src;
  double threshold = 0.60;
  int64_t batch = 500, replicates = 10, seed = 0;
  auto* verify = app.add_subcommand("verify", "Render an ownership verdict");
  verify->add_option("--sphere", sphere_path)->required();
  verify->add_option("--reference", reference_src,
                     "generator artifact or image directory")->required();
  verify->add_option("--suspect", suspect_src,
                     "generator artifact or image directory")->required();
  verify->add_option("--threshold", threshold);
  verify->add_option("--batch", batch);
  verify->add_option("--replicates", replicates);
  verify->add_option("--seed", seed);
  verify->add_option("--out", out_dir)->required();

  std::string attack_spec, sweep;
  auto* attack = app.add_subcommand("attack", "Attack sweep against a pirated copy");
  attack->add_option("--sphere", sphere_path)->required();
  attack->add_option("--generator", gen_path)->required();
  attack->add_option("--attack", attack_spec,
                     "prune | noise:eps | blur:ks,sigma | jpeg:q | crop:frac")
      ->required();
  attack->add_option("--sweep", sweep, "comma-separated magnitudes");
  attack->add_option("--batch", batch);
  attack->add_option("--replicates", replicates);
  attack->add_option("--seed", seed);
  attack->add_option("--out", out_dir)->required();

  std::string report_dir;
  auto* report = app.add_subcommand("report", "Summarize run records");
  report->add_option("--dir", report_dir)->required();

  try {
    app.parse(argc, argv);
    if (train->parsed()) return cmd_train(config_path, data_dir, out_dir);
    if (empower->parsed()) {
      if (!ambiguity && disc_path.empty())
        throw ValidationError("empower: --discriminator required without --ambiguity");
      return cmd_empower(gen_path, disc_path, config_path, out_dir, ambiguity);
    }
    if (verify->parsed())
      return cmd_verify(sphere_path, reference_src, suspect_src, threshold,
                        batch, replicates, seed, out_dir);
    if (attack->parsed())
      return cmd_attack(sphere_path, gen_path, attack_spec, sweep, batch,
                        replicates, seed, out_dir);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
