// End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any criterion fails.
//
// Criteria 3-8 run a statistical toy benchmark: small DCGAN-family models
// on synthetic blob images, multiple seeds, ordering-level assertions.
// The toy sizes below were calibrated once on this benchmark and then
// pinned; GANOV_ACCEPT_SEEDS overrides the seed count for development.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <immintrin.h>

#include <opencv2/imgcodecs.hpp>

#include "ganov/attacks.hpp"
#include "ganov/losses.hpp"
#include "ganov/pipeline.hpp"
#include "ganov/verification.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace ganov;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int criterion, const std::string& label, bool pass,
            const std::string& detail) {
  std::printf("CRITERION %d (%s): %s%s%s\n", criterion, label.c_str(),
              pass ? "PASS" : "FAIL", detail.empty() ? "" : " — ",
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------- toy bench

constexpr int64_t kToyLatent = 16;
constexpr int64_t kToyBase = 16;
constexpr int64_t kToyIters = 1200;
constexpr int64_t kToyBatch = 16;
constexpr int64_t kToyDistSet = 256;
constexpr int64_t kToyDataset = 2048;
constexpr int64_t kVerifyBatch = 128;
constexpr int kReplicates = 10;

int seed_count() {
  if (const char* env = std::getenv("GANOV_ACCEPT_SEEDS")) {
    int n = std::atoi(env);
    if (n >= 2) return n;
  }
  return 10;
}

ExperimentConfig toy_config(int64_t seed, const std::string& arch) {
  ExperimentConfig cfg;
  cfg.latent_dim = kToyLatent;
  cfg.image_shape = {3, 32, 32};
  cfg.base_width = kToyBase;
  cfg.gan_iterations = kToyIters;
  cfg.gan_batch_size = kToyBatch;
  cfg.distribution_set_size = kToyDistSet;
  cfg.sphere_batch_size = 64;
  // At toy scale the default encoder step size collapses representations
  // onto the center within the epoch budget, which inverts score orderings.
  cfg.sphere_learning_rate = 1e-4;
  cfg.verification_batch_size = kVerifyBatch;
  cfg.seed = seed;
  cfg.architecture_id = arch;
  cfg.validate();
  return cfg;
}

struct SeedArtifacts {
  models::Generator g_main;
  models::Generator g_sn;
  pipeline::Hypersphere sph_disc;
  pipeline::Hypersphere sph_amb;
};

SeedArtifacts build_seed(int64_t seed, const Dataset& data) {
  auto t0 = std::chrono::steady_clock::now();

  auto cfg = toy_config(seed, "dcgan");
  Rng rng(static_cast<uint64_t>(seed));
  models::Generator g(cfg, rng);
  models::Discriminator d(cfg, rng);
  pipeline::train_gan(g, d, data, cfg, rng);

  double t_gan1 = elapsed_s(t0);

  auto cfg_sn = toy_config(seed, "dcgan_sn");
  Rng rng_sn(static_cast<uint64_t>(seed));
  models::Generator g_sn(cfg_sn, rng_sn);
  models::Discriminator d_sn(cfg_sn, rng_sn);
  pipeline::train_gan(g_sn, d_sn, data, cfg_sn, rng_sn);

  double t_gan2 = elapsed_s(t0);

  Rng rng_d = rng.fork(11);
  auto dprime = pipeline::build_distribution_set(g, cfg.distribution_set_size,
                                                 rng_d);
  Rng rng_s = rng.fork(12);
  pipeline::Hypersphere sph = pipeline::train_hypersphere(d, dprime, cfg, rng_s);
  double t_sph = elapsed_s(t0);
  Rng rng_a = rng.fork(13);
  pipeline::Hypersphere amb = attacks::ambiguity_train(dprime, cfg, rng_a);

  std::fprintf(stderr,
               "[bench] seed %lld built in %.1fs (gan %.1f + %.1f, sphere %.1f,"
               " ambiguity %.1f; sphere epochs %zu/%zu)\n",
               static_cast<long long>(seed), elapsed_s(t0), t_gan1,
               t_gan2 - t_gan1, t_sph - t_gan2, elapsed_s(t0) - t_sph,
               sph.training_log.size(), amb.training_log.size());
  return SeedArtifacts{std::move(g), std::move(g_sn), std::move(sph),
                       std::move(amb)};
}

using ImageMap = std::function<Tensor(const Tensor&)>;

// Mean verification AUC over fresh replicate batches; reference images
// come from gref, suspect images from gsus (optionally transformed).
double mean_auc(const pipeline::Hypersphere& h, models::Generator& gref,
                models::Generator& gsus, Rng& rng,
                const ImageMap& sus_map = {}) {
  double acc = 0.0;
  for (int r = 0; r < kReplicates; ++r) {
    Tensor zr = models::sample_latents(kVerifyBatch, gref.latent_dim(), rng);
    Tensor zs = models::sample_latents(kVerifyBatch, gsus.latent_dim(), rng);
    Tensor ref = gref.generate(zr);
    Tensor sus = gsus.generate(zs);
    if (sus_map) sus = sus_map(sus);
    acc += verification::verify(h, ref, sus).auc;
  }
  return acc / kReplicates;
}

// ----------------------------------------------------------- criterion 1

void criterion_formulas() {
  std::ostringstream fail;

  Rng rng(12345);
  // Pearson against the formula oracle, 1000 random pairs.
  for (int t = 0; t < 1000; ++t) {
    size_t n = static_cast<size_t>(rng.randint(2, 64));
    std::vector<float> z(n), zh(n);
    for (auto& v : z) v = rng.uniform(-2.0f, 2.0f);
    for (auto& v : zh) v = rng.uniform(-2.0f, 2.0f);
    double mine = losses::pearson_correlation(z, zh);
    double ref = oracles::pearson(z, zh);
    ref = std::clamp(ref, -1.0, 1.0);
    if (std::fabs(mine - ref) > 1e-9) {
      fail << "pearson oracle mismatch " << mine - ref << "; ";
      break;
    }
  }
  {
    std::vector<float> z = {0.3f, -1.2f, 0.7f, 2.0f, -0.4f};
    std::vector<float> neg = z, aff = z;
    for (auto& v : neg) v = -v;
    for (auto& v : aff) v = 3.5f * v - 1.25f;
    if (std::fabs(losses::pearson_correlation(z, z) - 1.0) > 1e-6)
      fail << "rho(z,z) != 1; ";
    if (std::fabs(losses::pearson_correlation(z, neg) + 1.0) > 1e-6)
      fail << "rho(z,-z) != -1; ";
    if (std::fabs(losses::pearson_correlation(z, aff) - 1.0) > 1e-6)
      fail << "affine invariance; ";
  }

  // Compactness against the term-by-term oracle, 1000 random instances.
  for (int t = 0; t < 1000; ++t) {
    int64_t m = rng.randint(1, 16), d = rng.randint(1, 8);
    Tensor reps({m, d});
    std::vector<std::vector<float>> rows(static_cast<size_t>(m));
    for (int64_t i = 0; i < m; ++i) {
      rows[static_cast<size_t>(i)].resize(static_cast<size_t>(d));
      for (int64_t j = 0; j < d; ++j) {
        float v = rng.uniform(-2.0f, 2.0f);
        reps.data[static_cast<size_t>(i * d + j)] = v;
        rows[static_cast<size_t>(i)][static_cast<size_t>(j)] = v;
      }
    }
    std::vector<float> c(static_cast<size_t>(d));
    for (auto& v : c) v = rng.uniform(-1.0f, 1.0f);
    double R = rng.uniform(0.0f, 2.0f);
    double nu = rng.uniform(0.05f, 1.0f);
    double mine = losses::compactness_loss(reps, c, R, nu).total;
    double ref = oracles::compactness(rows, c, R, nu);
    if (std::fabs(mine - ref) > 1e-9 || mine < 0.0) {
      fail << "compactness oracle mismatch; ";
      break;
    }
  }

  // AUC against exhaustive pair counting, 500 batch pairs; identities.
  for (int t = 0; t < 500; ++t) {
    std::vector<double> a(static_cast<size_t>(rng.randint(1, 30)));
    std::vector<double> b(static_cast<size_t>(rng.randint(1, 30)));
    for (auto& v : a) v = rng.randint(0, 12);
    for (auto& v : b) v = rng.randint(0, 12);
    using verification::ScoreBatch;
    using verification::ScoreOrigin;
    double fast = verification::auc({a, ScoreOrigin::reference},
                                    {b, ScoreOrigin::suspect});
    double rev = verification::auc({b, ScoreOrigin::reference},
                                   {a, ScoreOrigin::suspect});
    double self = verification::auc({a, ScoreOrigin::reference},
                                    {a, ScoreOrigin::suspect});
    if (fast != oracles::auc_pairs(a, b) || self != 0.5 ||
        fast + rev != 1.0) {
      fail << "auc oracle mismatch; ";
      break;
    }
  }

  // Radius line search beats or ties a dense grid on 100 sets.
  for (int t = 0; t < 100; ++t) {
    std::vector<double> d(static_cast<size_t>(rng.randint(1, 25)));
    for (auto& v : d) v = rng.uniform(0.0f, 4.0f);
    double nu = rng.uniform(0.05f, 1.0f);
    double R = pipeline::line_search_radius(d, nu);
    double mine = R * R, viol = 0.0;
    for (double x : d)
      if (x > mine) viol += x - mine;
    mine += viol / (nu * static_cast<double>(d.size()));
    if (mine > oracles::radius_grid_search(d, nu).objective + 1e-6) {
      fail << "line search above grid optimum; ";
      break;
    }
  }

  // Gradient checks against central differences, away from the kink.
  {
    std::vector<float> z = {1.1f, -0.4f, 0.9f, -2.0f, 0.3f, 1.7f};
    std::vector<float> zh = {0.2f, 0.5f, -1.0f, 0.8f, 1.5f, -0.6f};
    auto g = losses::pearson_grad(z, zh);
    for (size_t i = 0; i < zh.size(); ++i) {
      auto f = [&](double x) {
        std::vector<float> p = zh;
        p[i] = static_cast<float>(x);
        return losses::pearson_correlation(z, p);
      };
      double fd = oracles::central_diff(f, zh[i], 1e-3);
      if (std::fabs(g[i] - fd) / std::max(std::fabs(fd), 1e-6) > 1e-4) {
        fail << "pearson grad fd mismatch; ";
        break;
      }
    }
    Tensor reps({3, 2});
    reps.data = {1.5f, 0.2f, -0.3f, 0.1f, 0.9f, -1.4f};
    std::vector<float> c = {0.1f, -0.2f};
    double R = 0.8, nu = 0.35;
    Tensor gr = losses::compactness_grad(reps, c, R, nu);
    for (size_t i = 0; i < reps.data.size(); ++i) {
      auto f = [&](double x) {
        Tensor p = reps;
        p.data[i] = static_cast<float>(x);
        return losses::compactness_loss(p, c, R, nu).total;
      };
      // h large enough that float-quantizing the probe is negligible;
      // the fixed rows sit well away from the hinge kink.
      double fd = oracles::central_diff(f, reps.data[i], 1e-2);
      double an = gr.data[i];
      double rel =
          std::fabs(an - fd) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
      if (rel > 1e-4) {
        fail << "compactness grad fd mismatch; ";
        break;
      }
    }
  }

  // SSIM identities.
  {
    Tensor img = testutil::random_images(1, {3, 16, 16}, 99)
                     .reshaped({3, 16, 16});
    if (std::fabs(verification::ssim(img, img) - 1.0) > 1e-9)
      fail << "ssim(x,x) != 1; ";
    Tensor a({3, 12, 12}), b({3, 12, 12});
    for (auto& v : a.data) v = 0.2f;
    for (auto& v : b.data) v = -0.6f;
    // Oracle args go through the same float remap the implementation applies.
    if (std::fabs(verification::ssim(a, b) -
                  oracles::ssim_constant((static_cast<double>(0.2f) + 1.0) * 0.5,
                                         (static_cast<double>(-0.6f) + 1.0) *
                                             0.5)) > 1e-9)
      fail << "ssim constant closed form; ";
  }

  report(1, "formula exactness", fail.str().empty(), fail.str());
}

// ----------------------------------------------------------- criterion 2

std::string q(const std::string& s) { return "\"" + s + "\""; }

bool run_cli(const std::string& cmd) {
  int rc = std::system((cmd + " >/dev/null 2>&1").c_str());
  return rc == 0;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void criterion_determinism() {
  const char* cli = std::getenv("GANOV_CLI");
  if (!cli) {
    report(2, "pipeline determinism", false, "GANOV_CLI not set");
    return;
  }
  auto t0 = std::chrono::steady_clock::now();
  testutil::TempDir tmp("accept_determinism");
  fs::path root = tmp.path();

  // A small on-disk dataset of synthetic PNGs.
  fs::path data = root / "data";
  fs::create_directories(data);
  {
    ImageShape s{3, 16, 16};
    Rng rng(2024);
    for (int i = 0; i < 48; ++i) {
      Tensor img = testutil::blob_image(s, rng);
      cv::Mat m(16, 16, CV_8UC3);
      for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x)
          for (int c = 0; c < 3; ++c) {
            float v = (img.data[(c * 16 + y) * 16 + x] + 1.0f) * 127.5f;
            m.at<cv::Vec3b>(y, x)[2 - c] = static_cast<uint8_t>(
                std::clamp(std::lround(v), 0L, 255L));
          }
      char name[32];
      std::snprintf(name, sizeof(name), "img_%03d.png", i);
      cv::imwrite((data / name).string(), m);
    }
  }

  fs::path cfg_path = root / "toy.cfg";
  {
    std::ofstream cfg(cfg_path);
    cfg << "latent_dim=8\nimage_shape=3,16,16\n"
        << "base_width=4\ngan_iterations=40\ngan_batch_size=8\n"
        << "distribution_set_size=32\nverification_batch_size=32\n"
        << "sphere_batch_size=16\nseed=5\n";
  }

  auto run_pipeline = [&](const fs::path& out) {
    fs::create_directories(out);
    std::string c = q(cli);
    return run_cli(c + " train --config " + q(cfg_path.string()) + " --data " +
                   q(data.string()) + " --out " + q(out.string())) &&
           run_cli(c + " empower --generator " + q((out / "generator").string()) +
                   " --discriminator " + q((out / "discriminator").string()) +
                   " --config " + q(cfg_path.string()) + " --out " +
                   q(out.string())) &&
           run_cli(c + " verify --sphere " + q((out / "hypersphere").string()) +
                   " --reference " + q((out / "generator").string()) +
                   " --suspect " + q((out / "generator").string()) +
                   " --batch 32 --replicates 3 --seed 7 --out " +
                   q(out.string()));
  };

  bool ok = run_pipeline(root / "run1") && run_pipeline(root / "run2");
  std::ostringstream detail;
  if (!ok) detail << "pipeline command failed";
  if (ok) {
    for (const char* rel :
         {"generator/tensors.bin", "discriminator/tensors.bin",
          "hypersphere/tensors.bin", "verdict.json"}) {
      auto a = slurp(root / "run1" / rel), b = slurp(root / "run2" / rel);
      if (a.empty() || a != b) {
        ok = false;
        detail << rel << " differs between runs; ";
      }
    }
  }
  double secs = elapsed_s(t0);
  if (secs > 2700.0) {
    ok = false;
    detail << "runtime bound exceeded";
  }
  std::ostringstream d2;
  d2 << detail.str() << "toy pipeline x2 in " << static_cast<int>(secs) << "s";
  report(2, "pipeline determinism", ok, d2.str());
}

// ------------------------------------------------------- criteria 3 to 8

void criteria_benchmark() {
  const int S = seed_count();
  Dataset data = testutil::blob_dataset(kToyDataset, {3, 32, 32}, 4242);

  std::vector<SeedArtifacts> runs;
  runs.reserve(static_cast<size_t>(S));
  for (int s = 0; s < S; ++s) runs.push_back(build_seed(100 + s, data));

  const int need = (S * 8 + 9) / 10;  // >= 8/10 scaled to the seed count

  // Criterion 3: self verdict.
  std::vector<double> self_auc(static_cast<size_t>(S));
  {
    int good = 0;
    for (int s = 0; s < S; ++s) {
      Rng rng(9000 + static_cast<uint64_t>(s));
      double a = mean_auc(runs[s].sph_disc, runs[s].g_main, runs[s].g_main, rng);
      self_auc[static_cast<size_t>(s)] = a;
      if (a >= 0.45 && a <= 0.60 && a < 0.60) ++good;
    }
    std::ostringstream d;
    d << good << "/" << S << " seeds with self AUC in [0.45,0.60); values ";
    for (double a : self_auc) d << a << " ";
    report(3, "self verdict", good >= need, d.str());
  }

  // Criterion 4: cross-architecture separation.
  {
    int good = 0;
    std::ostringstream d;
    for (int s = 0; s < S; ++s) {
      Rng rng(9100 + static_cast<uint64_t>(s));
      double a = mean_auc(runs[s].sph_disc, runs[s].g_main, runs[s].g_sn, rng);
      d << a << " ";
      if (a >= self_auc[static_cast<size_t>(s)] + 0.10) ++good;
    }
    report(4, "cross-architecture separation", good >= need,
           std::to_string(good) + "/" + std::to_string(S) +
               " pairs with margin >= 0.10; cross AUCs " + d.str());
  }

  // Criterion 5: seed sensitivity.
  {
    int good = 0;
    std::ostringstream d;
    for (int s = 0; s < S; ++s) {
      Rng rng(9200 + static_cast<uint64_t>(s));
      double a = mean_auc(runs[s].sph_disc, runs[s].g_main,
                          runs[(s + 1) % S].g_main, rng);
      d << a << " ";
      if (a > self_auc[static_cast<size_t>(s)]) ++good;
    }
    report(5, "seed sensitivity", good >= need,
           std::to_string(good) + "/" + std::to_string(S) +
               " pairs above own self AUC; cross-seed AUCs " + d.str());
  }

  // Criterion 6: transformation robustness of the verdict.
  {
    bool all_pass = true;
    std::ostringstream d;
    for (const char* text : {"noise:0.05", "blur:3,2", "jpeg:60", "crop:0.15"}) {
      auto spec = attacks::TransformationSpec::parse(text);
      int good = 0;
      double ssim_acc = 0.0;
      for (int s = 0; s < S; ++s) {
        spec.seed = 7000 + s;
        Rng rng(9300 + static_cast<uint64_t>(s));
        double ss = 0.0;
        ImageMap xform = [&](const Tensor& imgs) {
          Tensor out = attacks::transform_images(imgs, spec);
          ss += verification::mean_ssim(imgs, out);
          return out;
        };
        double a = mean_auc(runs[s].sph_disc, runs[s].g_main, runs[s].g_main,
                            rng, xform);
        ssim_acc += ss / kReplicates;
        if (a < 0.60) ++good;
      }
      bool ok = good >= need;
      all_pass = all_pass && ok;
      d << text << " verdict " << good << "/" << S << " ssim "
        << ssim_acc / S << "; ";
    }
    report(6, "transformation robustness", all_pass, d.str());
  }

  // Criterion 7: pruning sweep.
  {
    const double rates[] = {0.0, 0.1, 0.2, 0.4};
    double seed_mean[4] = {0, 0, 0, 0};
    int good_02 = 0;
    for (int s = 0; s < S; ++s) {
      for (int r = 0; r < 4; ++r) {
        models::Generator pruned =
            attacks::prune_generator(runs[s].g_main, rates[r], 500 + s);
        Rng rng(9400 + static_cast<uint64_t>(s * 4 + r));
        double a = mean_auc(runs[s].sph_disc, runs[s].g_main, pruned, rng);
        seed_mean[r] += a / S;
        if (r == 2 && a < 0.60) ++good_02;
      }
    }
    bool monotone = seed_mean[0] <= seed_mean[1] + 1e-12 &&
                    seed_mean[1] <= seed_mean[2] + 1e-12 &&
                    seed_mean[2] <= seed_mean[3] + 1e-12;
    bool ok = monotone && good_02 >= need;
    std::ostringstream d;
    d << "seed-mean AUC at rates {0,0.1,0.2,0.4}: " << seed_mean[0] << " "
      << seed_mean[1] << " " << seed_mean[2] << " " << seed_mean[3]
      << "; rate 0.2 verdict " << good_02 << "/" << S;
    report(7, "pruning sweep", ok, d.str());
  }

  // Criterion 8: ambiguity attack distinguishability.
  {
    int good = 0;
    std::ostringstream d;
    for (int s = 0; s < S; ++s) {
      models::Generator& diff = runs[(s + 1) % S].g_main;
      Rng r1(9500 + static_cast<uint64_t>(s));
      Rng r2(9500 + static_cast<uint64_t>(s));
      double a_disc = mean_auc(runs[s].sph_disc, runs[s].g_main, diff, r1);
      double a_amb = mean_auc(runs[s].sph_amb, runs[s].g_main, diff, r2);
      d << "(" << a_disc << "," << a_amb << ") ";
      if (a_disc >= a_amb + 0.05) ++good;
    }
    report(8, "ambiguity attack", good >= need,
           std::to_string(good) + "/" + std::to_string(S) +
               " pairs with disc-init margin >= 0.05; (disc,random) " +
               d.str());
  }
}

}  // namespace

int main() {
  // Saturated-discriminator gradients produce subnormal floats; flushing them
  // to zero keeps benchmark runtime stable (10x swings otherwise).
  _MM_SET_FLUSH_ZERO_MODE(_MM_FLUSH_ZERO_ON);
  _MM_SET_DENORMALS_ZERO_MODE(_MM_DENORMALS_ZERO_ON);
  auto t0 = std::chrono::steady_clock::now();
  criterion_formulas();
  criterion_determinism();
  criteria_benchmark();
  std::fprintf(stderr, "[bench] acceptance total %.1fs\n", elapsed_s(t0));
  return failures == 0 ? 0 : 1;
}
