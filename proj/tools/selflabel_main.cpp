#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "selflabel/checkpoint.hpp"
#include "selflabel/config.hpp"
#include "selflabel/eval.hpp"
#include "selflabel/kernels.hpp"
#include "selflabel/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace selflabel;

namespace {

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path + " for checksum");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (is.read(buf, sizeof(buf)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

Dataset load_run_dataset(const RunConfig& cfg) {
  if (!cfg.data_path.empty())
    return load_csv(cfg.data_path, cfg.data_has_labels);
  Rng data_rng = Rng(cfg.train.seed).split("data");
  return make_blobs(data_rng, cfg.blob_classes, cfg.blob_per_class, cfg.blob_dim,
                    cfg.blob_spread);
}

void dump_embedding(const ModelParams& params, const Dataset& ds,
                    const std::string& path) {
  ForwardResult res = forward_eval(params, ds.x);
  std::ofstream os(path, std::ios::trunc);
  for (std::size_t i = 0; i < res.latent.rows(); ++i) {
    for (std::size_t j = 0; j < res.latent.cols(); ++j) {
      if (j) os << ',';
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", res.latent(i, j));
      os << buf;
    }
    os << '\n';
  }
}

int cmd_train(const std::string& config_path, const TomlTable& overrides,
              const std::string& out_dir) {
  RunConfig cfg;
  TomlTable table;
  if (!config_path.empty()) table = parse_toml_file(config_path);
  for (const auto& [k, v] : overrides) table[k] = v;
  cfg = run_config_from_toml(table);

  fs::create_directories(out_dir);
  Dataset ds = load_run_dataset(cfg);

  ordered_json manifest;
  manifest["format"] = "selflabel-manifest-v1";
  manifest["command"] = "train";
  manifest["seed"] = cfg.train.seed;
  manifest["config"] = run_config_to_string(cfg);
  manifest["input"] = cfg.data_path.empty()
                          ? ordered_json{{"provenance", ds.provenance}}
                          : ordered_json{{"path", cfg.data_path},
                                         {"fnv1a64", hex(fnv1a64_file(cfg.data_path))}};
  manifest["outputs"] = {out_dir + "/telemetry.ndjson", out_dir + "/checkpoint.bin",
                         out_dir + "/embedding.csv"};
  {
    std::ofstream os(out_dir + "/manifest.json", std::ios::trunc);
    os << manifest.dump(2) << '\n';
  }

  std::ofstream telemetry(out_dir + "/telemetry.ndjson", std::ios::trunc);
  TrainerSinks sinks;
  sinks.on_step = [&](const StepRecord& r) {
    ordered_json rec{{"step", r.step},   {"epoch", r.epoch},
                     {"loss", r.loss},   {"lambda", r.lambda},
                     {"h_q", r.h_q},     {"h_target", r.h_target},
                     {"lr", r.lr},       {"mean_grad_norm", r.mean_grad_norm}};
    telemetry << rec.dump() << '\n';
  };
  sinks.on_checkpoint = [&](std::size_t epoch, const ModelParams& p) {
    save_checkpoint(p, out_dir + "/checkpoint_epoch" + std::to_string(epoch) + ".bin");
  };

  TrainedModel model = fit(ds, cfg.train, sinks);
  save_checkpoint(model.params, out_dir + "/checkpoint.bin");
  dump_embedding(model.params, ds, out_dir + "/embedding.csv");

  std::cout << "trained " << model.report.steps << " steps in "
            << model.report.wall_seconds << " s; outputs in " << out_dir << "\n";
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_path,
             bool has_labels, std::size_t target_cols,
             std::vector<std::string> metrics, std::uint64_t seed,
             const std::string& out_prefix) {
  ModelParams params = load_checkpoint(ckpt_path);
  Dataset ds = load_csv(data_path, has_labels, target_cols);
  if (ds.dim() != params.input_dim())
    throw std::runtime_error("eval: dataset has d=" + std::to_string(ds.dim()) +
                             " but checkpoint expects d=" +
                             std::to_string(params.input_dim()));

  if (metrics.empty()) {
    metrics = {"probe", "knn", "kmeans"};
    if (ds.targets) metrics.push_back("rss");
  }

  ForwardResult res = forward_eval(params, ds.x);
  const DenseMatrix& z = res.latent;

  ordered_json report;
  report["checkpoint"] = ckpt_path;
  report["dataset"] = data_path;
  report["dataset_fnv1a64"] = hex(fnv1a64_file(data_path));
  report["seed"] = seed;

  for (const std::string& metric : metrics) {
    if (metric == "probe" || metric == "knn" || metric == "kmeans") {
      if (!ds.labels) throw std::runtime_error("eval: metric '" + metric + "' needs labels");
    }
    if (metric == "probe") {
      // Deterministic 80/20 split by shuffled index.
      const std::size_t n = ds.n();
      std::vector<std::size_t> order(n);
      for (std::size_t i = 0; i < n; ++i) order[i] = i;
      Rng split_rng = Rng(seed).split("probe-split");
      for (std::size_t i = n; i-- > 1;)
        std::swap(order[i], order[(std::size_t)split_rng.next_below(i + 1)]);
      const std::size_t n_train = n - n / 5;
      DenseMatrix ztr(n_train, z.cols()), zte(n - n_train, z.cols());
      std::vector<int> ytr(n_train), yte(n - n_train);
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t src = order[i];
        if (i < n_train) {
          for (std::size_t j = 0; j < z.cols(); ++j) ztr(i, j) = z(src, j);
          ytr[i] = (*ds.labels)[src];
        } else {
          for (std::size_t j = 0; j < z.cols(); ++j) zte(i - n_train, j) = z(src, j);
          yte[i - n_train] = (*ds.labels)[src];
        }
      }
      report["linear_acc"] = eval::linear_probe(ztr, ytr, zte, yte);
    } else if (metric == "knn") {
      report["knn21"] = eval::graph_eval_knn(z, *ds.labels);
    } else if (metric == "kmeans") {
      int c = 0;
      for (int l : *ds.labels) c = std::max(c, l + 1);
      auto km = eval::kmeans_cluster(z, (std::size_t)c, 20, seed);
      auto cm = eval::clustering_metrics(km.assignment, *ds.labels);
      report["kmeans_acc"] = cm.acc;
      report["nmi"] = cm.nmi;
      report["ari"] = cm.ari;
    } else if (metric == "rss") {
      if (!ds.targets) throw std::runtime_error("eval: metric 'rss' needs targets");
      report["rss"] = eval::linear_regression_rss(z, *ds.targets);
    } else {
      throw std::runtime_error("eval: unknown metric '" + metric + "'");
    }
  }

  {
    std::ofstream os(out_prefix + ".json", std::ios::trunc);
    os << report.dump(2) << '\n';
  }
  {
    std::ofstream os(out_prefix + ".csv", std::ios::trunc);
    bool first = true;
    for (auto& [k, v] : report.items()) {
      os << (first ? "" : ",") << k;
      first = false;
    }
    os << '\n';
    first = true;
    for (auto& [k, v] : report.items()) {
      os << (first ? "" : ",") << (v.is_number() ? v.dump() : v.get<std::string>());
      first = false;
    }
    os << '\n';
  }
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_sinkhorn_demo(std::size_t m, std::size_t k, std::vector<double> lambdas,
                      std::size_t iters, std::uint64_t seed, std::size_t rows,
                      const std::string& out) {
  if (lambdas.empty()) lambdas = {0.5, 1.0, 1.5, 2.0};
  rows = std::min(rows, m);
  Rng rng = Rng(seed).split("sinkhorn-demo");
  DenseMatrix logits = sample_gaussian(rng, m, k);
  DistributionBatch p = softmax_rows(logits);

  std::vector<DenseMatrix> qs;
  std::vector<double> entropies;
  for (double lam : lambdas) {
    auto solved = sinkhorn::solve_with_entropy(logits, lam, iters);
    entropies.push_back(solved.h);
    qs.push_back(solved.plan.q.mat());
  }

  std::ofstream file;
  std::ostream* osp = &std::cout;
  if (!out.empty() && out != "-") {
    file.open(out, std::ios::trunc);
    osp = &file;
  }
  std::ostream& os = *osp;
  os.precision(17);
  // One line per sampled row: the P block, then one Q block per lambda.
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < k; ++j) os << (j ? "," : "") << p.mat()(i, j);
    for (const auto& q : qs)
      for (std::size_t j = 0; j < k; ++j) os << ',' << q(i, j);
    os << '\n';
  }
  os << '\n' << "lambda,h_q\n";
  for (std::size_t li = 0; li < lambdas.size(); ++li)
    os << lambdas[li] << ',' << entropies[li] << '\n';
  return 0;
}

int cmd_gen_data(const std::string& kind, std::size_t classes, std::size_t per_class,
                 std::size_t dim, double spread, std::size_t n, double noise,
                 std::uint64_t seed, const std::string& out) {
  Rng rng = Rng(seed).split("data");
  Dataset ds = kind == "moons" ? make_two_moons(rng, n, noise)
                               : make_blobs(rng, classes, per_class, dim, spread);
  save_csv(ds, out);
  std::cout << "wrote " << ds.n() << " x " << ds.dim() << " (" << ds.provenance
            << ") to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("SELFLABEL_THREADS"))
    kernels::set_max_threads(std::atoi(t));

  CLI::App app{"Self-labelling representation learner with adversarial views"};
  app.require_subcommand(1);
  if (argc <= 1) {
    std::cerr << app.help();
    return 1;
  }

  // train
  auto* train = app.add_subcommand("train", "Train a model from a TOML config");
  std::string config_path, out_dir = "run";
  train->add_option("--config", config_path, "TOML config file");
  train->add_option("--out", out_dir, "Output directory");
  // Flat overrides mirroring the config keys.
  std::map<std::string, std::string> str_over;
  std::map<std::string, double> num_over;
  std::map<std::string, bool> bool_over;
  auto add_num = [&](const std::string& key) {
    train->add_option_function<double>(
        "--" + key, [&num_over, key](double v) { num_over[key] = v; });
  };
  auto add_str = [&](const std::string& key) {
    train->add_option_function<std::string>(
        "--" + key, [&str_over, key](const std::string& v) { str_over[key] = v; });
  };
  auto add_bool = [&](const std::string& key) {
    train->add_option_function<bool>(
        "--" + key, [&bool_over, key](bool v) { bool_over[key] = v; });
  };
  for (const char* key : {"batch_size", "output_dim", "embedding_dim", "epochs",
                          "lr_initial", "lr_after_drop", "lr_drop_epoch", "seed",
                          "xi", "epsilon", "h_tol", "h_step", "sinkhorn_iters",
                          "checkpoint_every", "log_every", "blob_classes",
                          "blob_per_class", "blob_dim", "blob_spread"})
    add_num(key);
  for (const char* key : {"mode", "bn_placement", "data_path"}) add_str(key);
  for (const char* key : {"epsilon_auto", "data_has_labels"}) add_bool(key);

  // eval
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset");
  std::string ckpt_path, data_path, out_prefix = "metrics";
  bool has_labels = true;
  std::size_t target_cols = 0;
  std::vector<std::string> metrics;
  std::uint64_t eval_seed = 0;
  evalc->add_option("--checkpoint", ckpt_path, "Checkpoint file")->required();
  evalc->add_option("--data", data_path, "Dataset CSV")->required();
  evalc->add_flag("--has-labels,!--no-labels", has_labels, "Last column holds labels");
  evalc->add_option("--target-cols", target_cols, "Trailing regression target columns");
  evalc->add_option("--metrics", metrics, "Subset: probe knn kmeans rss");
  evalc->add_option("--seed", eval_seed, "Evaluation seed");
  evalc->add_option("--out", out_prefix, "Output prefix (.json/.csv)");

  // sinkhorn-demo
  auto* demo = app.add_subcommand("sinkhorn-demo",
                                  "Emit P, Q(lambda) rows and the H(Q) table as CSV");
  std::size_t demo_m = 256, demo_k = 100, demo_iters = sinkhorn::kDefaultIters,
              demo_rows = 1;
  std::vector<double> demo_lambdas;
  std::uint64_t demo_seed = 0;
  std::string demo_out = "-";
  demo->add_option("--m", demo_m, "Batch size");
  demo->add_option("--k", demo_k, "Distribution length");
  demo->add_option("--lambda", demo_lambdas, "Lambda values");
  demo->add_option("--iters", demo_iters, "Sinkhorn iterations");
  demo->add_option("--seed", demo_seed, "Seed for the random logits");
  demo->add_option("--rows", demo_rows, "Rows to emit");
  demo->add_option("--out", demo_out, "Output file ('-' = stdout)");

  // gen-data
  auto* gend = app.add_subcommand("gen-data", "Generate a synthetic dataset CSV");
  std::string gen_kind = "blobs", gen_out = "data.csv";
  std::size_t gen_classes = 4, gen_per_class = 500, gen_dim = 32, gen_n = 1000;
  double gen_spread = 0.5, gen_noise = 0.05;
  std::uint64_t gen_seed = 0;
  gend->add_option("--kind", gen_kind, "blobs or moons")
      ->check(CLI::IsMember({"blobs", "moons"}));
  gend->add_option("--classes", gen_classes, "Blob classes");
  gend->add_option("--per-class", gen_per_class, "Points per class");
  gend->add_option("--dim", gen_dim, "Blob dimensionality");
  gend->add_option("--spread", gen_spread, "Blob spread");
  gend->add_option("--n", gen_n, "Moons point count");
  gend->add_option("--noise", gen_noise, "Moons noise sigma");
  gend->add_option("--seed", gen_seed, "Seed");
  gend->add_option("--out", gen_out, "Output CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      TomlTable overrides;
      for (const auto& [k, v] : num_over) overrides[k] = v;
      for (const auto& [k, v] : str_over) overrides[k] = v;
      for (const auto& [k, v] : bool_over) overrides[k] = v;
      return cmd_train(config_path, overrides, out_dir);
    }
    if (evalc->parsed())
      return cmd_eval(ckpt_path, data_path, has_labels, target_cols, metrics,
                      eval_seed, out_prefix);
    if (demo->parsed())
      return cmd_sinkhorn_demo(demo_m, demo_k, demo_lambdas, demo_iters, demo_seed,
                               demo_rows, demo_out);
    if (gend->parsed())
      return cmd_gen_data(gen_kind, gen_classes, gen_per_class, gen_dim, gen_spread,
                          gen_n, gen_noise, gen_seed, gen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
