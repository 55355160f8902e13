#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ganlab/checkpoint.hpp"
#include "ganlab/dataset.hpp"
#include "ganlab/geometry.hpp"
#include "ganlab/models.hpp"
#include "ganlab/rng.hpp"
#include "ganlab/runconfig.hpp"
#include "ganlab/selfcheck.hpp"
#include "ganlab/simplex.hpp"
#include "ganlab/training.hpp"
#include "ganlab/transfer.hpp"

namespace {

using namespace ganlab;

// Flags overlay a three-layer resolution: command defaults, then an optional
// config file (bare config or a previous run's manifest), then any flag
// passed explicitly. The fully resolved config lands in the manifest.

struct DatasetFlags {
  std::string kind;
  std::size_t modes = 0;
  double radius = 0.0, sigma = 0.0;
  CLI::Option *o_kind = nullptr, *o_modes = nullptr, *o_radius = nullptr,
              *o_sigma = nullptr;

  void attach(CLI::App* sub) {
    o_kind = sub->add_option(
        "--dataset", kind, "gaussian-ring | gaussian-grid | labeled-clusters");
    o_modes = sub->add_option("--modes", modes,
                              "mixture components (grid: per side)");
    o_radius =
        sub->add_option("--radius", radius, "ring radius / grid half-width");
    o_sigma = sub->add_option("--sigma", sigma, "component std deviation");
  }

  void apply(DatasetSpec& spec) const {
    if (o_kind->count() > 0) spec.kind = DatasetSpec::parse_kind(kind);
    if (o_modes->count() > 0) spec.modes = modes;
    if (o_radius->count() > 0) spec.radius = radius;
    if (o_sigma->count() > 0) spec.sigma = sigma;
  }
};

struct ModelFlags {
  std::size_t k = 0, z_dim = 0, feature_dim = 0, shares = 0;
  std::vector<std::size_t> gen_hidden, trunk_hidden;
  double leak = 0.0, init_std = 0.0;
  CLI::Option *o_k = nullptr, *o_z = nullptr, *o_feat = nullptr,
              *o_shares = nullptr, *o_gh = nullptr, *o_th = nullptr,
              *o_leak = nullptr, *o_init = nullptr;

  void attach(CLI::App* sub, bool expose_mgan_knobs) {
    if (expose_mgan_knobs) {
      o_k = sub->add_option("--generators", k, "number of generators");
      o_shares = sub->add_option(
          "--shares-removed", shares,
          "top trunk layers not shared with the classifier extractor");
    }
    o_z = sub->add_option("--z-dim", z_dim, "latent dimension");
    o_gh = sub->add_option("--gen-hidden", gen_hidden,
                           "generator hidden widths, comma separated")
               ->delimiter(',');
    o_th = sub->add_option("--trunk-hidden", trunk_hidden,
                           "extractor hidden widths, comma separated")
               ->delimiter(',');
    o_feat = sub->add_option("--feature-dim", feature_dim,
                             "extractor output width");
    o_leak = sub->add_option("--leak", leak, "LeakyReLU negative slope");
    o_init = sub->add_option("--init-std", init_std,
                             "weight initialization std deviation");
  }

  void apply(MganConfig& cfg) const {
    if (o_k != nullptr && o_k->count() > 0) cfg.k_generators = k;
    if (o_shares != nullptr && o_shares->count() > 0)
      cfg.shares_removed = shares;
    if (o_z->count() > 0) cfg.z_dim = z_dim;
    if (o_gh->count() > 0) cfg.gen_hidden = gen_hidden;
    if (o_th->count() > 0) cfg.trunk_hidden = trunk_hidden;
    if (o_feat->count() > 0) cfg.feature_dim = feature_dim;
    if (o_leak->count() > 0) cfg.leak = leak;
    if (o_init->count() > 0) cfg.init_std = init_std;
  }
};

struct TrainFlags {
  std::size_t steps = 0, real_batch = 0, per_gen = 0, d_steps = 0;
  double beta = 0.0, lr = 0.0, beta1 = 0.0, beta2 = 0.0;
  std::string gen_loss;
  std::uint64_t seed = 0;
  CLI::Option *o_steps = nullptr, *o_rb = nullptr, *o_pg = nullptr,
              *o_ds = nullptr, *o_beta = nullptr, *o_lr = nullptr,
              *o_b1 = nullptr, *o_b2 = nullptr, *o_gl = nullptr,
              *o_seed = nullptr;

  void attach(CLI::App* sub, bool expose_beta) {
    o_steps = sub->add_option("--steps", steps, "training steps");
    o_rb = sub->add_option("--real-batch", real_batch, "real batch size");
    o_pg = sub->add_option("--fake-batch-per-gen", per_gen,
                           "fake samples per generator per step");
    o_ds = sub->add_option("--d-steps", d_steps,
                           "discriminator updates per generator update");
    if (expose_beta) {
      o_beta = sub->add_option("--beta", beta,
                               "classifier term weight in the objective");
    }
    o_lr = sub->add_option("--lr", lr, "Adam learning rate");
    o_b1 = sub->add_option("--adam-beta1", beta1, "Adam beta1");
    o_b2 = sub->add_option("--adam-beta2", beta2, "Adam beta2");
    o_gl = sub->add_option("--gen-loss", gen_loss,
                           "minimax | non-saturating");
    o_seed = sub->add_option("--seed", seed, "run seed");
  }

  void apply(TrainConfig& cfg) const {
    if (o_steps->count() > 0) cfg.steps = steps;
    if (o_rb->count() > 0) cfg.real_batch = real_batch;
    if (o_pg->count() > 0) cfg.per_gen_batch = per_gen;
    if (o_ds->count() > 0) cfg.d_steps_per_g = d_steps;
    if (o_beta != nullptr && o_beta->count() > 0) cfg.beta = beta;
    if (o_lr->count() > 0) cfg.adam.lr = lr;
    if (o_b1->count() > 0) cfg.adam.beta1 = beta1;
    if (o_b2->count() > 0) cfg.adam.beta2 = beta2;
    if (o_gl->count() > 0) cfg.gen_loss = parse_gen_loss(gen_loss);
    if (o_seed->count() > 0) cfg.seed = seed;
  }
};

struct ProbeFlags {
  std::size_t epochs = 0, batch = 0;
  double lr = 0.0, momentum = 0.0;
  std::uint64_t seed = 0;
  CLI::Option *o_epochs = nullptr, *o_batch = nullptr, *o_lr = nullptr,
              *o_mom = nullptr, *o_seed = nullptr;

  void attach(CLI::App* sub, const std::string& prefix) {
    o_epochs = sub->add_option("--" + prefix + "epochs", epochs,
                               "probe training epochs");
    o_batch =
        sub->add_option("--" + prefix + "batch", batch, "probe batch size");
    o_lr = sub->add_option("--" + prefix + "lr", lr, "probe SGD rate");
    o_mom = sub->add_option("--" + prefix + "momentum", momentum,
                            "probe SGD momentum");
    o_seed = sub->add_option("--" + prefix + "seed", seed, "probe seed");
  }

  void apply(ProbeConfig& cfg) const {
    if (o_epochs->count() > 0) cfg.epochs = epochs;
    if (o_batch->count() > 0) cfg.batch = batch;
    if (o_lr->count() > 0) cfg.sgd.lr = lr;
    if (o_mom->count() > 0) cfg.sgd.momentum = momentum;
    if (o_seed->count() > 0) cfg.seed = seed;
  }
};

DiscreteDensity make_density(const std::vector<std::string>& labels,
                             std::vector<double> probs) {
  if (labels.empty()) return DiscreteDensity::from_probs(std::move(probs));
  DiscreteDensity d{labels, std::move(probs)};
  d.validate();
  return d;
}

MganModel load_model(const std::string& path, Checkpoint& ck) {
  ck = Checkpoint::load(path);
  if (!ck.meta.contains("topology")) {
    throw std::runtime_error("checkpoint is missing its topology record");
  }
  MganModel model = build_mgan(config_from_topology(ck.meta.at("topology")), 0);
  checkpoint_to_model(ck, model);
  return model;
}

// ---- subcommand bodies ----

struct SimulateState {
  SimulateConfig cfg;
  std::string config_path, out_dir = "simulate";
  CLI::Option *o_labels = nullptr, *o_pr = nullptr, *o_pg = nullptr,
              *o_rounds = nullptr, *o_config = nullptr;
  std::vector<std::string> labels;
  std::vector<double> p_real, p_gen;
  std::size_t rounds = 0;
};

int run_simulate(SimulateState& st) {
  if (st.o_config->count() > 0) {
    st.cfg = SimulateConfig::from_json(
        load_config_file(st.config_path, "simulate"));
  }
  if (st.o_labels->count() > 0) st.cfg.labels = st.labels;
  if (st.o_pr->count() > 0) st.cfg.p_real = st.p_real;
  if (st.o_pg->count() > 0) st.cfg.p_gen = st.p_gen;
  if (st.o_rounds->count() > 0) st.cfg.rounds = st.rounds;
  if (st.cfg.p_real.empty() || st.cfg.p_gen.empty()) {
    throw std::runtime_error("simulate needs --p-real and --p-gen");
  }

  const DiscreteDensity p_r = make_density(st.cfg.labels, st.cfg.p_real);
  const DiscreteDensity p_g = make_density(st.cfg.labels, st.cfg.p_gen);
  const DynamicsTrajectory traj = run_dynamics(p_r, p_g, st.cfg.rounds);

  const auto dir = resolve_out_dir(st.out_dir);
  {
    std::ofstream out(dir / "trajectory.jsonl");
    traj.to_jsonl(out);
  }
  write_manifest(dir, "simulate", st.cfg.to_json(), 0, {"trajectory.jsonl"});

  const auto& last = traj.steps.back();
  std::cout << "steps recorded: " << traj.steps.size() << "\n"
            << "final value C(G) = " << last.value
            << " (floor -log4 = " << -std::log(4.0) << ")\n"
            << "final collapse metric = " << last.collapse << "\n"
            << "wrote " << (dir / "trajectory.jsonl").string() << "\n";
  return 0;
}

struct TrainState {
  std::string config_path, out_dir;
  CLI::Option* o_config = nullptr;
  DatasetFlags data;
  ModelFlags model;
  TrainFlags train;
};

int run_train(TrainState& st, bool mgan) {
  const std::string cmd = mgan ? "train-mgan" : "train-gan";
  TrainRunConfig cfg;
  if (!mgan) {
    cfg.model.k_generators = 1;
    cfg.model.shares_removed = 0;
    cfg.train.beta = 0.0;
    cfg.train.per_gen_batch = cfg.train.real_batch;
  }
  if (st.o_config->count() > 0) {
    cfg = TrainRunConfig::from_json(load_config_file(st.config_path, cmd));
  }
  st.data.apply(cfg.dataset);
  st.model.apply(cfg.model);
  st.train.apply(cfg.train);
  if (!mgan) {
    cfg.model.k_generators = 1;
    cfg.model.shares_removed = 0;
    cfg.train.beta = 0.0;
  }

  const SyntheticDataset dataset(cfg.dataset);
  MganModel model = build_mgan(cfg.model, cfg.train.seed);
  const auto sampler = [&dataset](std::size_t n, SeededRng& rng) {
    return dataset.sample(n, rng).x;
  };

  const auto dir = resolve_out_dir(st.out_dir);
  const std::size_t report_every =
      std::max<std::size_t>(1, cfg.train.steps / 10);
  {
    std::ofstream metrics(dir / "metrics.jsonl");
    const auto sink = [&](const MetricsRecord& rec) {
      metrics << rec.to_json().dump() << "\n";
      if (rec.step % report_every == 0 || rec.step + 1 == cfg.train.steps) {
        std::cout << "step " << rec.step << "/" << cfg.train.steps
                  << "  d_loss " << rec.d_loss << "  g_loss " << rec.g_loss
                  << "  mean D(real) " << rec.mean_d_real << "  collapse "
                  << rec.collapse << "\n";
      }
    };
    train_mgan(model, cfg.train, sampler, sink);
  }
  model_to_checkpoint(model).save((dir / "checkpoint.bin").string());
  write_manifest(dir, cmd, cfg.to_json(), cfg.train.seed,
                 {"metrics.jsonl", "checkpoint.bin"});
  std::cout << "wrote " << (dir / "metrics.jsonl").string() << " and "
            << (dir / "checkpoint.bin").string() << "\n";
  return 0;
}

struct AnalyzeState {
  AnalyzeConfig cfg;
  std::string config_path, out_dir = "analyze";
  CLI::Option *o_config = nullptr, *o_ckpt = nullptr, *o_samples = nullptr,
              *o_seed = nullptr, *o_minacc = nullptr;
  std::string checkpoint;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  double minacc = 0.0;
  DatasetFlags data;
};

int run_analyze(AnalyzeState& st) {
  if (st.o_config->count() > 0) {
    st.cfg = AnalyzeConfig::from_json(
        load_config_file(st.config_path, "analyze"));
  }
  if (st.o_ckpt->count() > 0) st.cfg.checkpoint = st.checkpoint;
  if (st.o_samples->count() > 0) st.cfg.eval_samples = st.samples;
  if (st.o_seed->count() > 0) st.cfg.eval_seed = st.seed;
  if (st.o_minacc->count() > 0) st.cfg.min_class_accuracy = st.minacc;
  st.data.apply(st.cfg.dataset);
  if (st.cfg.checkpoint.empty()) {
    throw std::runtime_error("analyze needs --checkpoint");
  }

  Checkpoint ck;
  MganModel model = load_model(st.cfg.checkpoint, ck);
  const SyntheticDataset dataset(st.cfg.dataset);
  SeededRng rng(st.cfg.eval_seed);

  const Tensor real = dataset.sample(st.cfg.eval_samples, rng).x;
  const GeometryReport disc = analyze_head_geometry(model.discriminator, real);

  nlohmann::json report = {{"discriminator", disc.to_json()}};
  const std::size_t kk = model.generators.size();
  const std::size_t per = std::max<std::size_t>(1, st.cfg.eval_samples / kk);
  MixtureBatch mix = sample_generator_mixture(model.generators, per * kk, rng);
  const Tensor fake = concat_rows_detached(mix.parts);
  try {
    report["classifier"] =
        analyze_classifier_geometry(model.classifier, fake, mix.labels,
                                    st.cfg.min_class_accuracy)
            .to_json();
  } catch (const std::exception& e) {
    report["classifier"] = {{"error", e.what()}};
  }

  const auto dir = resolve_out_dir(st.out_dir);
  {
    std::ofstream out(dir / "geometry.json");
    out << report.dump(2) << "\n";
  }
  write_manifest(dir, "analyze", st.cfg.to_json(), st.cfg.eval_seed,
                 {"geometry.json"});

  std::cout << "discriminator: rank " << disc.head_rank << ", null fraction "
            << disc.null_fraction << ", row constancy " << disc.row_constancy
            << "\n"
            << "D(real): mean " << disc.output_stats.mean << ", std "
            << disc.output_stats.stddev << "\n"
            << "wrote " << (dir / "geometry.json").string() << "\n";
  return 0;
}

struct ProbeState {
  ProbeRunConfig cfg;
  std::string config_path, out_dir = "probe";
  CLI::Option *o_config = nullptr, *o_ckpt = nullptr, *o_extr = nullptr,
              *o_train_size = nullptr, *o_test_size = nullptr,
              *o_data_seed = nullptr;
  std::string checkpoint, extractor;
  std::size_t train_size = 0, test_size = 0;
  std::uint64_t data_seed = 0;
  DatasetFlags data;
  ProbeFlags probe;
};

int run_probe(ProbeState& st) {
  st.cfg.dataset.kind = DatasetSpec::Kind::labeled_clusters;
  st.cfg.dataset.modes = 4;
  if (st.o_config->count() > 0) {
    st.cfg =
        ProbeRunConfig::from_json(load_config_file(st.config_path, "probe"));
  }
  if (st.o_ckpt->count() > 0) st.cfg.checkpoint = st.checkpoint;
  if (st.o_extr->count() > 0) st.cfg.extractor = st.extractor;
  if (st.o_train_size->count() > 0) st.cfg.train_size = st.train_size;
  if (st.o_test_size->count() > 0) st.cfg.test_size = st.test_size;
  if (st.o_data_seed->count() > 0) st.cfg.data_seed = st.data_seed;
  st.data.apply(st.cfg.dataset);
  st.probe.apply(st.cfg.probe);

  if (st.cfg.checkpoint.empty()) {
    throw std::runtime_error("probe needs --checkpoint");
  }
  if (st.cfg.extractor != "discriminator" && st.cfg.extractor != "classifier") {
    throw std::runtime_error("--extractor must be discriminator or classifier");
  }
  if (st.cfg.dataset.kind != DatasetSpec::Kind::labeled_clusters) {
    throw std::runtime_error("probe needs a labeled-clusters dataset");
  }

  Checkpoint ck;
  MganModel model = load_model(st.cfg.checkpoint, ck);
  const Mlp& extractor = st.cfg.extractor == "classifier"
                             ? model.classifier.extractor
                             : model.discriminator.extractor;

  const SyntheticDataset dataset(st.cfg.dataset);
  SeededRng drng(st.cfg.data_seed);
  const LabeledBatch train = dataset.materialize(st.cfg.train_size, drng);
  const LabeledBatch test = dataset.materialize(st.cfg.test_size, drng);
  const ProbeOutcome outcome = probe_train(extractor, train, test, st.cfg.probe);

  nlohmann::json report = {{"extractor", st.cfg.extractor},
                           {"final_accuracy", outcome.final_accuracy},
                           {"best_accuracy", outcome.best_accuracy},
                           {"epoch_accuracies", outcome.epoch_accuracies}};
  const auto dir = resolve_out_dir(st.out_dir);
  {
    std::ofstream out(dir / "probe.json");
    out << report.dump(2) << "\n";
  }
  write_manifest(dir, "probe", st.cfg.to_json(), st.cfg.probe.seed,
                 {"probe.json"});

  std::cout << st.cfg.extractor << " extractor probe: final accuracy "
            << outcome.final_accuracy << ", best " << outcome.best_accuracy
            << "\n"
            << "wrote " << (dir / "probe.json").string() << "\n";
  return 0;
}

struct SweepState {
  SweepConfig cfg;
  std::string config_path, out_dir = "sweep";
  CLI::Option *o_config = nullptr, *o_shares = nullptr, *o_seeds = nullptr,
              *o_base = nullptr, *o_train_size = nullptr,
              *o_test_size = nullptr;
  std::vector<std::size_t> shares;
  std::size_t num_seeds = 0, train_size = 0, test_size = 0;
  std::uint64_t base_seed = 0;
  DatasetFlags data;
  ModelFlags model;
  TrainFlags train;
  ProbeFlags probe;
};

int run_sweep(SweepState& st) {
  st.cfg.dataset.kind = DatasetSpec::Kind::labeled_clusters;
  st.cfg.dataset.modes = 4;
  if (st.o_config->count() > 0) {
    st.cfg = sweep_from_json(load_config_file(st.config_path, "sweep"));
  }
  if (st.o_shares->count() > 0) st.cfg.shares_removed = st.shares;
  if (st.o_seeds->count() > 0) st.cfg.num_seeds = st.num_seeds;
  if (st.o_base->count() > 0) st.cfg.base_seed = st.base_seed;
  if (st.o_train_size->count() > 0) st.cfg.train_size = st.train_size;
  if (st.o_test_size->count() > 0) st.cfg.test_size = st.test_size;
  st.data.apply(st.cfg.dataset);
  st.model.apply(st.cfg.model);
  st.train.apply(st.cfg.train);
  st.probe.apply(st.cfg.probe);

  const auto progress = [](const SweepRow& row) {
    std::cout << "s=" << row.shares_removed << " seed " << row.seed_index
              << ": disc " << row.discriminator_accuracy << ", cls "
              << row.classifier_accuracy << ", diff " << row.difference
              << (row.diverged ? " (diverged)" : "") << "\n";
  };
  const SweepReport report = ablation_sweep(st.cfg, progress);

  const auto dir = resolve_out_dir(st.out_dir);
  {
    std::ofstream rows(dir / "sweep.csv");
    write_sweep_csv(report, rows);
    std::ofstream summary(dir / "sweep-summary.csv");
    write_sweep_summary_csv(report, summary);
  }
  write_manifest(dir, "sweep", to_json(st.cfg), st.cfg.base_seed,
                 {"sweep.csv", "sweep-summary.csv"});

  for (const auto& agg : report.aggregates) {
    std::cout << "s=" << agg.shares_removed << ": median disc "
              << agg.median_discriminator << ", median cls "
              << agg.median_classifier << ", median diff "
              << agg.median_difference << ", diverged " << agg.diverged_rows
              << "\n";
  }
  std::cout << "wrote " << (dir / "sweep.csv").string() << " and "
            << (dir / "sweep-summary.csv").string() << "\n";
  return 0;
}

int run_check(std::uint64_t seed, const std::string& out_dir) {
  const auto results = selfcheck::run_all(seed);
  std::size_t failed = 0;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : results) {
    if (r.passed) {
      std::cout << "[ ok ] " << r.name << "\n";
    } else {
      ++failed;
      std::cout << "[FAIL] " << r.name << ": " << r.detail << "\n";
    }
    rows.push_back(
        {{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
  }
  const auto dir = resolve_out_dir(out_dir);
  {
    std::ofstream out(dir / "check.json");
    out << nlohmann::json{{"seed", seed}, {"results", rows}}.dump(2) << "\n";
  }
  write_manifest(dir, "check", nlohmann::json{{"seed", seed}}, seed,
                 {"check.json"});
  std::cout << results.size() - failed << "/" << results.size()
            << " checks passed\n";
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Exact GAN best-response dynamics, discriminator head geometry, and "
      "layer-sharing transfer experiments on synthetic data"};
  app.require_subcommand(1);
  int rc = 0;

  auto sim = std::make_shared<SimulateState>();
  {
    CLI::App* sub = app.add_subcommand(
        "simulate", "exact best-response dynamics on a discrete support");
    sim->o_pr = sub->add_option("--p-real", sim->p_real,
                                "real density, comma separated")
                    ->delimiter(',');
    sim->o_pg = sub->add_option("--p-gen", sim->p_gen,
                                "initial generator density, comma separated")
                    ->delimiter(',');
    sim->o_labels =
        sub->add_option("--labels", sim->labels, "point names, comma separated")
            ->delimiter(',');
    sim->o_rounds =
        sub->add_option("--rounds", sim->rounds, "best-response rounds");
    sim->o_config = sub->add_option("--config", sim->config_path,
                                    "config or manifest file");
    sub->add_option("--out-dir", sim->out_dir, "output directory");
    sub->callback([&rc, sim] { rc = run_simulate(*sim); });
  }

  auto tg = std::make_shared<TrainState>();
  tg->out_dir = "train-gan";
  {
    CLI::App* sub = app.add_subcommand(
        "train-gan", "single-generator GAN on a synthetic dataset");
    tg->data.attach(sub);
    tg->model.attach(sub, false);
    tg->train.attach(sub, false);
    tg->o_config =
        sub->add_option("--config", tg->config_path, "config or manifest file");
    sub->add_option("--out-dir", tg->out_dir, "output directory");
    sub->callback([&rc, tg] { rc = run_train(*tg, false); });
  }

  auto tm = std::make_shared<TrainState>();
  tm->out_dir = "train-mgan";
  {
    CLI::App* sub = app.add_subcommand(
        "train-mgan",
        "multi-generator GAN with a generator-id classifier");
    tm->data.attach(sub);
    tm->model.attach(sub, true);
    tm->train.attach(sub, true);
    tm->o_config =
        sub->add_option("--config", tm->config_path, "config or manifest file");
    sub->add_option("--out-dir", tm->out_dir, "output directory");
    sub->callback([&rc, tm] { rc = run_train(*tm, true); });
  }

  auto an = std::make_shared<AnalyzeState>();
  {
    CLI::App* sub = app.add_subcommand(
        "analyze", "row/null-space geometry report for a checkpoint");
    an->o_ckpt =
        sub->add_option("--checkpoint", an->checkpoint, "checkpoint file");
    an->data.attach(sub);
    an->o_samples =
        sub->add_option("--eval-samples", an->samples, "evaluation samples");
    an->o_seed = sub->add_option("--eval-seed", an->seed, "evaluation seed");
    an->o_minacc = sub->add_option(
        "--min-class-accuracy", an->minacc,
        "classifier accuracy needed for the affine-structure check");
    an->o_config =
        sub->add_option("--config", an->config_path, "config or manifest file");
    sub->add_option("--out-dir", an->out_dir, "output directory");
    sub->callback([&rc, an] { rc = run_analyze(*an); });
  }

  auto pr = std::make_shared<ProbeState>();
  {
    CLI::App* sub = app.add_subcommand(
        "probe", "linear probe on a frozen checkpoint extractor");
    pr->o_ckpt =
        sub->add_option("--checkpoint", pr->checkpoint, "checkpoint file");
    pr->o_extr = sub->add_option("--extractor", pr->extractor,
                                 "discriminator | classifier");
    pr->data.attach(sub);
    pr->o_train_size =
        sub->add_option("--train-size", pr->train_size, "probe training set");
    pr->o_test_size =
        sub->add_option("--test-size", pr->test_size, "probe held-out set");
    pr->o_data_seed =
        sub->add_option("--data-seed", pr->data_seed, "dataset seed");
    pr->probe.attach(sub, "probe-");
    pr->o_config =
        sub->add_option("--config", pr->config_path, "config or manifest file");
    sub->add_option("--out-dir", pr->out_dir, "output directory");
    sub->callback([&rc, pr] { rc = run_probe(*pr); });
  }

  auto sw = std::make_shared<SweepState>();
  {
    CLI::App* sub = app.add_subcommand(
        "sweep", "layer-sharing ablation with linear-probe evaluation");
    sw->o_shares = sub->add_option("--shares", sw->shares,
                                   "shares-removed values, comma separated")
                       ->delimiter(',');
    sw->o_seeds = sub->add_option("--num-seeds", sw->num_seeds,
                                  "independent seeds per cell");
    sw->o_base = sub->add_option("--base-seed", sw->base_seed, "base seed");
    sw->o_train_size =
        sub->add_option("--train-size", sw->train_size, "probe training set");
    sw->o_test_size =
        sub->add_option("--test-size", sw->test_size, "probe held-out set");
    sw->data.attach(sub);
    sw->model.attach(sub, true);
    sw->train.attach(sub, true);
    sw->probe.attach(sub, "probe-");
    sw->o_config =
        sub->add_option("--config", sw->config_path, "config or manifest file");
    sub->add_option("--out-dir", sw->out_dir, "output directory");
    sub->callback([&rc, sw] { rc = run_sweep(*sw); });
  }

  auto check_seed = std::make_shared<std::uint64_t>(20240801u);
  auto check_dir = std::make_shared<std::string>("check");
  {
    CLI::App* sub =
        app.add_subcommand("check", "run the library invariant suites");
    sub->add_option("--seed", *check_seed, "seed for randomized checks");
    sub->add_option("--out-dir", *check_dir, "output directory");
    sub->callback(
        [&rc, check_seed, check_dir] { rc = run_check(*check_seed, *check_dir); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
