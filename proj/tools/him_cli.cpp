// him — train and evaluate hierarchy-aware embeddings on Poincare /
// Lorentz / Euclidean geometry. Machine-readable JSON goes to stdout
// (eval, hyperbolicity); human-readable progress goes to stderr.
//
// Exit codes: 0 ok, 1 I/O or config error, 2 usage error, 3 divergence.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "him/evaluation.hpp"
#include "him/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct SynthArgs {
  std::string out_dir = ".";
  int branching = 3;
  int min_branching = 1;
  int depth = 5;
  uint64_t seed = 7;
};

struct TrainArgs {
  std::string entities, edges, out, metrics, config_path, init_ckpt, resume_ckpt, save_splits;
  std::string task = "mixed";
  std::string manifold = "poincare";
  double fixed_curvature = 0.0;  // K < 0 when set
  uint64_t seed = 42;
  uint64_t split_seed = 1234;
  int epochs = -1;
  int batch_size = -1;
  double lr = -1.0;
  double triplets_per_pair = -1.0;
  double hard_fraction = -1.0;
};

struct EvalArgs {
  std::string ckpt, entities, edges, manifold, task, pairs, calibration_pairs;
  double neg_ratio = -1.0;
  uint64_t split_seed = 0;
  bool split_seed_set = false;
};

struct HypArgs {
  std::string entities, edges;
  int64_t quadruples = 100000;
  int exhaustive_max = 40;
  uint64_t seed = 1;
};

struct EmbedArgs {
  std::string ckpt, entities, edges, out;
};

struct PretrainArgs {
  std::string pairs, out;
  int epochs = 5;
  int batch_pairs = 16;
  uint64_t seed = 42;
  double temperature = 0.05;
  int dim = 64;
  int blocks = 2;
  int state = 16;
  int max_len = 32;
};

int cmd_synth(const SynthArgs& a) {
  him::Taxonomy tax = him::generate_synthetic_tree(a.branching, a.depth, a.seed, a.min_branching);
  fs::create_directories(a.out_dir);
  him::save_taxonomy(tax, a.out_dir + "/entities.tsv", a.out_dir + "/edges.tsv");
  std::cerr << "synth: " << tax.num_nodes() << " entities, " << tax.num_edges()
            << " edges -> " << a.out_dir << "/{entities,edges}.tsv\n";
  return 0;
}

him::TrainConfig resolve_train_config(const TrainArgs& a) {
  him::TrainConfig cfg;
  if (!a.config_path.empty()) {
    std::ifstream is(a.config_path);
    him::require(is.good(), "cannot open config file: " + a.config_path);
    json j = json::parse(is, nullptr, true, true);
    cfg = him::TrainConfig::from_json(j);
  }
  cfg.task = him::task_from_string(a.task);
  cfg.manifold.kind = him::manifold_from_string(a.manifold);
  if (a.fixed_curvature != 0.0) {
    him::require(a.fixed_curvature < 0.0, "--fixed-curvature expects a negative K (K = -1/c)");
    cfg.manifold.curvature_c = -1.0 / a.fixed_curvature;
    cfg.manifold.learn_curvature = false;
  }
  cfg.seed = a.seed;
  cfg.split_seed = a.split_seed;
  if (a.epochs >= 0) cfg.epochs = a.epochs;
  if (a.batch_size > 0) cfg.batch_size = a.batch_size;
  if (a.lr > 0) cfg.lr_target = a.lr;
  if (a.triplets_per_pair > 0) cfg.triplets_per_pair = a.triplets_per_pair;
  if (a.hard_fraction >= 0) cfg.hard_fraction = a.hard_fraction;
  cfg.validate();
  return cfg;
}

int cmd_train(const TrainArgs& a) {
  him::Taxonomy tax = him::load_taxonomy(a.entities, a.edges);
  him::TrainConfig cfg = resolve_train_config(a);
  std::cerr << "resolved config: " << cfg.to_json().dump() << "\n";

  him::Trainer trainer(cfg, tax);
  if (!a.init_ckpt.empty()) trainer.init_from_pretrained(a.init_ckpt);
  if (!a.resume_ckpt.empty()) trainer.resume_from(a.resume_ckpt);

  if (!a.save_splits.empty()) {
    fs::create_directories(a.save_splits);
    him::Rng vr(cfg.split_seed);
    him::Rng tr(cfg.split_seed + 0x517cc1b727220a95ULL);
    auto val = him::build_eval_pairs(tax, trainer.closure(), trainer.splits().val, cfg.neg_ratio, vr);
    auto test =
        him::build_eval_pairs(tax, trainer.closure(), trainer.splits().test, cfg.neg_ratio, tr);
    him::save_pairs_tsv(tax, val, a.save_splits + "/val_pairs.tsv");
    him::save_pairs_tsv(tax, test, a.save_splits + "/test_pairs.tsv");
    std::vector<him::LabeledPair> train_pos;
    for (const auto& p : trainer.splits().train) train_pos.push_back({p.child, p.anc, true, p.hops});
    him::save_pairs_tsv(tax, train_pos, a.save_splits + "/train_pairs.tsv");
  }

  std::optional<std::string> metrics =
      a.metrics.empty() ? std::nullopt : std::optional<std::string>(a.metrics);
  std::optional<std::string> out =
      a.out.empty() ? std::nullopt : std::optional<std::string>(a.out);
  him::TrainResult res = trainer.run(metrics, out);
  for (const auto& m : res.metrics)
    std::cerr << "epoch " << m.epoch << "  loss " << m.train_loss << "  val_f1 " << m.val_f1
              << "  c " << m.c << "  gamma " << m.gamma << "\n";
  if (res.diverged) {
    std::cerr << "training diverged; last good state "
              << (a.out.empty() ? "was not persisted (no --out)" : "written to " + a.out) << "\n";
    return 3;
  }
  return 0;
}

int cmd_eval(const EvalArgs& a) {
  him::CheckpointData data = him::load_checkpoint(a.ckpt);
  him::HimModel model = him::model_from_checkpoint(data);
  if (!a.manifold.empty())
    him::require(him::manifold_from_string(a.manifold) == model.manifold.kind,
                 "manifold mismatch: checkpoint is " + him::to_string(model.manifold.kind));

  him::Taxonomy tax = him::load_taxonomy(a.entities, a.edges);
  him::Closure cl = him::transitive_closure(tax);

  him::TrainConfig saved;
  if (data.config.contains("train"))
    saved = him::TrainConfig::from_json(data.config.at("train"));
  him::Task task = a.task.empty() ? saved.task : him::task_from_string(a.task);
  uint64_t split_seed = a.split_seed_set ? a.split_seed : saved.split_seed;
  double neg_ratio = a.neg_ratio > 0 ? a.neg_ratio : saved.neg_ratio;

  him::EvalReport report;
  if (!a.pairs.empty()) {
    auto test_pairs = him::load_pairs_tsv(tax, a.pairs);
    double threshold;
    if (!a.calibration_pairs.empty()) {
      auto val_pairs = him::load_pairs_tsv(tax, a.calibration_pairs);
      auto val_scores = him::score_pairs(model, tax, val_pairs);
      std::vector<uint8_t> labels(val_pairs.size());
      for (size_t i = 0; i < val_pairs.size(); ++i) labels[i] = val_pairs[i].positive;
      threshold = him::calibrate_threshold(val_scores, labels).threshold;
    } else {
      auto scores = him::score_pairs(model, tax, test_pairs);
      std::vector<uint8_t> labels(test_pairs.size());
      for (size_t i = 0; i < test_pairs.size(); ++i) labels[i] = test_pairs[i].positive;
      threshold = him::calibrate_threshold(scores, labels).threshold;
      std::cerr << "warning: no --calibration-pairs; threshold tuned on the given pairs\n";
    }
    auto scores = him::score_pairs(model, tax, test_pairs);
    report = him::evaluate_pairs(scores, test_pairs, threshold, him::to_string(task));
  } else {
    auto splits = him::make_splits(tax, cl, task, saved.fractions, split_seed);
    report = him::evaluate_task(model, tax, cl, splits, task, neg_ratio, split_seed);
  }

  std::cout << report.to_json().dump() << "\n";
  std::cerr << "task " << report.task << "  F1 " << report.f1 << "  P " << report.precision
            << "  R " << report.recall << "  threshold " << report.threshold << "\n";
  return 0;
}

int cmd_hyperbolicity(const HypArgs& a) {
  him::Taxonomy tax = him::load_taxonomy(a.entities, a.edges);
  him::Rng rng(a.seed);
  him::DeltaReport rep = him::delta_hyperbolicity(tax, a.quadruples, rng, a.exhaustive_max);
  json out = {{"mean_delta", rep.mean_delta},
              {"mean_normalized_delta", rep.mean_normalized_delta},
              {"quadruples", rep.quadruples},
              {"component_nodes", rep.component_nodes},
              {"exhaustive", rep.exhaustive}};
  std::cout << out.dump() << "\n";
  std::cerr << "delta " << rep.mean_delta << " (normalized " << rep.mean_normalized_delta
            << ") over " << rep.quadruples << (rep.exhaustive ? " exhaustive" : " sampled")
            << " quadruples\n";
  return 0;
}

int cmd_embed(const EmbedArgs& a) {
  him::CheckpointData data = him::load_checkpoint(a.ckpt);
  him::HimModel model = him::model_from_checkpoint(data);
  him::Taxonomy tax = him::load_taxonomy(a.entities, a.edges);
  him::export_embeddings(model, tax, a.out);
  std::cerr << "wrote " << tax.num_nodes() << " embeddings to " << a.out << "\n";
  return 0;
}

int cmd_pretrain(const PretrainArgs& a) {
  std::ifstream is(a.pairs);
  him::require(is.good(), "cannot open pair corpus: " + a.pairs);
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<std::string> texts;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    pairs.emplace_back(j.at("text_a").get<std::string>(), j.at("text_b").get<std::string>());
    texts.push_back(pairs.back().first);
    texts.push_back(pairs.back().second);
  }
  him::require(!pairs.empty(), "pair corpus is empty: " + a.pairs);

  him::PretrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_pairs = a.batch_pairs;
  cfg.seed = a.seed;
  cfg.temperature = a.temperature;
  cfg.encoder.dim = a.dim;
  cfg.encoder.inner = 2 * a.dim;
  cfg.encoder.blocks = a.blocks;
  cfg.encoder.state = a.state;
  cfg.encoder.max_len = a.max_len;

  him::Vocab vocab = him::Vocab::build(texts, cfg.vocab_max);
  him::ManifoldConfig manifold;
  manifold.kind = him::ManifoldKind::Euclidean;
  him::HimModel model = him::build_model(cfg.encoder, manifold, std::move(vocab), cfg.seed);
  him::PretrainResult res = him::pretrain(model, pairs, cfg, a.out);
  for (size_t e = 0; e < res.epoch_losses.size(); ++e)
    std::cerr << "epoch " << e + 1 << "  contrastive_loss " << res.epoch_losses[e] << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"him: hierarchy-aware sentence embeddings on hyperbolic manifolds"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic taxonomy tree");
  synth->add_option("--out-dir", sa.out_dir, "Output directory")->capture_default_str();
  synth->add_option("--branching", sa.branching, "Max children per node")->capture_default_str();
  synth->add_option("--min-branching", sa.min_branching, "Min children per node")
      ->capture_default_str();
  synth->add_option("--depth", sa.depth, "Tree depth (levels below the root)")
      ->capture_default_str();
  synth->add_option("--seed", sa.seed, "RNG seed")->capture_default_str();

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train on a taxonomy");
  train->add_option("--entities", ta.entities, "entities.tsv")->required();
  train->add_option("--edges", ta.edges, "edges.tsv")->required();
  train->add_option("--task", ta.task, "mixed|multi")->capture_default_str();
  train->add_option("--manifold", ta.manifold, "euclidean|poincare|lorentz")
      ->capture_default_str();
  train->add_option("--fixed-curvature", ta.fixed_curvature,
                    "Freeze curvature at K (negative; c = -1/K)");
  train->add_option("--out", ta.out, "Checkpoint output path");
  train->add_option("--metrics", ta.metrics, "Metrics JSONL output path");
  train->add_option("--config", ta.config_path, "JSON config file");
  train->add_option("--seed", ta.seed, "Training seed")->capture_default_str();
  train->add_option("--split-seed", ta.split_seed, "Split/eval-pair seed")->capture_default_str();
  train->add_option("--epochs", ta.epochs, "Override epochs");
  train->add_option("--batch-size", ta.batch_size, "Override batch size");
  train->add_option("--lr", ta.lr, "Override target learning rate");
  train->add_option("--triplets-per-pair", ta.triplets_per_pair,
                    "Epoch triplets as a multiple of train pairs");
  train->add_option("--hard-fraction", ta.hard_fraction, "Hard-negative fraction");
  train->add_option("--init", ta.init_ckpt, "Warm-start from a pretraining checkpoint");
  train->add_option("--resume", ta.resume_ckpt, "Resume a training checkpoint");
  train->add_option("--save-splits", ta.save_splits, "Directory for split TSVs");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint (JSON report on stdout)");
  eval->add_option("--ckpt", ea.ckpt, "Checkpoint")->required();
  eval->add_option("--entities", ea.entities, "entities.tsv")->required();
  eval->add_option("--edges", ea.edges, "edges.tsv")->required();
  eval->add_option("--manifold", ea.manifold, "Expected manifold (must match checkpoint)");
  eval->add_option("--task", ea.task, "mixed|multi (default: from checkpoint)");
  eval->add_option("--pairs", ea.pairs, "Explicit test pairs TSV");
  eval->add_option("--calibration-pairs", ea.calibration_pairs, "Validation pairs TSV");
  eval->add_option("--neg-ratio", ea.neg_ratio, "Negatives per positive");
  auto* ss = eval->add_option("--split-seed", ea.split_seed, "Split seed (default: checkpoint)");

  HypArgs ha;
  auto* hyp = app.add_subcommand("hyperbolicity", "Gromov delta of a taxonomy (JSON on stdout)");
  hyp->add_option("--entities", ha.entities, "entities.tsv")->required();
  hyp->add_option("--edges", ha.edges, "edges.tsv")->required();
  hyp->add_option("--quadruples", ha.quadruples, "Sampled quadruples")->capture_default_str();
  hyp->add_option("--exhaustive-max", ha.exhaustive_max,
                  "Enumerate exactly when the component has at most this many nodes")
      ->capture_default_str();
  hyp->add_option("--seed", ha.seed, "RNG seed")->capture_default_str();

  EmbedArgs ma;
  auto* embed = app.add_subcommand("embed", "Export entity embeddings as TSV");
  embed->add_option("--ckpt", ma.ckpt, "Checkpoint")->required();
  embed->add_option("--entities", ma.entities, "entities.tsv")->required();
  embed->add_option("--edges", ma.edges, "edges.tsv")->required();
  embed->add_option("--out", ma.out, "Output TSV path")->required();

  PretrainArgs pa;
  auto* pre = app.add_subcommand("pretrain", "Contrastive pretraining on sentence pairs");
  pre->add_option("--pairs", pa.pairs, "JSONL corpus of {text_a, text_b}")->required();
  pre->add_option("--out", pa.out, "Checkpoint output path")->required();
  pre->add_option("--epochs", pa.epochs, "Epochs")->capture_default_str();
  pre->add_option("--batch-pairs", pa.batch_pairs, "Pairs per batch")->capture_default_str();
  pre->add_option("--seed", pa.seed, "Seed")->capture_default_str();
  pre->add_option("--temperature", pa.temperature, "Softmax temperature")->capture_default_str();
  pre->add_option("--dim", pa.dim, "Embedding dim D")->capture_default_str();
  pre->add_option("--blocks", pa.blocks, "Mamba2 blocks")->capture_default_str();
  pre->add_option("--state", pa.state, "State dim N")->capture_default_str();
  pre->add_option("--max-len", pa.max_len, "Max tokens L")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*synth) {
      if (sa.depth < 2 || sa.branching < 2) {
        std::cerr << "usage: synth requires --depth >= 2 and --branching >= 2\n";
        return 2;
      }
      return cmd_synth(sa);
    }
    if (*train) return cmd_train(ta);
    if (*eval) {
      ea.split_seed_set = ss->count() > 0;
      return cmd_eval(ea);
    }
    if (*hyp) return cmd_hyperbolicity(ha);
    if (*embed) return cmd_embed(ma);
    if (*pre) return cmd_pretrain(pa);
  } catch (const him::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
