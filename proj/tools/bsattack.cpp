#include <bsattack/bsattack.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

using namespace bsattack;

std::string vocab_path(const std::string& model_path) { return model_path + ".vocab"; }

struct Loaded {
  Vocabulary vocab;
  TransformerClassifier<float> model;
};

Loaded load_model(const std::string& path) {
  Vocabulary vocab = Vocabulary::load(vocab_path(path));
  auto model = load_checkpoint(path, vocab.hash());
  return {std::move(vocab), std::move(model)};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

struct TrainArgs {
  std::string data, out, test;
  std::size_t epochs = TrainConfig{}.epochs;
  std::uint64_t seed = 0;
  double lr = TrainConfig{}.learning_rate;
};

int run_train(const TrainArgs& a) {
  const LabeledDataset ds = load_dataset(a.data);
  if (ds.empty()) throw InvalidArgument(a.data + ": empty training set");
  const Vocabulary vocab = build_vocab(ds.texts(), 1);

  TransformerConfig mc;
  mc.vocab_size = vocab.size();
  mc.classes = std::max<std::size_t>(2, ds.num_classes());
  InitConfig ic;
  ic.seed = a.seed;
  const auto init = TransformerClassifier<float>::initialize(mc, ic);

  TrainConfig tc;
  tc.epochs = a.epochs;
  tc.seed = a.seed;
  tc.learning_rate = a.lr;
  const auto seqs = tokenize_dataset(ds, vocab, mc.max_length);
  const auto result = train(init, std::span<const LabeledSequence>(seqs), tc);
  for (std::size_t e = 0; e < result.history.epochs.size(); ++e) {
    const auto& s = result.history.epochs[e];
    std::cout << "epoch " << e + 1 << " loss " << s.loss << " accuracy " << s.accuracy << '\n';
  }
  if (!a.test.empty()) {
    const auto test = tokenize_dataset(load_dataset(a.test, mc.classes), vocab, mc.max_length);
    std::cout << "test accuracy " << accuracy(result.model, std::span<const LabeledSequence>(test)) << '\n';
  }
  save_checkpoint(a.out, result.model, vocab.hash());
  vocab.save(vocab_path(a.out));
  return 0;
}

struct AttackArgs {
  std::string model, data, out, config;
  std::vector<double> alphas, lrs;
  std::optional<std::size_t> max_iters;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

int run_attack_cmd(const AttackArgs& a) {
  const Loaded m = load_model(a.model);
  AttackConfig cfg;
  if (!a.config.empty()) cfg = load_attack_config(a.config, cfg);
  if (!a.alphas.empty()) cfg.alpha_schedule = a.alphas;
  if (!a.lrs.empty()) cfg.lr_schedule = a.lrs;
  if (a.max_iters) cfg.max_iterations = *a.max_iters;
  if (a.threshold) cfg.similarity_threshold = *a.threshold;
  if (a.seed) cfg.seed = *a.seed;

  const LabeledDataset ds = load_dataset(a.data, m.model.num_classes());
  const AttackReport report = evaluate_attack(m.model, m.vocab, ds, cfg, a.threads);
  save_report(a.out, report, &m.vocab);
  std::cout << report_text(report);
  return 0;
}

struct SweepArgs {
  std::string model, data, out;
  std::vector<double> alphas;
  double lr = 0.15;
  std::size_t max_iters = AttackConfig{}.max_iterations;
  unsigned threads = 1;
};

int run_sweep(const SweepArgs& a) {
  const Loaded m = load_model(a.model);
  const LabeledDataset ds = load_dataset(a.data, m.model.num_classes());
  AttackConfig base;
  base.max_iterations = a.max_iters;
  const auto rows = sweep_alpha(m.model, m.vocab, ds, a.alphas, a.lr, base, a.threads);
  const std::string csv = sweep_csv(rows);
  write_text(a.out, csv);
  std::cout << csv;
  return 0;
}

int run_report(const std::string& in, const std::string& format) {
  const AttackReport report = load_report(in);
  if (format == "json") {
    // Re-emit the parsed document so text fields survive.
    std::ifstream file(in, std::ios::binary);
    std::cout << nlohmann::json::parse(file).dump(2) << '\n';
  } else if (format == "csv") {
    std::cout << report_csv(report);
  } else {
    std::cout << report_text(report);
  }
  return 0;
}

int run_generate(const std::string& out_dir, const SyntheticConfig& cfg) {
  const auto corpus = generate_keyword_corpus(cfg);
  save_dataset(out_dir + "/train.jsonl", corpus.train);
  save_dataset(out_dir + "/test.jsonl", corpus.test);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Block-sparse adversarial attacks on a toy transformer classifier"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "train a classifier on a JSONL dataset");
  train_cmd->add_option("--data", ta.data, "training JSONL")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", ta.out, "checkpoint path; the vocabulary goes to <out>.vocab")->required();
  train_cmd->add_option("--epochs", ta.epochs)->capture_default_str();
  train_cmd->add_option("--seed", ta.seed)->capture_default_str();
  train_cmd->add_option("--lr", ta.lr, "Adam learning rate")->capture_default_str();
  train_cmd->add_option("--test", ta.test, "optional JSONL to report accuracy on")->check(CLI::ExistingFile);

  AttackArgs aa;
  auto* attack_cmd = app.add_subcommand("attack", "attack every example of a dataset");
  attack_cmd->add_option("--model", aa.model)->required()->check(CLI::ExistingFile);
  attack_cmd->add_option("--data", aa.data)->required()->check(CLI::ExistingFile);
  attack_cmd->add_option("--out-report", aa.out)->required();
  attack_cmd->add_option("--config", aa.config, "key = value attack config")->check(CLI::ExistingFile);
  attack_cmd->add_option("--alpha-set", aa.alphas, "alpha base values, divided by sentence length")
      ->delimiter(',');
  attack_cmd->add_option("--lr-set", aa.lrs)->delimiter(',');
  attack_cmd->add_option("--max-iters", aa.max_iters);
  attack_cmd->add_option("--sim-threshold", aa.threshold);
  attack_cmd->add_option("--seed", aa.seed);
  attack_cmd->add_option("--threads", aa.threads)->capture_default_str();

  SweepArgs sa;
  auto* sweep_cmd = app.add_subcommand("sweep", "single-alpha runs over a grid at a fixed lr");
  sweep_cmd->add_option("--model", sa.model)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--data", sa.data)->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("--alphas", sa.alphas)->required()->delimiter(',');
  sweep_cmd->add_option("--lr", sa.lr)->capture_default_str();
  sweep_cmd->add_option("--out-csv", sa.out)->required();
  sweep_cmd->add_option("--max-iters", sa.max_iters)->capture_default_str();
  sweep_cmd->add_option("--threads", sa.threads)->capture_default_str();

  std::string report_in, format = "text";
  auto* report_cmd = app.add_subcommand("report", "print a saved report");
  report_cmd->add_option("--in", report_in)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", format)
      ->check(CLI::IsMember({"json", "csv", "text"}))
      ->capture_default_str();

  std::string gen_dir;
  SyntheticConfig sc;
  auto* gen_cmd = app.add_subcommand("generate", "write the synthetic keyword corpus");
  gen_cmd->add_option("--out-dir", gen_dir)->required()->check(CLI::ExistingDirectory);
  gen_cmd->add_option("--seed", sc.seed)->capture_default_str();
  gen_cmd->add_option("--train-size", sc.train_size)->capture_default_str();
  gen_cmd->add_option("--test-size", sc.test_size)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*train_cmd) return run_train(ta);
    if (*attack_cmd) return run_attack_cmd(aa);
    if (*sweep_cmd) return run_sweep(sa);
    if (*report_cmd) return run_report(report_in, format);
    if (*gen_cmd) return run_generate(gen_dir, sc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
