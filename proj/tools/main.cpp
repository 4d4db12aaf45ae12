// lipnn: train, verify, and attack Lipschitz-bounded polyactivation networks.
//
// Subcommands:
//   train      one configuration, one or more seeds
//   verify     bounds + tightness report for a checkpoint
//   attack     l2 PGD sweep over a budget grid
//   certify    margin certificates only
//   reproduce  the built-in experiment presets with summary tables

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lipnn/checkpoint.hpp"
#include "lipnn/experiments.hpp"
#include "lipnn/robustness.hpp"
#include "lipnn/verification.hpp"

namespace fs = std::filesystem;
using namespace lipnn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct CliOptions {
  std::string preset;
  std::string config_path;
  std::string dataset;
  std::string checkpoint;
  std::string mnist_dir;
  std::string out;
  std::string activation;
  std::string norm_p;
  std::string penalty;
  std::string optimizer;
  std::vector<std::size_t> hidden;
  std::vector<std::uint64_t> seeds;
  std::vector<double> eps;
  double lambda = -1.0;
  long epochs = -1;
  long batch_size = -1;
  long eval_every = -1;
  long restarts = 20;
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool force = false;
  bool verbose = false;
};

// Flat key-value config file; command-line flags override file values.
void merge_config_file(CliOptions& opt) {
  if (opt.config_path.empty()) return;
  std::ifstream is(opt.config_path);
  if (!is) throw std::invalid_argument("cannot open config file: " + opt.config_path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("malformed config JSON: " + std::string(e.what()));
  }
  auto take_str = [&](const char* key, std::string& into) {
    if (into.empty() && doc.contains(key)) into = doc[key].get<std::string>();
  };
  take_str("preset", opt.preset);
  take_str("dataset", opt.dataset);
  take_str("mnist_dir", opt.mnist_dir);
  take_str("out", opt.out);
  take_str("activation", opt.activation);
  take_str("norm_p", opt.norm_p);
  take_str("penalty", opt.penalty);
  take_str("optimizer", opt.optimizer);
  if (opt.lambda < 0.0 && doc.contains("lambda")) opt.lambda = doc["lambda"].get<double>();
  if (opt.epochs < 0 && doc.contains("epochs")) opt.epochs = doc["epochs"].get<long>();
  if (opt.batch_size < 0 && doc.contains("batch_size")) opt.batch_size = doc["batch_size"].get<long>();
  if (opt.eval_every < 0 && doc.contains("eval_every")) opt.eval_every = doc["eval_every"].get<long>();
  if (opt.hidden.empty() && doc.contains("hidden"))
    opt.hidden = doc["hidden"].get<std::vector<std::size_t>>();
  if (opt.seeds.empty() && doc.contains("seeds"))
    opt.seeds = doc["seeds"].get<std::vector<std::uint64_t>>();
  if (!opt.seed_given && doc.contains("seed")) {
    opt.seed = doc["seed"].get<std::uint64_t>();
    opt.seed_given = true;
  }
}

std::pair<Dataset, Dataset> load_dataset(const std::string& name, const std::string& mnist_dir) {
  if (name == "iris") return load_iris();
  if (name == "mnist") {
    if (mnist_dir.empty())
      throw std::invalid_argument("--mnist-dir is required for the mnist dataset");
    return load_mnist(mnist_dir);
  }
  throw std::invalid_argument("unknown dataset: " + name);
}

void ensure_fresh_directory(const std::string& out, bool force) {
  if (out.empty()) throw std::invalid_argument("--out is required");
  if (fs::exists(out) && !fs::is_empty(out)) {
    if (!force)
      throw std::invalid_argument("output directory exists: " + out + " (use --force to reuse)");
  }
  fs::create_directories(out);
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << content;
}

std::vector<double> default_eps() {
  return {std::pow(2.0, -1), std::pow(2.0, -2), std::pow(2.0, -3), std::pow(2.0, -4),
          std::pow(2.0, -5)};
}

// A bad checkpoint is a configuration error (exit 2), not a numeric failure.
Network load_checkpoint_or_config_error(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const std::runtime_error& e) {
    throw std::invalid_argument(e.what());
  }
}

// ---- experiment rows ------------------------------------------------------

struct ExperimentRow {
  std::string label;
  RunSpec spec;
};

struct Preset {
  std::string dataset;
  std::vector<ExperimentRow> rows;
  std::vector<std::uint64_t> seeds;
  std::vector<double> attack_eps;  // empty: no attack in the preset
  bool verify_on_train = true;
};

RunSpec base_mnist_spec() {
  RunSpec spec;
  spec.hidden = {128, 128};
  spec.activation = "sincos";
  spec.train_config.epochs = 20;
  spec.train_config.batch_size = 60;
  return spec;
}

Preset make_preset(const std::string& name) {
  Preset preset;
  if (name == "iris") {
    preset.dataset = "iris";
    preset.seeds = {0};
    for (double lambda : {0.0, 1e-2}) {
      RunSpec spec;
      spec.hidden = {4};
      spec.activation = "sincos";
      spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
      spec.penalty.lambda = lambda;
      spec.train_config.epochs = 20000;  // full-batch steps
      spec.train_config.batch_size = 120;
      spec.train_config.eval_every = 100;
      char label[32];
      std::snprintf(label, sizeof(label), "lambda=%g", lambda);
      preset.rows.push_back({label, spec});
    }
    return preset;
  }
  if (name == "mnist") {
    preset.dataset = "mnist";
    preset.seeds = {0, 1, 2};
    preset.attack_eps = default_eps();
    for (double lambda : {0.0, 1e-2}) {
      RunSpec spec = base_mnist_spec();
      spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
      spec.penalty.lambda = lambda;
      char label[32];
      std::snprintf(label, sizeof(label), "lambda=%g", lambda);
      preset.rows.push_back({label, spec});
    }
    return preset;
  }
  if (name == "activations") {
    preset.dataset = "mnist";
    preset.seeds = {0, 1};
    preset.attack_eps = default_eps();
    for (const char* act : {"sincos", "tanh3", "crelu", "abs", "relu"}) {
      RunSpec spec = base_mnist_spec();
      spec.activation = act;
      spec.train_config.epochs = 10;
      spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
      spec.penalty.lambda = 1e-2;
      preset.rows.push_back({act, spec});
    }
    return preset;
  }
  if (name == "pnorm-inf" || name == "pnorm-1") {
    const bool inf = (name == "pnorm-inf");
    preset.dataset = "mnist";
    preset.seeds = {0, 1};
    preset.attack_eps = default_eps();
    const std::vector<std::string> acts =
        inf ? std::vector<std::string>{"id_abs", "abs"} : std::vector<std::string>{"abs", "tanh_pair"};
    for (const std::string& act : acts) {
      for (double lambda : {0.0, 1e-2}) {
        RunSpec spec = base_mnist_spec();
        spec.activation = act;
        spec.norm_p = inf ? Norm::LInf : Norm::L1;
        spec.train_config.epochs = 10;
        spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
        spec.penalty.lambda = lambda;
        spec.penalty.norm_p = spec.norm_p;
        // Appendix D.2 scaling: lambda/sqrt(num outputs) for p=1,
        // lambda/sqrt(num inputs) for p=inf.
        spec.penalty.scale = inf ? 1.0 / std::sqrt(784.0) : 1.0 / std::sqrt(10.0);
        char label[48];
        std::snprintf(label, sizeof(label), "%s lambda=%g", act.c_str(), lambda);
        preset.rows.push_back({label, spec});
      }
    }
    return preset;
  }
  if (name == "penalties") {
    preset.dataset = "mnist";
    preset.seeds = {0, 1};
    preset.attack_eps = default_eps();
    const std::vector<std::pair<std::string, double>> methods = {
        {"frobenius", 1e-4}, {"n24", 1e-4}, {"y17", 1e-2}, {"trivial_product", 1e-2}};
    for (const auto& [kind, lambda] : methods) {
      RunSpec spec = base_mnist_spec();
      spec.penalty.kind = PenaltySpec::kind_from_string(kind);
      spec.penalty.lambda = lambda;
      preset.rows.push_back({kind, spec});
    }
    return preset;
  }
  if (name == "w23") {
    preset.dataset = "mnist";
    preset.seeds = {0, 1};
    preset.attack_eps = default_eps();
    for (const auto& [label, act] :
         std::vector<std::pair<std::string, std::string>>{{"W23", "relu"}, {"Ours", "abs"}}) {
      RunSpec spec = base_mnist_spec();
      spec.activation = act;
      spec.w23 = true;
      spec.w23_bound = 0.1;
      spec.train_config.epochs = 6;
      preset.rows.push_back({label, spec});
    }
    return preset;
  }
  throw std::invalid_argument("unknown preset: " + name + " (expected iris, mnist, activations, "
                              "pnorm-inf, pnorm-1, penalties, w23)");
}

// ---- summary aggregation ---------------------------------------------------

struct Aggregate {
  std::map<std::string, std::vector<double>> values;
  void add(const std::string& key, double v) { values[key].push_back(v); }
};

std::pair<double, double> mean_std(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return {mean, 0.0};
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size() - 1);
  return {mean, std::sqrt(var)};
}

std::string format_cell(const std::vector<double>& xs) {
  const auto [mean, stddev] = mean_std(xs);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4g +- %.2g", mean, stddev);
  return buf;
}

void emit_summary(const fs::path& out, const std::vector<std::string>& labels,
                  const std::vector<Aggregate>& aggregates,
                  const std::vector<std::string>& columns) {
  std::ostringstream md, csv;
  md << "| run |";
  csv << "run";
  for (const std::string& c : columns) {
    md << " " << c << " |";
    csv << "," << c << "_mean," << c << "_std";
  }
  md << "\n|---|";
  csv << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) md << "---|";
  md << "\n";
  for (std::size_t r = 0; r < labels.size(); ++r) {
    md << "| " << labels[r] << " |";
    csv << labels[r];
    for (const std::string& c : columns) {
      const auto it = aggregates[r].values.find(c);
      if (it == aggregates[r].values.end() || it->second.empty()) {
        md << " - |";
        csv << ",,";
        continue;
      }
      md << " " << format_cell(it->second) << " |";
      const auto [mean, stddev] = mean_std(it->second);
      char buf[64];
      std::snprintf(buf, sizeof(buf), ",%.10g,%.10g", mean, stddev);
      csv << buf;
    }
    md << "\n";
    csv << "\n";
  }
  write_file(out / "summary.md", md.str());
  write_file(out / "summary.csv", csv.str());
  std::cout << md.str();
}

// ---- one labeled run (train + verify + attack + files) ---------------------

void execute_row(const ExperimentRow& row, const Dataset& train_ds, const Dataset& test_ds,
                 const std::vector<std::uint64_t>& seeds, const std::vector<double>& attack_eps,
                 const fs::path& out, Aggregate& agg) {
  for (std::uint64_t seed : seeds) {
    const fs::path run_dir = out / row.label / ("seed" + std::to_string(seed));
    fs::create_directories(run_dir);

    const RunResult result = run_training(row.spec, train_ds, test_ds, seed);
    save_checkpoint(result.net, (run_dir / "checkpoint.json").string());
    write_file(run_dir / "history.csv", result.history.to_csv());

    const VerificationReport report = verify(result.net, train_ds, 20, seed);
    write_file(run_dir / "verification.json", report.to_json());
    write_file(run_dir / "spectrum.csv", spectrum_to_csv(report.spectrum));

    agg.add("K", report.k_upper);
    agg.add("L_hat", report.empirical_lower);
    agg.add("K_over_L_hat", report.tightness);
    if (report.theory_lower) agg.add("theory_lower", *report.theory_lower);
    agg.add("train_nll", result.final_train.nll);
    agg.add("test_nll", result.final_test.nll);
    agg.add("train_acc", result.final_train.accuracy);
    agg.add("test_acc", result.final_test.accuracy);

    if (!attack_eps.empty()) {
      const AttackReport attack = attack_sweep(result.net, test_ds, attack_eps);
      write_file(run_dir / "attack.csv", attack.to_csv());
      agg.add("clean_error", attack.clean_error_pct);
      for (std::size_t e = 0; e < attack_eps.size(); ++e) {
        char key[48];
        std::snprintf(key, sizeof(key), "emp@%.4g", attack_eps[e]);
        agg.add(key, attack.empirical_error_pct[e]);
        std::snprintf(key, sizeof(key), "cert@%.4g", attack_eps[e]);
        agg.add(key, attack.certified_error_pct[e]);
      }
    }
    std::cout << "[done] " << row.label << " seed " << seed << ": K=" << report.k_upper
              << " L_hat=" << report.empirical_lower << " tightness=" << report.tightness
              << " test_acc=" << result.final_test.accuracy << "\n";
  }
}

std::vector<std::string> summary_columns(bool with_attack, const std::vector<double>& eps) {
  std::vector<std::string> columns = {"K",        "L_hat",    "K_over_L_hat", "train_nll",
                                      "test_nll", "train_acc", "test_acc"};
  if (with_attack) {
    columns.push_back("clean_error");
    for (double e : eps) {
      char key[48];
      std::snprintf(key, sizeof(key), "emp@%.4g", e);
      columns.push_back(key);
      std::snprintf(key, sizeof(key), "cert@%.4g", e);
      columns.push_back(key);
    }
  }
  return columns;
}

// ---- subcommand bodies ------------------------------------------------------

int cmd_train(CliOptions& opt) {
  RunSpec spec;
  std::string dataset = opt.dataset;
  if (!opt.preset.empty()) {
    const Preset preset = make_preset(opt.preset);
    dataset = preset.dataset;
    spec = preset.rows.front().spec;  // preset defaults; flags refine below
  }
  if (dataset.empty()) dataset = "iris";
  if (!opt.hidden.empty()) spec.hidden = opt.hidden;
  if (!opt.activation.empty()) spec.activation = opt.activation;
  if (!opt.norm_p.empty()) {
    spec.norm_p = norm_from_string(opt.norm_p);
    spec.penalty.norm_p = spec.norm_p;
  }
  if (!opt.penalty.empty()) spec.penalty.kind = PenaltySpec::kind_from_string(opt.penalty);
  if (opt.lambda >= 0.0) {
    spec.penalty.lambda = opt.lambda;
    if (spec.penalty.kind == PenaltySpec::Kind::None)
      spec.penalty.kind = PenaltySpec::Kind::TrivialProduct;
  }
  if (!opt.optimizer.empty()) spec.train_config.optimizer = opt.optimizer;
  if (opt.epochs >= 0) spec.train_config.epochs = static_cast<std::size_t>(opt.epochs);
  if (opt.batch_size >= 0) spec.train_config.batch_size = static_cast<std::size_t>(opt.batch_size);
  if (opt.eval_every >= 0) spec.train_config.eval_every = static_cast<std::size_t>(opt.eval_every);
  spec.train_config.verbose = opt.verbose;

  std::vector<std::uint64_t> seeds = opt.seeds;
  if (seeds.empty()) seeds = {opt.seed};

  ensure_fresh_directory(opt.out, opt.force);
  const auto [train_ds, test_ds] = load_dataset(dataset, opt.mnist_dir);

  for (std::uint64_t seed : seeds) {
    const fs::path run_dir = fs::path(opt.out) / ("seed" + std::to_string(seed));
    fs::create_directories(run_dir);
    const RunResult result = run_training(spec, train_ds, test_ds, seed);
    save_checkpoint(result.net, (run_dir / "checkpoint.json").string());
    write_file(run_dir / "history.csv", result.history.to_csv());
    std::cout << "seed " << seed << ": K=" << result.history.records.back().trivial_k
              << " train_acc=" << result.final_train.accuracy
              << " test_acc=" << result.final_test.accuracy << "\n";
  }
  return kExitOk;
}

int cmd_verify(CliOptions& opt) {
  const Network net = load_checkpoint_or_config_error(opt.checkpoint);
  const std::string dataset = opt.dataset.empty() ? "iris" : opt.dataset;
  const auto [train_ds, test_ds] = load_dataset(dataset, opt.mnist_dir);
  const VerificationReport report =
      verify(net, train_ds, static_cast<std::size_t>(opt.restarts), opt.seed);
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_file(fs::path(opt.out) / "verification.json", report.to_json());
    write_file(fs::path(opt.out) / "spectrum.csv", spectrum_to_csv(report.spectrum));
  }
  std::printf("K = %.10g\nL_hat = %.10g\ntightness = %.10g\n", report.k_upper,
              report.empirical_lower, report.tightness);
  if (report.theory_lower) std::printf("theory_lower = %.10g\n", *report.theory_lower);
  return kExitOk;
}

int cmd_attack(CliOptions& opt, bool certify_only) {
  const Network net = load_checkpoint_or_config_error(opt.checkpoint);
  const std::string dataset = opt.dataset.empty() ? "iris" : opt.dataset;
  const auto [train_ds, test_ds] = load_dataset(dataset, opt.mnist_dir);
  const std::vector<double> eps = opt.eps.empty() ? default_eps() : opt.eps;

  if (certify_only) {
    std::ostringstream csv;
    csv << "epsilon,certified_error_pct\n";
    std::printf("epsilon certified_error%%\n");
    for (double e : eps) {
      const double cert = certified_error(net, test_ds, e);
      csv << e << "," << cert << "\n";
      std::printf("%-8.4g %.4f\n", e, cert);
    }
    if (!opt.out.empty()) {
      fs::create_directories(opt.out);
      write_file(fs::path(opt.out) / "certified.csv", csv.str());
    }
    return kExitOk;
  }

  const AttackReport report = attack_sweep(net, test_ds, eps);
  if (!opt.out.empty()) {
    fs::create_directories(opt.out);
    write_file(fs::path(opt.out) / "attack.csv", report.to_csv());
  }
  std::printf("clean error: %.4f%%\n", report.clean_error_pct);
  std::printf("epsilon  empirical%%  certified%%\n");
  for (std::size_t i = 0; i < eps.size(); ++i)
    std::printf("%-8.4g %-11.4f %.4f\n", eps[i], report.empirical_error_pct[i],
                report.certified_error_pct[i]);
  return kExitOk;
}

int cmd_reproduce(CliOptions& opt) {
  if (opt.preset.empty()) throw std::invalid_argument("--preset is required for reproduce");
  Preset preset = make_preset(opt.preset);
  if (!opt.seeds.empty()) preset.seeds = opt.seeds;
  if (!opt.eps.empty()) preset.attack_eps = opt.eps;
  for (ExperimentRow& row : preset.rows) {
    if (opt.epochs >= 0) row.spec.train_config.epochs = static_cast<std::size_t>(opt.epochs);
    row.spec.train_config.verbose = opt.verbose;
  }

  ensure_fresh_directory(opt.out, opt.force);
  const auto [train_ds, test_ds] = load_dataset(preset.dataset, opt.mnist_dir);

  std::vector<std::string> labels;
  std::vector<Aggregate> aggregates;
  for (const ExperimentRow& row : preset.rows) {
    Aggregate agg;
    execute_row(row, train_ds, test_ds, preset.seeds, preset.attack_eps, opt.out, agg);
    labels.push_back(row.label);
    aggregates.push_back(std::move(agg));
  }
  emit_summary(opt.out, labels, aggregates, summary_columns(!preset.attack_eps.empty(),
                                                            preset.attack_eps));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lipschitz-verifiable polyactivation networks"};
  app.require_subcommand(1);

  CliOptions opt;
  auto add_common = [&](CLI::App* cmd, bool wants_data) {
    cmd->add_option("--config", opt.config_path, "flat JSON config file (flags override)");
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_flag("--force", opt.force, "reuse a non-empty output directory");
    cmd->add_flag("-v,--verbose", opt.verbose, "per-epoch progress on stderr");
    if (wants_data) {
      cmd->add_option("--mnist-dir", opt.mnist_dir, "directory with the four MNIST IDX files");
      cmd->add_option("--dataset", opt.dataset, "iris | mnist");
    }
  };

  CLI::App* train_cmd = app.add_subcommand("train", "train one configuration");
  add_common(train_cmd, true);
  train_cmd->add_option("--preset", opt.preset, "start from a preset's first row");
  train_cmd->add_option("--seed", opt.seed, "single seed")->each([&](const std::string&) {
    opt.seed_given = true;
  });
  train_cmd->add_option("--seeds", opt.seeds, "seed list");
  train_cmd->add_option("--epochs", opt.epochs, "training epochs");
  train_cmd->add_option("--batch-size", opt.batch_size, "minibatch size");
  train_cmd->add_option("--eval-every", opt.eval_every, "full-evaluation cadence (epochs)");
  train_cmd->add_option("--lambda", opt.lambda, "penalty weight");
  train_cmd->add_option("--penalty", opt.penalty,
                        "trivial_product | frobenius | y17 | n24 | none");
  train_cmd->add_option("--norm-p", opt.norm_p, "1 | 2 | inf");
  train_cmd->add_option("--activation", opt.activation, "polyactivation id");
  train_cmd->add_option("--hidden", opt.hidden, "hidden layer widths");
  train_cmd->add_option("--optimizer", opt.optimizer, "cocob | adam");

  CLI::App* verify_cmd = app.add_subcommand("verify", "verify a checkpoint");
  add_common(verify_cmd, true);
  verify_cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint path")->required();
  verify_cmd->add_option("--restarts", opt.restarts, "secant search restarts");
  verify_cmd->add_option("--seed", opt.seed, "search seed");

  CLI::App* attack_cmd = app.add_subcommand("attack", "PGD attack sweep");
  add_common(attack_cmd, true);
  attack_cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint path")->required();
  attack_cmd->add_option("--eps", opt.eps, "perturbation budgets");

  CLI::App* certify_cmd = app.add_subcommand("certify", "margin certificates");
  add_common(certify_cmd, true);
  certify_cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint path")->required();
  certify_cmd->add_option("--eps", opt.eps, "perturbation budgets");

  CLI::App* reproduce_cmd = app.add_subcommand("reproduce", "run an experiment preset");
  add_common(reproduce_cmd, true);
  reproduce_cmd->add_option("--preset", opt.preset,
                            "iris | mnist | activations | pnorm-inf | pnorm-1 | penalties | w23");
  reproduce_cmd->add_option("--seeds", opt.seeds, "ensemble seeds");
  reproduce_cmd->add_option("--epochs", opt.epochs, "override preset epochs");
  reproduce_cmd->add_option("--eps", opt.eps, "override attack budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    merge_config_file(opt);
    if (train_cmd->parsed()) return cmd_train(opt);
    if (verify_cmd->parsed()) return cmd_verify(opt);
    if (attack_cmd->parsed()) return cmd_attack(opt, false);
    if (certify_cmd->parsed()) return cmd_attack(opt, true);
    if (reproduce_cmd->parsed()) return cmd_reproduce(opt);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitConfig;
}
