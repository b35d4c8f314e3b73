// evfuse: staged evidential multi-view classification from the command line.
//
//   evfuse generate --synthetic configs/synthetic.cfg --out runs/demo
//   evfuse train    --synthetic configs/synthetic.cfg --out runs/demo
//   evfuse tune     --synthetic configs/synthetic.cfg --out runs/demo
//   evfuse evaluate --synthetic configs/synthetic.cfg --out runs/demo
//   evfuse all      --config configs/run.toml --repeat 5
//
// Every flag may also come from --config (TOML/INI); flags win over the file.

#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "evfuse/errors.hpp"
#include "evfuse/pipeline.hpp"

namespace {

int exit_code(evfuse::ErrorKind kind) {
  using evfuse::ErrorKind;
  switch (kind) {
    case ErrorKind::kParse: return 3;
    case ErrorKind::kAlignment: return 4;
    case ErrorKind::kDivergence: return 5;
    case ErrorKind::kTotalConflict: return 6;
    case ErrorKind::kConfiguration:
    case ErrorKind::kStratification: return 7;
    case ErrorKind::kIo: return 8;
    default: return 1;
  }
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Staged evidential multi-view classification"};
  app.set_config("--config", "", "TOML/INI file supplying any of the flags below");
  app.require_subcommand(1, 1);

  evfuse::RunConfig config;
  std::vector<std::string> view_specs;
  std::string labels;
  std::string id_column = "first";
  std::string synthetic_path;
  std::string split = "0.6,0.2,0.2";
  std::vector<std::string> split_files;
  std::string optimizer = "adam";
  std::string activation = "tanh";
  std::string out_dir = "evfuse_out";
  double t1 = -1.0;
  double t2 = -1.0;

  app.add_option("--view", view_specs, "View CSV as id=path (repeatable)");
  app.add_option("--labels", labels, "Label CSV with columns sample_id,label");
  app.add_option("--id-column", id_column, "first | none")->check(CLI::IsMember({"first", "none"}));
  app.add_option("--synthetic", synthetic_path, "Synthetic dataset config (key = value)");
  app.add_option("--split", split, "train,validation,test fractions");
  app.add_option("--split-files", split_files, "train, validation, test id lists")->expected(3);
  app.add_option("--epochs", config.train.epochs, "Training epochs");
  app.add_option("--lr", config.train.learning_rate, "Learning rate");
  app.add_option("--anneal-epochs", config.train.anneal_epochs, "Epochs for the KL weight to reach 1");
  app.add_option("--batch-size", config.train.batch_size, "Rows per step, 0 = full batch");
  app.add_option("--optimizer", optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd", "gd"}));
  app.add_option("--hidden", config.train.hidden, "Hidden layer widths");
  app.add_option("--activation", activation, "tanh | softplus | linear")
      ->check(CLI::IsMember({"tanh", "softplus", "linear"}));
  app.add_option("--view-order", config.view_order, "Stage order of the views");
  app.add_option("--t1", t1, "Single-view uncertainty threshold");
  app.add_option("--t2", t2, "Dual-view uncertainty threshold");
  app.add_option("--grid", config.grid_size, "Threshold grid points per axis");
  app.add_flag("--tune-on-test", config.tune_on_test, "Tune thresholds on the test split");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--repeat", config.repeat, "Seeded repeats for the all command");
  app.add_option("--seed", config.seed, "Run seed (split and initialisation)");
  app.add_option("--hist-bins", config.histogram_bins, "Uncertainty histogram bins");

  for (const char* name : {"generate", "train", "tune", "evaluate", "all"}) {
    app.add_subcommand(name)->fallthrough();
  }
  app.get_subcommand("generate")->description("Write a synthetic dataset as CSV");
  app.get_subcommand("train")->description("Train the per-view models and write checkpoints");
  app.get_subcommand("tune")->description("Grid-search the stage thresholds");
  app.get_subcommand("evaluate")->description("Run the staged policy on the test split");
  app.get_subcommand("all")->description("train, tune and evaluate for every repeat");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    for (const auto& entry : view_specs) {
      const auto eq = entry.find('=');
      if (eq == std::string::npos) {
        evfuse::fail(evfuse::ErrorKind::kConfiguration, "--view expects id=path, got " + entry);
      }
      config.views.push_back({entry.substr(0, eq), entry.substr(eq + 1)});
    }
    config.labels = labels;
    config.id_column = id_column == "none" ? evfuse::IdColumn::kNone : evfuse::IdColumn::kFirstColumn;
    if (!synthetic_path.empty()) config.synthetic = evfuse::read_synthetic_config(synthetic_path);
    const auto fractions = parse_fractions(split);
    if (fractions.size() != 3) evfuse::fail(evfuse::ErrorKind::kConfiguration, "--split needs three fractions");
    config.fractions = {fractions[0], fractions[1], fractions[2]};
    if (!split_files.empty()) config.split_files = {{split_files[0], split_files[1], split_files[2]}};
    config.train.optimizer = evfuse::parse_optimizer(optimizer);
    config.train.activation = evfuse::parse_activation(activation);
    if (app.count("--t1")) config.t1 = t1;
    if (app.count("--t2")) config.t2 = t2;
    config.output_dir = out_dir;

    if (command == "generate") {
      evfuse::run_generate(config);
    } else {
      config.validate();
      if (command == "train") evfuse::run_train(config);
      if (command == "tune") evfuse::run_tune(config);
      if (command == "evaluate") evfuse::run_evaluate(config);
      if (command == "all") evfuse::run_all(config);
    }
  } catch (const evfuse::Error& err) {
    std::cerr << "evfuse " << command << ": " << evfuse::to_string(err.kind()) << " error: " << err.what()
              << "\n";
    return exit_code(err.kind());
  } catch (const std::exception& err) {
    std::cerr << "evfuse " << command << ": error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
