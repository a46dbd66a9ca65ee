#include <iostream>

#include "CLI11.hpp"
#include "treegp/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"treegp: treed Gaussian process regression by RJ-MCMC"};
  app.require_subcommand(1);

  std::string fit_config;
  CLI::App* fit = app.add_subcommand("fit", "fit a model from a config file");
  fit->add_option("--config", fit_config, "key = value run description")
      ->required();

  std::string model_dir, grid_spec, queries_path, out_path;
  std::vector<double> quantiles;
  uint64_t pred_seed = 7;
  CLI::App* predict =
      app.add_subcommand("predict", "model-averaged prediction from a fit");
  predict->add_option("--model", model_dir, "fit output directory")->required();
  predict->add_option("--grid", grid_spec,
                      "per-dimension grid counts, e.g. 41 or 41x21");
  predict->add_option("--queries", queries_path, "CSV of query locations");
  predict->add_option("--quantiles", quantiles,
                      "quantile levels (default 0.05,0.95)")
      ->delimiter(',');
  predict->add_option("--out", out_path, "output CSV path");
  predict->add_option("--seed", pred_seed, "seed for predictive draws");

  std::string cv_config;
  int folds = 10;
  double level = 0.9;
  uint64_t cv_seed = 0;
  bool cv_seed_set = false;
  CLI::App* cv = app.add_subcommand("cv", "k-fold predictive coverage");
  cv->add_option("--config", cv_config, "key = value run description")
      ->required();
  cv->add_option("--folds", folds, "number of folds (default 10)");
  cv->add_option("--level", level, "interval level (default 0.9)");
  cv->add_option("--seed", cv_seed, "fold/fit seed (default from config)")
      ->each([&](const std::string&) { cv_seed_set = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) {
      treegp::cmd_fit(fit_config, std::cout);
    } else if (predict->parsed()) {
      treegp::cmd_predict(model_dir, grid_spec, queries_path, quantiles,
                          out_path, pred_seed, std::cout);
    } else if (cv->parsed()) {
      treegp::cmd_cv(cv_config, folds, level,
                     cv_seed_set ? std::optional<uint64_t>(cv_seed)
                                 : std::nullopt,
                     std::cout);
    }
  } catch (const treegp::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const treegp::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
