// Command-line front end: teacher-student data generation, training,
// penalized-ELBO width selection, rate diagnostics, and model evaluation.
//
// Config precedence: CLI flags override config-file values, which override
// built-in defaults. All artifacts are JSON or CSV and are byte-identical
// across re-runs with the same config and seed.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asvi/asvi.hpp"

namespace fs = std::filesystem;
using asvi::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shared option bundle; one struct keeps flag wiring and config parsing in
// one place across subcommands.
struct Options {
  json config = json::object();
  std::string config_path;
  std::string out_dir = ".";
  int parallel = 1;

  std::optional<std::uint64_t> seed_flag;
  std::optional<double> lr, lambda, lambda_s, sigma0, sigma_eps, tau;
  std::optional<int> epochs, batch_size;
  std::optional<std::string> widths_flag, candidates_flag;
};

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
  std::vector<int> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      values.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw ConfigError(what + ": cannot parse integer '" + item + "'");
    }
  }
  if (values.empty()) throw ConfigError(what + ": empty list");
  return values;
}

void check_keys(const json& config, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : config.items()) {
    if (!allowed.count(key)) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

template <typename T>
T get_or(const json& config, const std::string& key, T fallback) {
  if (!config.contains(key)) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config key '" + key + "' has the wrong type");
  }
}

std::uint64_t resolve_seed(const Options& opt) {
  if (opt.seed_flag) return *opt.seed_flag;
  if (opt.config.contains("seed")) return opt.config.at("seed").get<std::uint64_t>();
  if (const char* env = std::getenv("SVI_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

asvi::PriorConfig resolve_prior(const Options& opt) {
  asvi::PriorConfig prior;
  prior.sigma0 = opt.sigma0.value_or(get_or(opt.config, "sigma0", prior.sigma0));
  prior.lambda = opt.lambda.value_or(get_or(opt.config, "lambda", prior.lambda));
  prior.lambda_s = opt.lambda_s.value_or(get_or(opt.config, "lambda_s", prior.lambda_s));
  prior.sigma_eps = opt.sigma_eps.value_or(get_or(opt.config, "sigma_eps", prior.sigma_eps));
  prior.tau = opt.tau.value_or(get_or(opt.config, "tau", prior.tau));
  prior.entropy_in_nats = get_or(opt.config, "entropy_in_nats", false);
  prior.validate();
  return prior;
}

asvi::TrainConfig resolve_train(const Options& opt, std::uint64_t seed) {
  asvi::TrainConfig cfg;
  cfg.batch_size = opt.batch_size.value_or(get_or(opt.config, "batch_size", cfg.batch_size));
  cfg.mc_samples = get_or(opt.config, "mc_samples", cfg.mc_samples);
  cfg.epochs = opt.epochs.value_or(get_or(opt.config, "epochs", cfg.epochs));
  cfg.learning_rate = opt.lr.value_or(get_or(opt.config, "learning_rate", cfg.learning_rate));
  const std::string name = get_or<std::string>(opt.config, "optimizer", "adam");
  if (name == "adam") {
    cfg.optimizer = asvi::TrainConfig::Optimizer::adam;
  } else if (name == "rmsprop") {
    cfg.optimizer = asvi::TrainConfig::Optimizer::rmsprop;
  } else {
    throw ConfigError("optimizer must be 'adam' or 'rmsprop', got '" + name + "'");
  }
  cfg.seed = seed;
  cfg.tau = opt.tau.value_or(get_or(opt.config, "tau", cfg.tau));
  cfg.early_stop_tol = get_or(opt.config, "early_stop_tol", cfg.early_stop_tol);
  cfg.early_stop_window = get_or(opt.config, "early_stop_window", cfg.early_stop_window);
  cfg.eval_passes = get_or(opt.config, "eval_passes", cfg.eval_passes);
  cfg.validate();
  return cfg;
}

fs::path prepare_out_dir(const Options& opt) {
  fs::path dir(opt.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw ConfigError("cannot create output directory: " + dir.string());
  }
  return dir;
}

const std::set<std::string> kCommonKeys = {"seed", "out", "parallel"};
const std::set<std::string> kPriorKeys = {"sigma0", "lambda",         "lambda_s",
                                          "sigma_eps", "tau",         "entropy_in_nats"};
const std::set<std::string> kTrainKeys = {"batch_size",      "mc_samples",        "epochs",
                                          "learning_rate",   "optimizer",         "early_stop_tol",
                                          "early_stop_window", "eval_passes",     "eval_draws"};

std::set<std::string> merge_keys(std::initializer_list<std::set<std::string>> groups) {
  std::set<std::string> all;
  for (const auto& group : groups) all.insert(group.begin(), group.end());
  return all;
}

// ---- teacher ----------------------------------------------------------

int cmd_teacher(const Options& opt) {
  check_keys(opt.config,
             merge_keys({kCommonKeys,
                         {"input_dim", "teacher_widths", "weight_low", "weight_high", "zero_rate",
                          "n_train", "n_test", "sigma_eps"}}));
  const std::uint64_t seed = resolve_seed(opt);
  asvi::NetworkShape shape;
  shape.input_dim = get_or(opt.config, "input_dim", 20);
  shape.hidden_widths = get_or(opt.config, "teacher_widths", std::vector<int>{10, 10});
  shape.validate();
  const double weight_low = get_or(opt.config, "weight_low", 0.5);
  const double weight_high = get_or(opt.config, "weight_high", 1.5);
  const double zero_rate = get_or(opt.config, "zero_rate", 0.5);
  const long n_train = get_or(opt.config, "n_train", 10000L);
  const long n_test = get_or(opt.config, "n_test", 1000L);
  const double sigma_eps = opt.sigma_eps.value_or(get_or(opt.config, "sigma_eps", 1.0));
  if (n_train < 1) throw ConfigError("n_train must be >= 1");
  if (n_test < 0) throw ConfigError("n_test must be >= 0");
  if (!(sigma_eps >= 0.0)) throw ConfigError("sigma_eps must be >= 0");
  if (!(zero_rate >= 0.0 && zero_rate <= 1.0)) throw ConfigError("zero_rate must lie in [0,1]");

  const fs::path dir = prepare_out_dir(opt);
  asvi::TeacherNetwork teacher =
      generate_teacher(shape, weight_low, weight_high, zero_rate, asvi::derive_seed(seed, "teacher"));
  asvi::write_json_file(dir / "teacher.json", asvi::teacher_to_json(teacher, seed));

  asvi::RegressionDataset train =
      synthesize(teacher, static_cast<std::size_t>(n_train), sigma_eps, asvi::derive_seed(seed, "train-data"));
  asvi::write_csv(dir / "train.csv", train);
  if (n_test > 0) {
    asvi::RegressionDataset test =
        synthesize(teacher, static_cast<std::size_t>(n_test), sigma_eps, asvi::derive_seed(seed, "test-data"));
    asvi::write_csv(dir / "test.csv", test);
  }
  std::cout << "teacher: " << teacher.nonzero_count << " of " << teacher.theta.size()
            << " coordinates nonzero; wrote " << (dir / "teacher.json").string() << "\n";
  return 0;
}

// ---- train ------------------------------------------------------------

struct LoadedData {
  asvi::RegressionDataset train;
  std::optional<asvi::RegressionDataset> test;
  std::optional<asvi::Standardizer> standardizer;
};

LoadedData load_training_data(const Options& opt, double sigma_eps) {
  LoadedData out;
  const std::string train_csv = get_or<std::string>(opt.config, "train_csv", "");
  if (train_csv.empty()) throw ConfigError("train_csv is required");
  const std::string target = get_or<std::string>(opt.config, "target", "y");
  out.train = asvi::load_csv(train_csv, target);
  out.train.sigma_eps = sigma_eps;
  const std::string test_csv = get_or<std::string>(opt.config, "test_csv", "");
  if (!test_csv.empty()) {
    out.test = asvi::load_csv(test_csv, target);
    out.test->sigma_eps = sigma_eps;
  }
  if (get_or(opt.config, "standardize", false)) {
    out.standardizer = asvi::fit_standardizer(out.train);
    out.train = asvi::apply(*out.standardizer, out.train);
    if (out.test) out.test = asvi::apply(*out.standardizer, *out.test);
  }
  return out;
}

json metrics_json(const asvi::VariationalParams& params, const asvi::NetworkShape& shape,
                  const asvi::RegressionDataset* test, int eval_draws, double tau,
                  std::uint64_t eval_seed, const std::optional<asvi::Standardizer>& st) {
  json metrics = json::object();
  const asvi::SparsitySummary sparsity = asvi::sparsity_summary(params);
  metrics["mean_inclusion"] = sparsity.mean_inclusion;
  metrics["expected_edges"] = sparsity.expected_edges;
  if (test != nullptr) {
    asvi::Rng rng(eval_seed);
    auto pred = asvi::posterior_mean_predict(params, shape, *test, eval_draws, tau, rng);
    metrics["test_rmse"] = asvi::rmse(pred, test->y);
    if (st) {
      // RMSE back in the original target units.
      metrics["test_rmse_original"] = asvi::rmse(pred, test->y) * st->y_std;
    }
  }
  return metrics;
}

int cmd_train(const Options& opt) {
  check_keys(opt.config,
             merge_keys({kCommonKeys, kPriorKeys, kTrainKeys,
                         {"train_csv", "test_csv", "target", "standardize", "input_dim",
                          "hidden_widths"}}));
  const std::uint64_t seed = resolve_seed(opt);
  const asvi::PriorConfig prior = resolve_prior(opt);
  const asvi::TrainConfig cfg = resolve_train(opt, seed);
  const int eval_draws = get_or(opt.config, "eval_draws", 30);

  LoadedData data = load_training_data(opt, prior.sigma_eps);

  asvi::NetworkShape shape;
  shape.input_dim = get_or(opt.config, "input_dim", static_cast<int>(data.train.p()));
  if (opt.widths_flag) {
    shape.hidden_widths = parse_int_list(*opt.widths_flag, "--widths");
  } else {
    shape.hidden_widths = get_or(opt.config, "hidden_widths", std::vector<int>{10, 10});
  }
  shape.validate();
  if (shape.input_dim != static_cast<int>(data.train.p())) {
    throw ConfigError("input_dim does not match the dataset feature count");
  }

  const fs::path dir = prepare_out_dir(opt);
  asvi::TrainResult result = asvi::train_width(data.train, shape, prior, cfg);

  asvi::ParamsFile pf{shape, result.params, data.standardizer};
  asvi::write_json_file(dir / "params.json", asvi::params_file_to_json(pf));

  const std::uint64_t eval_seed = asvi::derive_seed(seed, "posterior-eval");
  json report = asvi::elbo_report_to_json(result.report);
  report["seed"] = seed;
  report["eval_seed"] = eval_seed;
  report["metrics"] = metrics_json(result.params, shape,
                                   data.test ? &*data.test : nullptr, eval_draws, cfg.tau,
                                   eval_seed, data.standardizer);
  asvi::write_json_file(dir / "report.json", report);
  std::cout << "train: neg_elbo " << result.report.neg_elbo << ", omega " << result.report.omega
            << "; wrote " << (dir / "params.json").string() << "\n";
  return 0;
}

// ---- select -----------------------------------------------------------

std::vector<asvi::WidthCandidate> resolve_candidates(const Options& opt, int input_dim,
                                                     int hidden_layers) {
  std::vector<asvi::WidthCandidate> candidates;
  const bool multiplier = get_or(opt.config, "candidate_multiplier", false);
  json spec;
  if (opt.candidates_flag) {
    spec = json::array();
    for (int v : parse_int_list(*opt.candidates_flag, "--candidates")) spec.push_back(v);
  } else if (opt.config.contains("candidates")) {
    spec = opt.config.at("candidates");
  } else {
    throw ConfigError("candidates are required (config key 'candidates' or --candidates)");
  }
  if (!spec.is_array() || spec.empty()) throw ConfigError("candidates must be a non-empty array");
  for (const json& entry : spec) {
    if (entry.is_number_integer()) {
      const int level = entry.get<int>();
      if (multiplier) {
        candidates.push_back(asvi::WidthCandidate::from_multiplier(level, input_dim, hidden_layers));
      } else {
        candidates.push_back(asvi::WidthCandidate::explicit_widths(
            std::vector<int>(static_cast<std::size_t>(hidden_layers), level)));
      }
    } else if (entry.is_array()) {
      candidates.push_back(asvi::WidthCandidate::explicit_widths(entry.get<std::vector<int>>()));
    } else {
      throw ConfigError("candidates entries must be integers or integer arrays");
    }
  }
  return candidates;
}

int cmd_select(const Options& opt) {
  check_keys(opt.config,
             merge_keys({kCommonKeys, kPriorKeys, kTrainKeys,
                         {"train_csv", "test_csv", "target", "standardize", "input_dim",
                          "hidden_layers", "candidates", "candidate_multiplier"}}));
  const std::uint64_t seed = resolve_seed(opt);
  const asvi::PriorConfig prior = resolve_prior(opt);
  const asvi::TrainConfig cfg = resolve_train(opt, seed);
  const int eval_draws = get_or(opt.config, "eval_draws", 30);
  const int hidden_layers = get_or(opt.config, "hidden_layers", 2);
  if (hidden_layers < 1) throw ConfigError("hidden_layers must be >= 1");

  LoadedData data = load_training_data(opt, prior.sigma_eps);
  const int input_dim = static_cast<int>(data.train.p());
  auto candidates = resolve_candidates(opt, input_dim, hidden_layers);

  const fs::path dir = prepare_out_dir(opt);
  asvi::SelectionReport report =
      asvi::select_width(data.train, candidates, input_dim, prior, cfg, opt.parallel,
                         data.test ? &*data.test : nullptr, eval_draws);

  json j = asvi::selection_report_to_json(report);
  j["selected_params_file"] = "selected_params.json";
  asvi::write_json_file(dir / "selection.json", j);

  const asvi::CandidateResult& winner = report.per_candidate[static_cast<std::size_t>(report.selected)];
  asvi::ParamsFile pf{winner.candidate.shape(input_dim), winner.params, data.standardizer};
  asvi::write_json_file(dir / "selected_params.json", asvi::params_file_to_json(pf));

  std::cout << "select: picked candidate " << report.selected << " (widths";
  for (int w : winner.candidate.widths) std::cout << " " << w;
  std::cout << ", omega_p " << winner.omega_p << "); wrote " << (dir / "selection.json").string()
            << "\n";
  return 0;
}

// ---- rates ------------------------------------------------------------

int cmd_rates(const Options& opt) {
  check_keys(opt.config,
             merge_keys({kCommonKeys,
                         {"depth", "width_multiplier", "sparsity", "n", "input_dim", "slab_bound",
                          "alpha", "delta", "rate_constant", "c_n", "f_norm"}}));
  asvi::RateInputs in;
  in.depth = get_or(opt.config, "depth", 2);
  in.width_multiplier = get_or(opt.config, "width_multiplier", 1);
  in.sparsity = get_or(opt.config, "sparsity", 1.0);
  in.n = get_or(opt.config, "n", 1000L);
  in.input_dim = get_or(opt.config, "input_dim", 1);
  in.slab_bound = get_or(opt.config, "slab_bound", 2.0);
  in.delta = get_or(opt.config, "delta", 1.0);
  in.rate_constant = get_or(opt.config, "rate_constant", 1.0);

  json out;
  out["inputs"] = {{"depth", in.depth},
                   {"width_multiplier", in.width_multiplier},
                   {"sparsity", in.sparsity},
                   {"n", in.n},
                   {"input_dim", in.input_dim},
                   {"slab_bound", in.slab_bound},
                   {"delta", in.delta},
                   {"rate_constant", in.rate_constant}};
  out["variational_error"] = asvi::variational_error(in);
  out["estimation_rate"] = asvi::estimation_rate(in);

  if (opt.config.contains("alpha")) {
    const double alpha = opt.config.at("alpha").get<double>();
    const double c_n = get_or(opt.config, "c_n", 1.0);
    const double f_norm = get_or(opt.config, "f_norm", 1.0);
    asvi::HolderStructure hs = asvi::holder_structure(alpha, in.input_dim, in.n, c_n);
    out["inputs"]["alpha"] = alpha;
    out["inputs"]["c_n"] = c_n;
    out["inputs"]["f_norm"] = f_norm;
    out["holder_structure"] = {{"depth", hs.depth},
                               {"sparsity_bound", hs.sparsity_bound},
                               {"width_multiplier", hs.width_multiplier}};
    const long n_width = std::max(1L, static_cast<long>(hs.width_multiplier));
    out["holder_approx_bound"] = asvi::holder_approx_bound(alpha, in.input_dim, in.n, n_width, f_norm);
  }

  std::cout << out.dump(2) << "\n";
  if (opt.out_dir != ".") {
    asvi::write_json_file(prepare_out_dir(opt) / "rates.json", out);
  }
  return 0;
}

// ---- eval -------------------------------------------------------------

int cmd_eval(const Options& opt) {
  check_keys(opt.config, merge_keys({kCommonKeys,
                                     {"params_json", "data_csv", "target", "eval_draws", "tau",
                                      "sigma_eps", "teacher_json"}}));
  const std::uint64_t seed = resolve_seed(opt);
  const std::string params_path = get_or<std::string>(opt.config, "params_json", "");
  const std::string data_path = get_or<std::string>(opt.config, "data_csv", "");
  if (params_path.empty()) throw ConfigError("params_json is required");
  if (data_path.empty()) throw ConfigError("data_csv is required");
  const std::string target = get_or<std::string>(opt.config, "target", "y");
  const int draws = get_or(opt.config, "eval_draws", 30);
  const double tau = opt.tau.value_or(get_or(opt.config, "tau", 0.5));
  const double sigma_eps = opt.sigma_eps.value_or(get_or(opt.config, "sigma_eps", 1.0));

  asvi::ParamsFile pf = asvi::params_file_from_json(asvi::read_json_file(params_path));
  asvi::RegressionDataset data = asvi::load_csv(data_path, target);
  if (pf.standardizer) data = asvi::apply(*pf.standardizer, data);

  const std::uint64_t eval_seed = asvi::derive_seed(seed, "posterior-eval");
  json out = metrics_json(pf.params, pf.shape, &data, draws, tau, eval_seed, pf.standardizer);
  out["n"] = data.n();
  out["draws"] = draws;
  out["seed"] = seed;
  out["eval_seed"] = eval_seed;

  const std::string teacher_path = get_or<std::string>(opt.config, "teacher_json", "");
  if (!teacher_path.empty()) {
    asvi::TeacherNetwork teacher = asvi::teacher_from_json(asvi::read_json_file(teacher_path));
    asvi::Rng rng(asvi::derive_seed(seed, "hellinger-eval"));
    out["hellinger_sq"] =
        asvi::empirical_hellinger_sq(pf.params, pf.shape, teacher, data, sigma_eps, draws, tau, rng);
  }

  std::cout << out.dump(2) << "\n";
  if (opt.out_dir != ".") {
    asvi::write_json_file(prepare_out_dir(opt) / "metrics.json", out);
  }
  return 0;
}

void attach_common(CLI::App* sub, Options& opt) {
  sub->add_option("--config", opt.config_path, "JSON config file");
  sub->add_option("--seed", opt.seed_flag, "random seed (fallback: env SVI_SEED)");
  sub->add_option("--out", opt.out_dir, "output directory");
  sub->add_option("--parallel", opt.parallel, "worker count for candidate training")
      ->check(CLI::PositiveNumber);
  sub->add_option("--lr", opt.lr, "learning rate");
  sub->add_option("--epochs", opt.epochs, "training epochs");
  sub->add_option("--batch-size", opt.batch_size, "minibatch size");
  sub->add_option("--lambda", opt.lambda, "width prior rate");
  sub->add_option("--lambda-s", opt.lambda_s, "sparsity rate");
  sub->add_option("--sigma0", opt.sigma0, "slab std");
  sub->add_option("--sigma-eps", opt.sigma_eps, "observation noise std");
  sub->add_option("--tau", opt.tau, "Gumbel-softmax temperature");
  sub->add_option("--widths", opt.widths_flag, "hidden widths, comma separated");
  sub->add_option("--candidates", opt.candidates_flag, "candidate width levels, comma separated");
}

void load_config(Options& opt) {
  if (opt.config_path.empty()) return;
  opt.config = asvi::read_json_file(opt.config_path);
  if (!opt.config.is_object()) throw ConfigError("config root must be a JSON object");
  if (opt.config.contains("out") && opt.out_dir == ".") {
    opt.out_dir = opt.config.at("out").get<std::string>();
  }
  if (opt.config.contains("parallel") && opt.parallel == 1) {
    opt.parallel = opt.config.at("parallel").get<int>();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive sparse variational inference for ReLU networks"};
  app.require_subcommand(1);

  Options teacher_opt, train_opt, select_opt, rates_opt, eval_opt;
  CLI::App* teacher = app.add_subcommand("teacher", "generate a sparse teacher network and datasets");
  CLI::App* train = app.add_subcommand("train", "train one architecture");
  CLI::App* select = app.add_subcommand("select", "penalized-ELBO width selection");
  CLI::App* rates = app.add_subcommand("rates", "theoretical rate diagnostics");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  attach_common(teacher, teacher_opt);
  attach_common(train, train_opt);
  attach_common(select, select_opt);
  attach_common(rates, rates_opt);
  attach_common(eval, eval_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (teacher->parsed()) {
      load_config(teacher_opt);
      return cmd_teacher(teacher_opt);
    }
    if (train->parsed()) {
      load_config(train_opt);
      return cmd_train(train_opt);
    }
    if (select->parsed()) {
      load_config(select_opt);
      return cmd_select(select_opt);
    }
    if (rates->parsed()) {
      load_config(rates_opt);
      return cmd_rates(rates_opt);
    }
    if (eval->parsed()) {
      load_config(eval_opt);
      return cmd_eval(eval_opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
