#include "carousel/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "carousel/model_io.hpp"
#include "carousel/tuning.hpp"

namespace carousel {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kVersion = "0.1.0";

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<Index> k;
  std::optional<double> w_row;
  std::optional<double> w_col;
  std::optional<std::string> fixed;
  std::optional<std::string> out;
  std::optional<std::string> ratings;
  std::optional<std::string> models;
  std::optional<int> budget;
  std::string candidate;
  Index rows = 1;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string valid_model_names() {
  std::string names;
  for (Family f : all_families()) {
    if (!names.empty()) names += ", ";
    names += family_name(f);
  }
  return names;
}

Family family_or_throw(const std::string& name) {
  const auto f = family_from_name(name);
  if (!f) {
    throw std::invalid_argument("unknown model \"" + name + "\"; valid identifiers: " +
                                valid_model_names());
  }
  return *f;
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  const json j = json::parse(in);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    cfg.ratings_path = d.value("ratings", "");
    cfg.movies_path = d.value("movies", "");
    cfg.tags_path = d.value("tags", "");
    if (d.contains("format")) {
      const auto f = d.at("format").get<std::string>();
      if (f == "dat") {
        cfg.format = InteractionFormat::DoubleColon;
      } else if (f == "tsv") {
        cfg.format = InteractionFormat::TabSeparated;
      } else {
        throw std::invalid_argument("dataset.format must be \"dat\" or \"tsv\"");
      }
    }
  }
  if (j.contains("split") && j.at("split").contains("ratios")) {
    const auto r = j.at("split").at("ratios").get<std::vector<double>>();
    if (r.size() != 3) throw std::invalid_argument("split.ratios needs three values");
    cfg.ratios = {r[0], r[1], r[2]};
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.k = j.value("k", cfg.k);
  cfg.weights.row = j.value("w_row", cfg.weights.row);
  cfg.weights.col = j.value("w_col", cfg.weights.col);
  if (j.contains("fixed")) cfg.fixed_models = j.at("fixed").get<std::vector<std::string>>();
  if (j.contains("models")) {
    for (const auto& [name, source] : j.at("models").items()) {
      cfg.models.emplace_back(name, source.is_string() ? source.get<std::string>() : source.dump());
    }
  }
  if (j.contains("tuning")) cfg.tuning_budget = j.at("tuning").value("budget", cfg.tuning_budget);
  cfg.relevance_threshold = j.value("relevance_threshold", cfg.relevance_threshold);
  cfg.normalize = j.value("normalize", cfg.normalize);
  cfg.out_dir = j.value("out", cfg.out_dir);
  return cfg;
}

void apply_flags(RunConfig& cfg, const Flags& f) {
  if (f.seed) cfg.seed = *f.seed;
  if (f.k) cfg.k = *f.k;
  if (f.w_row) cfg.weights.row = *f.w_row;
  if (f.w_col) cfg.weights.col = *f.w_col;
  if (f.fixed) cfg.fixed_models = split_list(*f.fixed);
  if (f.out) cfg.out_dir = *f.out;
  if (f.ratings) cfg.ratings_path = *f.ratings;
  if (f.budget) cfg.tuning_budget = *f.budget;
  if (f.models) {
    cfg.models.clear();
    for (const auto& name : split_list(*f.models)) cfg.models.emplace_back(name, "default");
  }
}

json config_json(const RunConfig& cfg) {
  json j;
  j["dataset"] = {{"ratings", cfg.ratings_path}, {"movies", cfg.movies_path}, {"tags", cfg.tags_path}};
  if (cfg.format) j["dataset"]["format"] = *cfg.format == InteractionFormat::DoubleColon ? "dat" : "tsv";
  j["split"] = {{"ratios", {cfg.ratios.train, cfg.ratios.validation, cfg.ratios.test}}};
  j["seed"] = cfg.seed;
  j["k"] = cfg.k;
  j["w_row"] = cfg.weights.row;
  j["w_col"] = cfg.weights.col;
  j["fixed"] = cfg.fixed_models;
  j["models"] = json::object();
  for (const auto& [name, source] : cfg.models) {
    j["models"][name] = source.starts_with("{") ? json::parse(source) : json(source);
  }
  j["tuning"] = {{"budget", cfg.tuning_budget}};
  j["relevance_threshold"] = cfg.relevance_threshold;
  j["normalize"] = cfg.normalize;
  j["out"] = cfg.out_dir;
  return j;
}

struct Dataset {
  InteractionSet interactions;
  DataSplit split;
  std::optional<ItemContentMatrix> icm;
};

Dataset load_dataset(const RunConfig& cfg, std::ostream& log) {
  std::ifstream in(cfg.ratings_path);
  if (!in) throw std::runtime_error("cannot open dataset " + cfg.ratings_path);
  Dataset ds;
  ds.interactions =
      parse_interactions(in, cfg.format.value_or(format_from_path(cfg.ratings_path)));
  ds.split = holdout_split(ds.interactions, cfg.ratios, derive_seed(cfg.seed, "split"));
  log << "loaded " << ds.interactions.size() << " interactions, " << ds.split.train.n_users()
      << " users, " << ds.split.train.n_items() << " items\n";
  return ds;
}

const ItemContentMatrix& item_features(Dataset& ds, const RunConfig& cfg, std::ostream& log) {
  if (!ds.icm) {
    if (cfg.movies_path.empty()) {
      throw std::invalid_argument("ItemKNNHybrid needs dataset.movies in the config");
    }
    std::ifstream movies(cfg.movies_path);
    if (!movies) throw std::runtime_error("cannot open " + cfg.movies_path);
    std::ifstream tags;
    if (!cfg.tags_path.empty()) {
      tags.open(cfg.tags_path);
      if (!tags) throw std::runtime_error("cannot open " + cfg.tags_path);
    }
    ds.icm = parse_item_features(movies, cfg.tags_path.empty() ? nullptr : &tags,
                                 ds.split.train.items);
    log << "item features: " << ds.icm->n_features() << " columns, " << ds.icm->skipped_rows
        << " rows skipped\n";
  }
  return *ds.icm;
}

fs::path tuned_params_path(const RunConfig& cfg, const std::string& name) {
  return fs::path(cfg.out_dir) / "tuning" / (name + "_best.json");
}

HyperParams resolve_params(const RunConfig& cfg, const std::string& name,
                           const std::string& source) {
  const Family family = family_or_throw(name);
  if (source == "default" || family == Family::TopPopular) return default_params(family);
  if (source == "tuned") {
    const auto path = tuned_params_path(cfg, name);
    std::ifstream in(path);
    if (!in) throw std::runtime_error("no tuned parameters at " + path.string() + "; run `tune` first");
    return params_from_map(family, read_param_file(in));
  }
  std::istringstream in(source);
  return params_from_map(family, read_param_file(in));
}

std::string source_for(const RunConfig& cfg, const std::string& name) {
  for (const auto& [model, source] : cfg.models) {
    if (model == name) return source;
  }
  return "default";
}

Model train_or_load(Dataset& ds, const RunConfig& cfg, const std::string& name, std::ostream& log) {
  const auto saved = fs::path(cfg.out_dir) / "models" / (name + ".bin");
  if (fs::exists(saved)) {
    log << "loading " << name << " from " << saved.string() << '\n';
    return load_model(saved.string());
  }
  const HyperParams params = resolve_params(cfg, name, source_for(cfg, name));
  const ItemContentMatrix* icm =
      family_of(params) == Family::ItemKNNHybrid ? &item_features(ds, cfg, log) : nullptr;
  log << "training " << name << '\n';
  return fit(params, ds.split.train, icm);
}

std::vector<std::string> candidate_names(const RunConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& [name, source] : cfg.models) {
    family_or_throw(name);
    if (std::find(cfg.fixed_models.begin(), cfg.fixed_models.end(), name) == cfg.fixed_models.end()) {
      names.push_back(name);
    }
  }
  return names;
}

EvaluationConfig evaluation_config(const RunConfig& cfg) {
  EvaluationConfig e;
  e.k = cfg.k;
  e.weights = cfg.weights;
  e.fixed_models = cfg.fixed_models;
  e.candidate_models = candidate_names(cfg);
  e.relevance_threshold = cfg.relevance_threshold;
  e.normalize = cfg.normalize;
  return e;
}

std::ofstream open_output(const fs::path& path) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_output(std::ofstream& out, const fs::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void write_run_record(const RunConfig& cfg, const std::string& command) {
  json record;
  record["command"] = command;
  record["version"] = kVersion;
  record["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                    "." + std::to_string(EIGEN_MINOR_VERSION);
#if defined(__clang__)
  record["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  record["compiler"] = std::string("gcc ") + __VERSION__;
#endif
  record["root_seed"] = cfg.seed;
  record["derived_seeds"]["split"] = derive_seed(cfg.seed, "split");
  for (Family f : all_families()) {
    const std::string name(family_name(f));
    record["derived_seeds"]["tune:" + name] = derive_seed(cfg.seed, "tune:" + name);
  }
  record["config"] = config_json(cfg);
  const auto path = fs::path(cfg.out_dir) / ("run_record_" + command + ".json");
  auto out = open_output(path);
  out << record.dump(2) << '\n';
  close_output(out, path);
}

void cmd_split(const RunConfig& cfg, std::ostream& log) {
  const Dataset ds = load_dataset(cfg, log);
  const fs::path dir = fs::path(cfg.out_dir) / "split";
  {
    const auto path = dir / "manifest.txt";
    auto out = open_output(path);
    write_split_manifest(out, ds.split);
    close_output(out, path);
  }
  const std::pair<Partition, const char*> parts[] = {
      {Partition::Train, "train.tsv"}, {Partition::Validation, "validation.tsv"}, {Partition::Test, "test.tsv"}};
  for (const auto& [part, file] : parts) {
    const auto path = dir / file;
    auto out = open_output(path);
    write_interactions(out, select_partition(ds.interactions, ds.split.assignment, part),
                       InteractionFormat::TabSeparated);
    close_output(out, path);
  }
  log << "train " << ds.split.train.nnz() << ", validation " << ds.split.validation.nnz()
      << ", test " << ds.split.test.nnz() << '\n';
}

void cmd_tune(const RunConfig& cfg, std::ostream& log) {
  Dataset ds = load_dataset(cfg, log);
  for (const auto& [name, source] : cfg.models) {
    const Family family = family_or_throw(name);
    if (family == Family::TopPopular) continue;
    const ItemContentMatrix* icm =
        family == Family::ItemKNNHybrid ? &item_features(ds, cfg, log) : nullptr;
    log << "tuning " << name << " with " << cfg.tuning_budget << " trials\n";
    const TrialLog trials = random_search(family, SearchSpace::defaults(family), cfg.tuning_budget,
                                          ds.split, icm, derive_seed(cfg.seed, "tune:" + name), cfg.k);
    log << "  best validation NDCG@" << cfg.k << " = " << trials.best_value() << '\n';
    const auto dir = fs::path(cfg.out_dir) / "tuning";
    {
      const auto path = dir / (name + "_trials.csv");
      auto out = open_output(path);
      trials.write_csv(out);
      close_output(out, path);
    }
    const auto path = tuned_params_path(cfg, name);
    auto out = open_output(path);
    trials.write_best_params(out);
    close_output(out, path);
  }
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
  Dataset ds = load_dataset(cfg, log);
  std::vector<std::string> names = cfg.fixed_models;
  for (const auto& [name, source] : cfg.models) {
    if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
  }
  for (const auto& name : names) {
    const HyperParams params = resolve_params(cfg, name, source_for(cfg, name));
    const ItemContentMatrix* icm =
        family_of(params) == Family::ItemKNNHybrid ? &item_features(ds, cfg, log) : nullptr;
    log << "training " << name << '\n';
    const Model model = fit(params, ds.split.train, icm);
    const auto path = fs::path(cfg.out_dir) / "models" / (name + ".bin");
    auto out = open_output(path);
    save_model(out, model);
    close_output(out, path);
  }
}

ModelSet models_for(Dataset& ds, const RunConfig& cfg, const std::vector<std::string>& names,
                    std::ostream& log) {
  ModelSet models;
  for (const auto& name : names) {
    family_or_throw(name);
    if (!models.count(name)) models.emplace(name, train_or_load(ds, cfg, name, log));
  }
  return models;
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const EvaluationConfig ecfg = evaluation_config(cfg);
  Dataset ds = load_dataset(cfg, log);
  std::vector<std::string> names = cfg.fixed_models;
  names.insert(names.end(), ecfg.candidate_models.begin(), ecfg.candidate_models.end());
  const ModelSet models = models_for(ds, cfg, names, log);
  const MetricReport report = rank_candidates(models, ds.split, ecfg);

  const fs::path dir(cfg.out_dir);
  {
    const auto path = dir / "report.csv";
    auto out = open_output(path);
    report.write_csv(out);
    close_output(out, path);
  }
  const auto rows = static_cast<Index>(cfg.fixed_models.size() + 1);
  {
    const auto path = dir / "discount_grid.csv";
    auto out = open_output(path);
    write_grid_csv(out, DiscountGrid(rows, cfg.k, cfg.weights).values());
    close_output(out, path);
  }
  std::vector<const Model*> fixed;
  for (const auto& name : cfg.fixed_models) fixed.push_back(&models.at(name));
  for (const auto& name : ecfg.candidate_models) {
    const auto path = dir / ("heatmap_" + name + ".csv");
    auto out = open_output(path);
    write_grid_csv(out, page_heatmap(fixed, models.at(name), ds.split, ecfg));
    close_output(out, path);
  }
  std::ostringstream table;
  report.write_csv(table);
  log << "evaluated " << report.n_users_evaluated << " users\n" << table.str();
}

void cmd_evaluate_page(const RunConfig& cfg, const std::string& candidate, std::ostream& log) {
  if (candidate.empty()) throw std::invalid_argument("evaluate-page needs --candidate");
  EvaluationConfig ecfg = evaluation_config(cfg);
  Dataset ds = load_dataset(cfg, log);
  std::vector<std::string> names = cfg.fixed_models;
  names.push_back(candidate);
  const ModelSet models = models_for(ds, cfg, names, log);
  std::vector<const Model*> fixed;
  for (const auto& name : cfg.fixed_models) fixed.push_back(&models.at(name));
  const Evaluation ev = evaluate_page(fixed, models.at(candidate), ds.split, ecfg);

  const auto path = fs::path(cfg.out_dir) / "page.csv";
  auto out = open_output(path);
  std::string fixed_text;
  for (const auto& name : cfg.fixed_models) fixed_text += (fixed_text.empty() ? "" : "|") + name;
  out << "fixed,candidate,page_ndcg2d,n_users\n"
      << fixed_text << ',' << candidate << ',' << format_double(ev.mean) << ',' << ev.users.size()
      << '\n';
  close_output(out, path);
  log << "page NDCG2D = " << ev.mean << " over " << ev.users.size() << " users\n";
}

void cmd_build_page(const RunConfig& cfg, Index rows, std::ostream& log) {
  EvaluationConfig ecfg = evaluation_config(cfg);
  Dataset ds = load_dataset(cfg, log);
  std::vector<std::string> names = cfg.fixed_models;
  names.insert(names.end(), ecfg.candidate_models.begin(), ecfg.candidate_models.end());
  const ModelSet models = models_for(ds, cfg, names, log);
  const auto chosen = greedy_page_builder(models, ecfg.candidate_models, rows, ds.split, ecfg);

  const auto path = fs::path(cfg.out_dir) / "page_build.csv";
  auto out = open_output(path);
  out << "row,model,page_ndcg2d\n";
  std::vector<const Model*> prefix;
  for (const auto& name : cfg.fixed_models) prefix.push_back(&models.at(name));
  for (std::size_t n = 0; n < chosen.size(); ++n) {
    const double value = evaluate_page(prefix, models.at(chosen[n]), ds.split, ecfg).mean;
    out << cfg.fixed_models.size() + n + 1 << ',' << chosen[n] << ',' << format_double(value) << '\n';
    log << "row " << cfg.fixed_models.size() + n + 1 << ": " << chosen[n] << " (page NDCG2D "
        << value << ")\n";
    prefix.push_back(&models.at(chosen[n]));
  }
  close_output(out, path);
}

}  // namespace

void RunConfig::validate() const {
  ratios.validate();
  weights.validate();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (tuning_budget < 1) throw std::invalid_argument("tuning budget must be >= 1");
  if (ratings_path.empty()) throw std::invalid_argument("no dataset path given");
  if (!fs::exists(ratings_path)) throw std::invalid_argument("dataset not found: " + ratings_path);
  for (const auto& name : fixed_models) family_or_throw(name);
  for (const auto& [name, source] : models) family_or_throw(name);
}

std::uint64_t derive_seed(std::uint64_t root, const std::string& label) {
  // FNV-1a over the label, mixed into the root with splitmix64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) h = (h ^ c) * 0x100000001b3ULL;
  std::uint64_t z = root ^ h;
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Carousel-aware offline evaluation of recommender models"};
  app.require_subcommand(1);
  Flags flags;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run configuration");
    sub->add_option("--seed", flags.seed, "root seed (overrides config)");
    sub->add_option("--k", flags.k, "carousel length");
    sub->add_option("--w-row", flags.w_row, "row weight of the 2-D discount");
    sub->add_option("--w-col", flags.w_col, "column weight of the 2-D discount");
    sub->add_option("--fixed", flags.fixed, "comma-separated fixed carousel models");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--ratings", flags.ratings, "ratings file (overrides config)");
    sub->add_option("--models", flags.models, "comma-separated models with default parameters");
  };
  CLI::App* split = app.add_subcommand("split", "write the seeded holdout split");
  CLI::App* train = app.add_subcommand("train", "fit the configured models and save them");
  CLI::App* tune = app.add_subcommand("tune", "random hyperparameter search on validation NDCG");
  CLI::App* evaluate = app.add_subcommand("evaluate", "individual vs carousel ranking table");
  CLI::App* evaluate_page_cmd = app.add_subcommand("evaluate-page", "NDCG2D of one page");
  CLI::App* build_page = app.add_subcommand("build-page", "greedy carousel selection");
  for (CLI::App* sub : {split, train, tune, evaluate, evaluate_page_cmd, build_page}) add_common(sub);
  tune->add_option("--budget", flags.budget, "trials per model family");
  evaluate_page_cmd->add_option("--candidate", flags.candidate, "model shown below the fixed rows")
      ->required();
  build_page->add_option("--rows", flags.rows, "rows to add below the fixed carousels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg = load_config(flags.config);
    apply_flags(cfg, flags);
    cfg.validate();
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "split") {
      cmd_split(cfg, out);
    } else if (command == "train") {
      cmd_train(cfg, out);
    } else if (command == "tune") {
      cmd_tune(cfg, out);
    } else if (command == "evaluate") {
      cmd_evaluate(cfg, out);
    } else if (command == "evaluate-page") {
      cmd_evaluate_page(cfg, flags.candidate, out);
    } else {
      cmd_build_page(cfg, flags.rows, out);
    }
    write_run_record(cfg, command);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace carousel
