#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sfr/config.hpp"
#include "sfr/evaluate.hpp"
#include "sfr/item_graph.hpp"
#include "sfr/l0_oracle.hpp"
#include "sfr/linearity.hpp"
#include "sfr/report_io.hpp"
#include "sfr/second_derivative.hpp"
#include "sfr/toys.hpp"

namespace fs = std::filesystem;

namespace {

// An error tagged with the pipeline stage that raised it.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what) : std::runtime_error(stage + ": " + what) {}
};

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

// --config plus one flag per config key (dashes for underscores).
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "key = value config file");
    for (const auto& key : sfr::config_key_names()) {
      std::string flag = key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      options.emplace_back(key, app->add_option("--" + flag, values[key], "overrides config key '" + key + "'"));
    }
  }

  sfr::ExperimentConfig load() const {
    return stage("config", [&] {
      sfr::ExperimentConfig cfg;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open " + config_path);
        cfg = sfr::read_config(in);
      }
      for (const auto& [key, opt] : options)
        if (opt->count() > 0) sfr::set_config_value(cfg, key, values.at(key));
      cfg.validate();
      return cfg;
    });
  }
};

sfr::RatingMatrix read_dataset(const sfr::ExperimentConfig& cfg) {
  return stage("read", [&] {
    if (cfg.dataset.empty()) throw std::runtime_error("no dataset given (set 'dataset' or --dataset)");
    std::ifstream in(cfg.dataset);
    if (!in) throw std::runtime_error("cannot open " + cfg.dataset);
    try {
      return sfr::parse_ratings(in, cfg.format, cfg.bounds);
    } catch (const sfr::ParseError& e) {
      throw std::runtime_error(cfg.dataset + ": " + e.what());
    }
  });
}

sfr::ItemGraph graph_for(const sfr::RatingMatrix& m, const sfr::ExperimentConfig& cfg, const std::string& graph_path) {
  return stage("graph", [&] {
    if (!graph_path.empty()) {
      std::ifstream in(graph_path);
      if (!in) throw std::runtime_error("cannot open " + graph_path);
      return sfr::parse_graph(in, m.items().names());
    }
    return sfr::build_item_graph(m, sfr::GraphBuildOptions{cfg.threshold, cfg.min_support, cfg.jobs});
  });
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void print_graph_stats(std::ostream& os, const sfr::ItemGraph& g) {
  os << "nodes " << g.size() << " edges " << g.edge_count() << " isolated " << g.isolated_count() << '\n';
}

std::string cell(double v, int precision = 3) {
  if (std::isnan(v)) return "-";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

int cmd_build_graph(const ConfigFlags& flags, const std::string& out_path, bool train_only) {
  const auto cfg = flags.load();
  auto m = read_dataset(cfg);
  if (train_only) m = stage("split", [&] { return sfr::split_ratings(m, cfg.split_fraction, cfg.split_seed).train; });
  const auto g = graph_for(m, cfg, "");
  stage("write", [&] {
    const fs::path path = out_path.empty() ? fs::path(cfg.output_dir) / "graph.tsv" : fs::path(out_path);
    auto out = open_output(path);
    sfr::serialize_graph(out, g);
  });
  print_graph_stats(std::cerr, g);
  return 0;
}

int cmd_evaluate(const ConfigFlags& flags, const std::string& toy_name) {
  const auto cfg = flags.load();
  sfr::EvalOptions opt;
  opt.methods = cfg.methods;
  opt.solver = cfg.solver;
  opt.jobs = cfg.jobs;

  std::optional<sfr::Split> split;
  std::optional<sfr::ItemGraph> graph;
  if (!toy_name.empty()) {
    const auto toy = sfr::toy_by_name(toy_name);
    if (!toy) throw StageError("config", "unknown toy '" + toy_name + "' (square, ladder26)");
    split = sfr::toy_split(*toy);
    graph = toy->graph;
    opt.bound_only = false;  // a toy scores every unobserved node
  } else {
    const auto m = read_dataset(cfg);
    split = stage("split", [&] { return sfr::split_ratings(m, cfg.split_fraction, cfg.split_seed); });
    graph = graph_for(split->train, cfg, "");
  }
  const auto rep = stage("evaluate", [&] { return sfr::evaluate(*split, *graph, opt); });

  stage("write", [&] {
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    open_output(dir / "report.json") << sfr::report_to_json(rep).dump(2) << '\n';
    auto rmse = open_output(dir / "rmse.tsv");
    sfr::write_rmse_tsv(rmse, rep);
    auto preds = open_output(dir / "predictions.csv");
    sfr::write_predictions_csv(preds, rep, split->train);
    auto manifest = open_output(dir / "test_manifest.csv");
    sfr::write_split_manifest(manifest, *split);
    auto used = open_output(dir / "config.txt");
    sfr::write_config(used, cfg);
  });

  std::cout << "test examples " << rep.test_examples << ", bound problems " << std::fixed << std::setprecision(2)
            << 100.0 * rep.bound_fraction() << "% (higher "
            << 100.0 * rep.class_fraction(sfr::BoundClass::higher) << "%, lower "
            << 100.0 * rep.class_fraction(sfr::BoundClass::lower) << "%)\n\n";
  std::cout << sfr::format_rmse_table(rep);
  return 0;
}

int cmd_predict(const ConfigFlags& flags, const std::string& user, const std::string& items_arg,
                const std::string& graph_path, const std::string& out_path) {
  const auto cfg = flags.load();
  const auto m = read_dataset(cfg);
  const auto g = graph_for(m, cfg, graph_path);
  const auto u = m.users().find(user);
  if (!u) throw StageError("predict", "unknown user '" + user + "'");

  std::map<sfr::Index, double> observed;
  for (const auto& r : m.user_ratings(*u)) observed.emplace(r.index, r.rating);
  std::vector<sfr::Index> targets;
  if (items_arg.empty()) {
    for (sfr::Index i = 0; i < m.item_count(); ++i)
      if (!observed.count(i)) targets.push_back(i);
  } else {
    for (const auto part : sfr::detail::split_on(items_arg, ",")) {
      const auto name = sfr::detail::trim(part);
      const auto i = m.items().find(name);
      if (!i) throw StageError("predict", "unknown item '" + std::string(name) + "'");
      targets.push_back(*i);
    }
  }

  std::vector<sfr::UserRecovery> recs;
  stage("predict", [&] {
    for (const auto method : cfg.methods) {
      switch (method) {
        case sfr::Method::knn: recs.push_back(sfr::predict_knn(g, observed, targets)); break;
        case sfr::Method::hcp: recs.push_back(sfr::predict_hcp(g, observed, targets, cfg.bounds)); break;
        case sfr::Method::sfr: {
          auto s = cfg.solver;
          s.bounds = cfg.bounds;
          recs.push_back(sfr::predict_sfr(g, observed, targets, s));
          break;
        }
        case sfr::Method::l0_oracle: throw std::runtime_error("l0_oracle is only available on toys");
      }
    }
  });

  const fs::path path = out_path.empty() ? fs::path(cfg.output_dir) / ("predict_" + user + ".csv") : fs::path(out_path);
  stage("write", [&] {
    auto out = open_output(path);
    out << "user,item,method,estimate\n";
    for (const auto& rec : recs)
      for (const auto t : targets) {
        out << user << ',' << m.items().name(t) << ',' << sfr::method_name(rec.method) << ',';
        if (const auto e = rec.estimate(t)) out << sfr::format_rating(*e);
        out << '\n';
      }
  });
  std::cout << std::left << std::setw(8) << "method" << std::right << std::setw(12) << "estimates" << std::setw(14)
            << "abstentions" << '\n';
  for (const auto& rec : recs) {
    std::size_t answered = 0;
    for (const auto t : targets) answered += rec.estimate(t) ? 1 : 0;
    std::cout << std::left << std::setw(8) << sfr::method_name(rec.method) << std::right << std::setw(12) << answered
              << std::setw(14) << targets.size() - answered << '\n';
  }
  std::cout << "written to " << path.string() << '\n';
  return 0;
}

int cmd_examine(const ConfigFlags& flags, const std::string& graph_path, const std::string& out_path) {
  const auto cfg = flags.load();
  const auto m = read_dataset(cfg);
  const auto g = graph_for(m, cfg, graph_path);
  const auto h = stage("examine", [&] { return sfr::examine_linearity(m, g, cfg.linearity); });
  stage("write", [&] {
    const fs::path path = out_path.empty() ? fs::path(cfg.output_dir) / "linearity.tsv" : fs::path(out_path);
    auto out = open_output(path);
    sfr::write_histogram_tsv(out, h);
  });
  std::cout << "samples " << h.samples << '\n';
  if (h.samples > 0) {
    std::cout << "zero bin " << h.zero_bin() << " (" << cell(100.0 * h.zero_bin() / h.samples, 1) << "%), modal "
              << (h.zero_is_modal() ? "yes" : "no") << '\n';
  }
  return 0;
}

int cmd_toy(const ConfigFlags& flags, const std::string& which, const std::string& method_name,
            std::size_t max_sources) {
  const auto cfg = flags.load();
  const auto toy = sfr::toy_by_name(which);
  if (!toy) throw StageError("config", "unknown toy '" + which + "' (square, ladder26)");
  const auto method = sfr::parse_method(method_name);
  if (!method) throw StageError("config", "unknown method '" + method_name + "'");
  const auto& g = toy->graph;

  std::vector<sfr::Index> all(g.size());
  for (sfr::Index i = 0; i < g.size(); ++i) all[i] = i;
  std::vector<double> values(g.size(), std::nan(""));
  auto solver = cfg.solver;
  solver.bounds = toy->bounds;

  stage("solve", [&] {
    if (*method == sfr::Method::l0_oracle) {
      const auto res = sfr::l0_oracle(g, toy->observed, toy->bounds, max_sources, 1e-8);
      std::cout << "candidate sets checked " << res.candidates_checked << '\n';
      if (!res.min_source_count) {
        std::cout << "no feasible source set with at most " << max_sources << " sources\n";
        return;
      }
      std::cout << "minimum source count " << *res.min_source_count << ", feasible sets:";
      for (const auto& s : res.solutions) {
        std::cout << " {";
        for (std::size_t k = 0; k < s.sources.size(); ++k) std::cout << (k ? "," : "") << g.name(s.sources[k]);
        std::cout << '}';
      }
      std::cout << "\n\n";
      values = res.solutions.front().values;
      return;
    }
    sfr::UserRecovery rec;
    if (*method == sfr::Method::knn) rec = sfr::predict_knn(g, toy->observed, all);
    if (*method == sfr::Method::hcp) rec = sfr::predict_hcp(g, toy->observed, all, toy->bounds);
    if (*method == sfr::Method::sfr) rec = sfr::predict_sfr(g, toy->observed, all, solver);
    for (const auto& [i, v] : rec.estimates) values[i] = v;
  });

  const auto lap = sfr::second_derivative(g, values, solver.source_tolerance);
  std::cout << std::left << std::setw(6) << "node" << std::right << std::setw(8) << "truth" << std::setw(10)
            << "observed" << std::setw(10) << "estimate" << std::setw(10) << "grad2" << std::setw(8) << "source"
            << '\n';
  for (sfr::Index i = 0; i < g.size(); ++i) {
    const auto& t = toy->ground_truth[i];
    const double l = lap[i] ? *lap[i] : std::nan("");
    std::cout << std::left << std::setw(6) << g.name(i) << std::right << std::setw(8) << (t ? cell(*t, 2) : "-")
              << std::setw(10) << (toy->observed.count(i) ? "yes" : "no") << std::setw(10) << cell(values[i])
              << std::setw(10) << cell(l) << std::setw(8) << (std::isnan(l) ? "-" : lap.is_source(i) ? "yes" : "")
              << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalar-function recovery on item-item graphs: graph building, prediction and evaluation"};
  app.require_subcommand(1);

  auto* build = app.add_subcommand("build-graph", "build the thresholded Pearson item graph");
  ConfigFlags build_flags;
  build_flags.attach(build);
  std::string build_out;
  bool train_only = false;
  build->add_option("-o,--out", build_out, "edge list path (default <output_dir>/graph.tsv)");
  build->add_flag("--train-only", train_only, "use only the training side of the configured split");

  auto* eval = app.add_subcommand("evaluate", "split, build the graph, predict and score the bound problem");
  ConfigFlags eval_flags;
  eval_flags.attach(eval);
  std::string toy_name;
  eval->add_option("--toy", toy_name, "evaluate a toy fixture instead of a dataset (square, ladder26)");

  auto* predict = app.add_subcommand("predict", "predict one user's ratings with every configured method");
  ConfigFlags predict_flags;
  predict_flags.attach(predict);
  std::string user, items, predict_graph, predict_out;
  predict->add_option("-u,--user", user, "user id")->required();
  predict->add_option("--items", items, "comma-separated item ids (default: every unrated item)");
  predict->add_option("-g,--graph", predict_graph, "precomputed edge list (default: build from the dataset)");
  predict->add_option("-o,--out", predict_out, "CSV path (default <output_dir>/predict_<user>.csv)");

  auto* examine = app.add_subcommand("examine", "histogram of observed second derivatives");
  ConfigFlags examine_flags;
  examine_flags.attach(examine);
  std::string examine_graph, examine_out;
  examine->add_option("-g,--graph", examine_graph, "precomputed edge list (default: build from the dataset)");
  examine->add_option("-o,--out", examine_out, "TSV path (default <output_dir>/linearity.tsv)");

  auto* toy = app.add_subcommand("toy", "solve a toy fixture and print the node table");
  ConfigFlags toy_flags;
  toy_flags.attach(toy);
  std::string which, toy_method = "sfr";
  std::size_t max_sources = 2;
  toy->add_option("which", which, "square or ladder26")->required();
  toy->add_option("-m,--method", toy_method, "knn, hcp, sfr or l0");
  toy->add_option("--max-sources", max_sources, "largest source set the l0 search tries");

  CLI11_PARSE(app, argc, argv);

  const char* current = "sfr";
  try {
    if (build->parsed()) {
      current = "build-graph";
      return cmd_build_graph(build_flags, build_out, train_only);
    }
    if (eval->parsed()) {
      current = "evaluate";
      return cmd_evaluate(eval_flags, toy_name);
    }
    if (predict->parsed()) {
      current = "predict";
      return cmd_predict(predict_flags, user, items, predict_graph, predict_out);
    }
    if (examine->parsed()) {
      current = "examine";
      return cmd_examine(examine_flags, examine_graph, examine_out);
    }
    if (toy->parsed()) {
      current = "toy";
      return cmd_toy(toy_flags, which, toy_method, max_sources);
    }
  } catch (const std::exception& e) {
    std::cerr << "sfr " << current << ": " << e.what() << '\n';
    return 1;
  }
  return 1;
}
