/*
 * Copyright 2026 The artscore Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "artscore/annotation_service.hpp"
#include "artscore/config.hpp"
#include "artscore/dataset.hpp"
#include "artscore/errors.hpp"
#include "artscore/http_api.hpp"
#include "artscore/image.hpp"
#include "artscore/kernels.hpp"
#include "artscore/metrics.hpp"
#include "artscore/model.hpp"
#include "artscore/taxonomy.hpp"
#include "artscore/training.hpp"

namespace artscore {

namespace {

struct Options {
  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> min_annotators;
  std::optional<int> threads;
  int verbosity = 1;

  std::string dataset;
  std::string checkpoint;
  std::string out;
  std::string image;
  std::string init;
  std::string split_name = "validation";
  std::string data_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  int category = 0;
};

RunConfig effective_config(const Options& o) {
  RunConfig cfg = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  for (const auto& kv : o.overrides) apply_override(cfg, kv);
  if (o.seed) cfg.set("seed", *o.seed);
  if (o.min_annotators) cfg.set("min_annotators", *o.min_annotators);
  if (o.threads) cfg.set("threads", *o.threads);
  cfg.validate();
  if (cfg.threads > 0) kernels::set_num_threads(cfg.threads);
  return cfg;
}

std::filesystem::path resolve(const RunConfig& cfg, const std::filesystem::path& dataset, const std::string& file) {
  std::filesystem::path p(file);
  if (p.is_absolute()) return p;
  if (!cfg.image_root.empty()) return std::filesystem::path(cfg.image_root) / p;
  return dataset.parent_path() / p;
}

ImageProvider make_provider(const DatasetStore& store, const RunConfig& cfg, const std::filesystem::path& dataset) {
  return [&store, cfg, dataset](const std::string& id) {
    return load_image(resolve(cfg, dataset, store.image(id).file_path));
  };
}

std::vector<Example> make_examples(const DatasetStore& store, const std::vector<std::string>& ids,
                                   const std::map<std::string, ScoreVector>& truth) {
  std::vector<Example> out;
  for (const auto& id : ids) {
    auto it = truth.find(id);
    if (it == truth.end()) continue;
    out.push_back({id, store.image(id).category_index, it->second});
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
}

int cmd_validate(const Options& o, std::ostream& out) {
  std::ifstream in(o.dataset);
  if (!in) throw IoError("cannot open dataset " + o.dataset);
  try {
    parse_dataset(in);
  } catch (const ValidationError& e) {
    for (const auto& v : e.violations()) out << v << '\n';
    out << e.violations().size() << (e.violations().size() == 1 ? " violation" : " violations") << '\n';
    return kExitDomain;
  }
  out << "0 violations\n";
  return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(o);
  const DatasetStore store = load_dataset(o.dataset);
  const StatsReport report = statistics(store, cfg.histogram_bin_width);
  const std::filesystem::path hist =
      o.out.empty() ? std::filesystem::path(std::filesystem::path(o.dataset).stem().string() + "_histogram.csv")
                    : std::filesystem::path(o.out);
  std::ostringstream csv;
  write_histogram_csv(report, csv);
  write_file(hist, csv.str());
  auto j = to_json(report);
  j["histogram_csv"] = hist.string();
  out << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(o);
  const DatasetStore store = load_dataset(o.dataset);
  const Split s = split(store, cfg.split_ratio, cfg.train.seed);
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path(".") : std::filesystem::path(o.out);
  std::string train, val;
  for (const auto& id : s.train) train += id + "\n";
  for (const auto& id : s.validation) val += id + "\n";
  write_file(dir / "train.txt", train);
  write_file(dir / "validation.txt", val);
  out << "train " << s.train.size() << "\nvalidation " << s.validation.size() << '\n';
  return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig cfg = effective_config(o);
  if (o.out.empty()) throw ConfigError("train requires --out");
  const std::filesystem::path run_dir(o.out);
  std::filesystem::create_directories(run_dir);
  const std::string cfg_text = cfg.to_json().dump(2) + "\n";
  write_file(run_dir / "effective_config.json", cfg_text);
  if (o.verbosity > 0) err << "effective config:\n" << cfg_text;

  const DatasetStore store = load_dataset(o.dataset);
  const auto truth = aggregate_all(store, cfg.aggregation);
  if (truth.size() < store.images().size() && o.verbosity > 0) {
    err << (store.images().size() - truth.size()) << " images below " << cfg.aggregation.min_annotators
        << " annotations skipped\n";
  }
  const Split s = split(store, cfg.split_ratio, cfg.train.seed);
  TrainingData data;
  data.train = make_examples(store, s.train, truth);
  data.validation = make_examples(store, s.validation, truth);
  data.images = make_provider(store, cfg, o.dataset);

  BranchedModel model = build_model(cfg.model);
  if (!o.init.empty()) {
    const auto report = load_pretrained(model, o.init);
    for (const auto& w : report.warnings) err << "warning: " << w << '\n';
  }
  ProtocolOptions popts;
  popts.attribute_order = cfg.attribute_order;
  popts.output_dir = run_dir;
  popts.on_stage_complete = [&](const StageResult& r) {
    if (o.verbosity == 0) return;
    err << "stage " << r.stage << " (" << branch_name(r.branch) << "): " << r.history.size() << " epochs";
    if (!r.history.empty()) err << ", train loss " << r.history.back().train_loss;
    err << '\n';
  };
  const ProtocolResult result = run_full_protocol(model, data, cfg.train, popts);
  out << "trained " << result.stages.size() << " stages";
  if (!result.skipped_stages.empty()) out << " (" << result.skipped_stages.size() << " resumed)";
  out << "; checkpoint " << (run_dir / "final").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const RunConfig cfg = effective_config(o);
  const BranchedModel model = load_checkpoint(o.checkpoint);
  const DatasetStore store = load_dataset(o.dataset);
  std::vector<std::string> ids;
  if (o.split_name == "all") {
    for (const auto& [id, img] : store.images()) ids.push_back(id);
  } else {
    const Split s = split(store, cfg.split_ratio, cfg.train.seed);
    if (o.split_name == "train") {
      ids = s.train;
    } else if (o.split_name == "validation") {
      ids = s.validation;
    } else {
      throw ConfigError("--split must be train, validation or all");
    }
  }
  const auto truth = aggregate_all(store, cfg.aggregation);
  const auto examples = make_examples(store, ids, truth);
  MetricsReport report = evaluate(model, examples, make_provider(store, cfg, o.dataset));
  report.model_id = o.checkpoint;
  report.dataset_id = o.dataset;
  report.split = o.split_name;
  write_report_table(report, out);
  if (!o.out.empty()) {
    std::ostringstream csv;
    write_report_csv(report, csv);
    write_file(o.out, csv.str());
  }
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  if (!is_valid_category(o.category)) throw DomainError("invalid category " + std::to_string(o.category));
  const BranchedModel model = load_checkpoint(o.checkpoint);
  const RasterImage image = load_image(o.image);
  const ScoreVector s = model.forward(image, o.category);
  nlohmann::ordered_json j;
  j["image"] = o.image;
  j["category_index"] = o.category;
  j["total_score"] = s.total;
  j["attribute_scores"] = attribute_scores_json(s);
  out << j.dump(2) << '\n';
  return kExitOk;
}

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void on_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

int cmd_serve(const Options& o, std::ostream& out) {
  effective_config(o);
  AnnotationService service(o.data_dir.empty() ? std::optional<std::filesystem::path>{}
                                               : std::optional<std::filesystem::path>{o.data_dir});
  HttpServer server(service);
  const int port = server.bind(o.host, o.port);
  if (port < 0) throw IoError("cannot bind " + o.host + ":" + std::to_string(o.port));
  out << "listening on http://" << o.host << ':' << port << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

int cmd_export_taxonomy(const Options& o, std::ostream& out) {
  const std::string text = taxonomy_json().dump(2) + "\n";
  if (o.out.empty()) {
    out << text;
  } else {
    write_file(o.out, text);
  }
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case Error::Kind::kIo:
    case Error::Kind::kConfig: return kExitUsage;
    default: return kExitDomain;
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Painting aesthetics scoring: dataset tools, training, evaluation and annotation service"};
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();
  app.add_option("--config", o.config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--set", o.overrides, "key=value override (repeatable)")->take_all();
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--min-annotators", o.min_annotators, "quorum for aggregation");
  app.add_option("--threads", o.threads, "OpenMP thread count");
  app.add_flag_function("-v,--verbose", [&](std::int64_t n) { o.verbosity = 1 + static_cast<int>(n); }, "more output");
  app.add_flag_function("-q,--quiet", [&](std::int64_t) { o.verbosity = 0; }, "no progress output");

  auto* validate = app.add_subcommand("validate", "check every record against its category mask");
  validate->add_option("--dataset", o.dataset)->required();
  auto* stats = app.add_subcommand("stats", "annotation counts and score histogram");
  stats->add_option("--dataset", o.dataset)->required();
  stats->add_option("--out", o.out, "histogram CSV path");
  auto* split_cmd = app.add_subcommand("split", "stratified train/validation split");
  split_cmd->add_option("--dataset", o.dataset)->required();
  split_cmd->add_option("--out", o.out, "output directory");
  auto* train = app.add_subcommand("train", "run the staged training protocol");
  train->add_option("--dataset", o.dataset)->required();
  train->add_option("--out", o.out, "run directory")->required();
  train->add_option("--init", o.init, "checkpoint to initialize the backbone and total head from");
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  eval->add_option("--checkpoint", o.checkpoint)->required();
  eval->add_option("--dataset", o.dataset)->required();
  eval->add_option("--split", o.split_name, "train, validation or all");
  eval->add_option("--out", o.out, "metrics CSV path");
  auto* predict = app.add_subcommand("predict", "score one image");
  predict->add_option("--checkpoint", o.checkpoint)->required();
  predict->add_option("--image", o.image)->required();
  predict->add_option("--category", o.category, "category index 1..24")->required();
  auto* serve = app.add_subcommand("serve", "run the annotation service");
  serve->add_option("--data-dir", o.data_dir, "campaign storage directory");
  serve->add_option("--host", o.host);
  serve->add_option("--port", o.port);
  auto* export_tax = app.add_subcommand("export-taxonomy", "write taxonomy.json");
  export_tax->add_option("--out", o.out, "output path (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(o, out);
    if (*stats) return cmd_stats(o, out);
    if (*split_cmd) return cmd_split(o, out);
    if (*train) return cmd_train(o, out, err);
    if (*eval) return cmd_eval(o, out);
    if (*predict) return cmd_predict(o, out);
    if (*serve) return cmd_serve(o, out);
    if (*export_tax) return cmd_export_taxonomy(o, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) err << "  " << v << '\n';
    return kExitDomain;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e);
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
  return kExitUsage;
}

}  // namespace artscore
