// Copyright 2026 The VeriFrame Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "veriframe/cli.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>

#include "veriframe/artifact.hpp"
#include "veriframe/config.hpp"
#include "veriframe/datapipe.hpp"
#include "veriframe/error.hpp"
#include "veriframe/evaluator.hpp"
#include "veriframe/ingest.hpp"
#include "veriframe/manifest.hpp"
#include "veriframe/service.hpp"
#include "veriframe/synthetic.hpp"
#include "veriframe/trainer.hpp"

namespace veriframe {

namespace fs = std::filesystem;

namespace {

/// Values given on the command line, keyed by config key.
using FlagValues = std::map<std::string, std::string>;

void bind_key(CLI::App* sub, FlagValues& flags, const std::string& name, const std::string& key,
          const std::string& help) {
  sub->add_option_function<std::string>(
      name, [&flags, key](const std::string& v) { flags[key] = v; },
      help + " [" + key + "]");
}

struct Paths {
  std::string manifest, videos, out, index, artifact, file, checkpoint;
  std::vector<std::string> inputs;
  std::string name;
  bool reference = false;
  int videos_per_label = 10, frames = 12, width = 160, height = 120;
};

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string require(const Config& cfg, const std::string& key, const std::string& flag) {
  auto v = cfg.str(key);
  if (v.empty()) throw ConfigError(flag + " (or " + key + ") is required");
  return v;
}

int cmd_synth(const Config& cfg, const Paths& p, std::ostream& out) {
  synthetic::CorpusOptions opt;
  opt.videos_per_label = p.videos_per_label;
  opt.frames_per_video = p.frames;
  opt.width = p.width;
  opt.height = p.height;
  opt.seed = cfg.unsigned_integer("seed");
  const auto manifest = synthetic::write_corpus(p.out, opt);
  out << (fs::path(p.out) / "manifest.csv").string() << '\n';
  return manifest.entries.empty() ? kExitDomainError : kExitOk;
}

int cmd_ingest(const Config& cfg, const Paths& p, std::ostream& out, std::ostream& err) {
  IngestOptions opt;
  opt.frames_per_video = static_cast<std::size_t>(cfg.unsigned_integer("ingest.frames_per_video"));
  const auto mode = parse_sampling_mode(cfg.str("ingest.sampling"));
  if (!mode) throw ConfigError("ingest.sampling must be 'uniform' or 'random'");
  opt.sampling = *mode;
  opt.seed = cfg.unsigned_integer("seed");
  opt.crop_size = static_cast<int>(cfg.integer("ingest.crop_size"));
  opt.crop_margin = cfg.real("ingest.crop_margin");
  opt.workers = static_cast<unsigned>(cfg.unsigned_integer("ingest.workers"));
  const auto detector = make_detector(cfg.str("faces.backend"));
  const auto manifest = load_manifest(p.manifest);
  const fs::path videos = p.videos.empty() ? fs::path(p.manifest).parent_path() / "videos" : fs::path(p.videos);
  const auto report = ingest_videos(manifest, videos, p.out, *detector, opt);

  for (const auto& [video, why] : report.videos_failed) err << "skipped " << video << ": " << why << '\n';
  nlohmann::ordered_json j = {{"index", (report.output_root / "index.csv").string()},
                              {"videos_processed", report.videos_processed},
                              {"videos_failed", report.videos_failed.size()},
                              {"frames_sampled", report.frames_sampled},
                              {"frames_without_faces", report.frames_without_faces},
                              {"faces_real", report.faces_written.at(Label::kReal)},
                              {"faces_fake", report.faces_written.at(Label::kFake)}};
  out << j.dump(2) << '\n';
  return report.videos_processed == 0 ? kExitDomainError : kExitOk;
}

ModelConfig model_config(const Config& cfg) {
  ModelConfig mc;
  mc.backbone = backbone_spec(cfg.str("model.backbone"));
  mc.head_hidden_units = static_cast<int>(cfg.integer("model.head_hidden_units"));
  const auto head = parse_head_output(cfg.str("model.head_output"));
  if (!head) throw ConfigError("model.head_output must be 'softmax_2' or 'sigmoid_1'");
  mc.head_output = *head;
  mc.init_seed = cfg.unsigned_integer("seed");
  return mc;
}

int cmd_train(const Config& cfg, const Paths& p, std::ostream& out, std::ostream& err) {
  const auto index = read_index(p.index);
  const auto mc = model_config(cfg);
  TrainConfig tcfg;
  tcfg.batch_size = static_cast<std::size_t>(cfg.unsigned_integer("trainer.batch_size"));
  tcfg.learning_rate = cfg.real("trainer.learning_rate");
  tcfg.epochs = static_cast<int>(cfg.integer("trainer.epochs"));
  tcfg.seed = cfg.unsigned_integer("seed");
  if (const auto dir = cfg.str("trainer.checkpoint_dir"); !dir.empty()) tcfg.checkpoint_dir = dir;

  StreamOptions so;
  so.batch_size = tcfg.batch_size;
  so.target_size = mc.backbone.input_size;
  so.shuffle_seed = tcfg.seed;
  so.cache = cfg.boolean("datapipe.cache");
  so.prefetch_depth = static_cast<std::size_t>(cfg.unsigned_integer("datapipe.prefetch_depth"));
  so.augment = cfg.boolean("datapipe.augment");
  so.augment_seed = tcfg.seed;
  const auto train_stream = build_stream(index, Split::kTrain, so);
  StreamOptions vo = so;
  vo.shuffle_seed.reset();
  const auto val_stream = build_stream(index, Split::kVal, vo);

  auto result = train(mc, train_stream, val_stream, tcfg, [&err](const EpochRecord& r) {
    err << "epoch " << r.epoch << " loss " << r.train_loss << " acc " << r.train_accuracy
        << " val_loss " << r.val_loss << " val_acc " << r.val_accuracy << '\n';
  });
  const auto artifact = export_model(result.model, p.out, cfg.real("ingest.crop_margin"));
  err << "best epoch " << result.best_epoch << ", artifact " << artifact.path.string() << '\n';
  out << "epoch,train_loss,train_accuracy,val_loss,val_accuracy\n" << std::setprecision(17);
  for (const auto& r : result.history) {
    out << r.epoch << ',' << r.train_loss << ',' << r.train_accuracy << ',' << r.val_loss << ','
        << r.val_accuracy << '\n';
  }
  return kExitOk;
}

int cmd_export(const Paths& p, std::ostream& out) {
  const auto loaded = load_model(p.checkpoint);
  const auto artifact = export_model(*loaded.model, p.out, loaded.artifact.descriptor.crop_margin);
  out << artifact.checksum << '\n';
  return kExitOk;
}

int cmd_evaluate(const Config& cfg, const Paths& p, std::ostream& out) {
  const auto loaded = load_model(require(cfg, "service.model_artifact", "--artifact"));
  const auto index = read_index(p.index);
  const auto eval = evaluate_model(*loaded.model, index,
                                   static_cast<std::size_t>(cfg.unsigned_integer("evaluator.n")),
                                   cfg.unsigned_integer("seed"), cfg.real("evaluator.threshold"));
  const std::string name = p.name.empty() ? loaded.model->config().backbone.name : p.name;
  const auto report = compare_models({{name, eval.cm, std::nullopt, std::nullopt}});
  const fs::path dir = p.out.empty() ? fs::path(".") : fs::path(p.out);
  write_report(report, dir);
  out << report.to_csv();
  return kExitOk;
}

int cmd_report(const Paths& p, std::ostream& out) {
  std::vector<NamedResult> results;
  if (p.reference || p.inputs.empty()) results = reference_results();
  for (const auto& input : p.inputs) {
    const auto bytes = read_file(input);
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(bytes.begin(), bytes.end());
      for (const auto& row : doc.at("rows")) {
        results.push_back({row.at("model").get<std::string>(),
                           {row.at("tp").get<std::size_t>(), row.at("fp").get<std::size_t>(),
                            row.at("tn").get<std::size_t>(), row.at("fn").get<std::size_t>()},
                           std::nullopt,
                           std::nullopt});
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError(input + ": not a report.json (" + e.what() + ")");
    }
  }
  const auto report = compare_models(results);
  const fs::path dir = p.out.empty() ? fs::path(".") : fs::path(p.out);
  write_report(report, dir);
  out << report.to_csv();
  for (const auto& note : report.footnotes) out << "# " << note << '\n';
  return kExitOk;
}

ServiceConfig service_config(const Config& cfg) {
  ServiceConfig sc;
  sc.model_artifact = cfg.str("service.model_artifact");
  sc.detector = cfg.str("service.detector");
  sc.max_upload_mb = static_cast<std::size_t>(cfg.unsigned_integer("service.max_upload_mb"));
  sc.host = cfg.str("service.host");
  sc.port = static_cast<int>(cfg.integer("service.port"));
  return sc;
}

int cmd_serve(const Config& cfg, std::ostream& err) {
  // Block the control signals before any server thread starts so that only
  // the sigwait loop below sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGHUP);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  InferenceService service(service_config(cfg));
  if (const auto e = service.last_error()) err << "model not loaded: " << *e << '\n';
  const int port = service.start();
  err << "listening on " << service.config().host << ':' << port << '\n';
  for (;;) {
    int sig = 0;
    if (sigwait(&signals, &sig) != 0) break;
    if (sig != SIGHUP) break;
    if (const auto e = service.reload()) {
      err << "reload failed, keeping the current model: " << *e << '\n';
    } else {
      err << "reloaded model " << service.scorer()->model_id() << '\n';
    }
  }
  service.stop();
  pthread_sigmask(SIG_UNBLOCK, &signals, nullptr);
  return kExitOk;
}

int cmd_predict(const Config& cfg, const Paths& p, std::ostream& out) {
  const ModelScorer scorer(load_model(require(cfg, "service.model_artifact", "--artifact")));
  const auto detector = make_detector(cfg.str("service.detector"));
  const auto bytes = read_file(p.file);
  const auto type = sniff_media(bytes, p.file);
  if (!type) throw DecodeError(p.file + ": neither an image nor a video");
  ClassifyParams params;
  params.frames = static_cast<std::size_t>(cfg.unsigned_integer("service.frames"));
  params.threshold = cfg.real("service.threshold");
  if (cfg.source("seed") != ConfigLayer::kDefault) params.seed = cfg.unsigned_integer("seed");
  out << classify_media(bytes, *type, scorer, *detector, params).to_json() << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const EnvLookup& getenv) {
  CLI::App app{"Face-level real/fake classification toolkit", "veriframe"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "TOML config file (default ./veriframe.toml if present)");

  FlagValues flags;
  Paths p;
  auto seed = [&](CLI::App* s) { bind_key(s, flags, "--seed", "seed", "Random seed"); };

  auto* synth = app.add_subcommand("synth", "Write a synthetic marker-face video corpus");
  synth->add_option("--out", p.out, "Output directory")->required();
  synth->add_option("--videos-per-label", p.videos_per_label, "Videos per label");
  synth->add_option("--frames", p.frames, "Frames per video");
  synth->add_option("--width", p.width, "Frame width");
  synth->add_option("--height", p.height, "Frame height");
  seed(synth);

  auto* ingest = app.add_subcommand("ingest", "Extract face crops from manifest videos");
  ingest->add_option("--manifest", p.manifest, "Manifest CSV")->required();
  ingest->add_option("--videos", p.videos, "Video directory (default <manifest dir>/videos)");
  ingest->add_option("--out", p.out, "Output directory for crops and index.csv")->required();
  bind_key(ingest, flags, "--frames", "ingest.frames_per_video", "Frames sampled per video");
  bind_key(ingest, flags, "--sampling", "ingest.sampling", "uniform or random");
  bind_key(ingest, flags, "--crop-size", "ingest.crop_size", "Crop side in pixels");
  bind_key(ingest, flags, "--margin", "ingest.crop_margin", "Crop margin fraction");
  bind_key(ingest, flags, "--workers", "ingest.workers", "Worker threads (0 = all cores)");
  bind_key(ingest, flags, "--detector", "faces.backend", "Face detector backend");
  seed(ingest);

  auto* train_cmd = app.add_subcommand("train", "Train a model and export its best epoch");
  train_cmd->add_option("--index", p.index, "index.csv from ingest")->required();
  train_cmd->add_option("--out", p.out, "Artifact directory to write")->required();
  bind_key(train_cmd, flags, "--backbone", "model.backbone", "Backbone name");
  bind_key(train_cmd, flags, "--hidden", "model.head_hidden_units", "Head hidden units");
  bind_key(train_cmd, flags, "--head", "model.head_output", "softmax_2 or sigmoid_1");
  bind_key(train_cmd, flags, "--epochs", "trainer.epochs", "Epochs");
  bind_key(train_cmd, flags, "--lr", "trainer.learning_rate", "Learning rate");
  bind_key(train_cmd, flags, "--batch-size", "trainer.batch_size", "Batch size");
  bind_key(train_cmd, flags, "--checkpoint-dir", "trainer.checkpoint_dir", "Checkpoint directory");
  bind_key(train_cmd, flags, "--cache", "datapipe.cache", "Cache decoded samples (true/false)");
  bind_key(train_cmd, flags, "--augment", "datapipe.augment", "Random horizontal flips (true/false)");
  seed(train_cmd);

  auto* export_cmd = app.add_subcommand("export", "Re-export a checkpoint as a verified artifact");
  export_cmd->add_option("--checkpoint", p.checkpoint, "Source artifact directory")->required();
  export_cmd->add_option("--out", p.out, "Destination directory")->required();
  seed(export_cmd);

  auto* evaluate = app.add_subcommand("evaluate", "Score a test sample and write report.csv/json");
  bind_key(evaluate, flags, "--artifact", "service.model_artifact", "Model artifact");
  evaluate->add_option("--index", p.index, "index.csv from ingest")->required();
  bind_key(evaluate, flags, "--n", "evaluator.n", "Test sample size");
  bind_key(evaluate, flags, "--threshold", "evaluator.threshold", "Decision threshold");
  evaluate->add_option("--out", p.out, "Report directory (default .)");
  evaluate->add_option("--name", p.name, "Row name (default backbone name)");
  seed(evaluate);

  auto* report = app.add_subcommand("report", "Merge results into a comparison report");
  report->add_option("--input", p.inputs, "report.json files to merge");
  report->add_flag("--reference", p.reference, "Include the published per-backbone counts");
  report->add_option("--out", p.out, "Report directory (default .)");
  seed(report);

  auto* serve = app.add_subcommand("serve", "Run the HTTP inference service (SIGHUP reloads)");
  bind_key(serve, flags, "--artifact", "service.model_artifact", "Model artifact");
  bind_key(serve, flags, "--detector", "service.detector", "Face detector backend");
  bind_key(serve, flags, "--host", "service.host", "Bind address");
  bind_key(serve, flags, "--port", "service.port", "Port (0 = any free port)");
  bind_key(serve, flags, "--max-upload-mb", "service.max_upload_mb", "Upload limit in MB");
  seed(serve);

  auto* predict = app.add_subcommand("predict", "Classify one image or video file");
  bind_key(predict, flags, "--artifact", "service.model_artifact", "Model artifact");
  predict->add_option("--file", p.file, "Image or video")->required();
  bind_key(predict, flags, "--frames", "service.frames", "Frames sampled from a video");
  bind_key(predict, flags, "--threshold", "service.threshold", "Decision threshold");
  bind_key(predict, flags, "--detector", "service.detector", "Face detector backend");
  seed(predict);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "veriframe: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    Config cfg = Config::with_defaults();
    if (!config_path.empty()) {
      cfg.load_file(config_path);
    } else if (fs::exists("veriframe.toml")) {
      cfg.load_file("veriframe.toml");
    }
    cfg.load_environment(getenv ? getenv : EnvLookup([](const char* n) { return std::getenv(n); }));
    for (const auto& [key, value] : flags) cfg.set(key, value, ConfigLayer::kFlag);

    if (synth->parsed()) return cmd_synth(cfg, p, out);
    if (ingest->parsed()) return cmd_ingest(cfg, p, out, err);
    if (train_cmd->parsed()) return cmd_train(cfg, p, out, err);
    if (export_cmd->parsed()) return cmd_export(p, out);
    if (evaluate->parsed()) return cmd_evaluate(cfg, p, out);
    if (report->parsed()) return cmd_report(p, out);
    if (serve->parsed()) return cmd_serve(cfg, err);
    if (predict->parsed()) return cmd_predict(cfg, p, out);
  } catch (const ConfigError& e) {
    err << "veriframe: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "veriframe: " << e.what() << '\n';
    return kExitDomainError;
  } catch (const std::exception& e) {
    err << "veriframe: " << e.what() << '\n';
    return kExitDomainError;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace veriframe
