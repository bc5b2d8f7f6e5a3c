// bcop: one entry point for training, compiling, running and modelling
// the binary classifiers. Machine-readable JSON on stdout (one summary
// line per run), human logs on stderr. Exit codes: 0 ok, 2 usage,
// 3 I/O, 4 model or format error.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bcop/checkpoint.hpp"
#include "bcop/compile.hpp"
#include "bcop/data/manifest.hpp"
#include "bcop/data/metrics.hpp"
#include "bcop/data/synth.hpp"
#include "bcop/engine.hpp"
#include "bcop/error.hpp"
#include "bcop/gradcam.hpp"
#include "bcop/model_file.hpp"
#include "bcop/perfmodel.hpp"
#include "bcop/simd/kernels.hpp"
#include "bcop/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

enum class LogLevel { kQuiet, kInfo, kDebug };

LogLevel log_level() {
  const char* env = std::getenv("BCOP_LOG");
  if (!env) return LogLevel::kInfo;
  const std::string v(env);
  if (v == "quiet" || v == "0") return LogLevel::kQuiet;
  if (v == "debug" || v == "2") return LogLevel::kDebug;
  return LogLevel::kInfo;
}

void log(LogLevel level, const std::string& msg) {
  static const LogLevel threshold = log_level();
  if (threshold != LogLevel::kQuiet && level <= threshold) std::cerr << "[bcop] " << msg << '\n';
}

void summary(const json& j) { std::cout << j.dump() << std::endl; }

struct DataArgs {
  int synthetic = 0;
  std::string dir;
  std::uint64_t data_seed = 0;
  bool data_seed_set = false;
};

void add_data_options(CLI::App* cmd, DataArgs& d) {
  auto* syn = cmd->add_option("--synthetic", d.synthetic, "Use N synthetic quadrant images per class")
                  ->check(CLI::PositiveNumber);
  auto* dir = cmd->add_option("--data", d.dir, "Dataset root with one directory per class");
  syn->excludes(dir);
  cmd->add_option("--data-seed", d.data_seed, "Seed for the synthetic set or manifest balancing (default --seed)")
      ->each([&d](const std::string&) { d.data_seed_set = true; });
}

bcop::Dataset load_data(const DataArgs& d, std::uint64_t seed, json& info) {
  const std::uint64_t s = d.data_seed_set ? d.data_seed : seed;
  if (d.synthetic > 0) {
    info["data"] = "synthetic";
    info["per_class"] = d.synthetic;
    info["data_seed"] = s;
    return bcop::synth_quadrant_dataset(d.synthetic, s);
  }
  if (d.dir.empty()) throw CLI::ValidationError("data", "one of --synthetic N or --data DIR is required");
  bcop::Manifest m = bcop::build_manifest(d.dir);
  if (m.warnings) log(LogLevel::kInfo, std::to_string(m.warnings) + " unreadable files skipped");
  m = bcop::balance(m, s);
  info["data"] = d.dir;
  info["data_seed"] = s;
  return bcop::load_dataset(m);
}

int exit_code(bcop::ErrorCode code) {
  switch (code) {
    case bcop::ErrorCode::kIo:
      return 3;
    case bcop::ErrorCode::kBadMagic:
    case bcop::ErrorCode::kBadVersion:
    case bcop::ErrorCode::kTruncated:
    case bcop::ErrorCode::kBounds:
    case bcop::ErrorCode::kFormat:
    case bcop::ErrorCode::kShapeMismatch:
      return 4;
    default:
      return 2;
  }
}

// Model and checkpoint paths are checked up front so a missing file is an
// I/O failure rather than a format failure.
void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) bcop::fail(bcop::ErrorCode::kIo, "cannot open '" + path + "'");
}

json folding_json(const bcop::FoldingConfig& f) {
  json pe = json::array();
  json simd = json::array();
  for (const auto& l : f.layers) {
    pe.push_back(l.pe);
    simd.push_back(l.simd);
  }
  return {{"pe", pe}, {"simd", simd}};
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) bcop::fail(bcop::ErrorCode::kIo, "cannot write '" + path + "'");
  out << text << '\n';
  if (!out) bcop::fail(bcop::ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary neural network toolkit: train, compile, run, model and explain"};
  app.require_subcommand(1);

  std::string arch = "n-cnv";
  std::uint64_t seed = 1;
  double clock_mhz = 100.0;
  std::string simd_isa;
  app.add_option("--simd", simd_isa, "Kernel variant: scalar, avx2 or neon (default: best available)");

  // train
  auto* train = app.add_subcommand("train", "Train a latent model and write a checkpoint");
  DataArgs train_data;
  bcop::TrainConfig tcfg;
  std::string train_out;
  train->add_option("--arch", arch, "cnv, n-cnv or u-cnv")->capture_default_str();
  train->add_option("--seed", seed)->capture_default_str();
  train->add_option("--epochs", tcfg.epochs)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--batch", tcfg.batch_size)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate)->check(CLI::PositiveNumber)->capture_default_str();
  train->add_flag("--augment", tcfg.augment, "Random contrast, brightness, noise, flip and rotation");
  train->add_option("-o,--out", train_out, "Checkpoint path")->required();
  add_data_options(train, train_data);

  // compile
  auto* compile = app.add_subcommand("compile", "Fold a checkpoint into a deployable model file");
  std::string ckpt_in;
  std::string model_out;
  compile->add_option("--checkpoint", ckpt_in)->required();
  compile->add_option("-o,--out", model_out)->required();

  // infer
  auto* infer = app.add_subcommand("infer", "Classify images with a compiled model");
  std::string model_in;
  std::vector<std::string> images;
  infer->add_option("--model", model_in)->required();
  infer->add_option("images", images, "Image files")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Confusion matrix and metrics of a compiled model");
  DataArgs eval_data;
  std::string eval_out;
  eval->add_option("--model", model_in)->required();
  eval->add_option("--seed", seed)->capture_default_str();
  eval->add_option("-o,--out", eval_out, "Write the confusion JSON here");
  add_data_options(eval, eval_data);

  // bench
  auto* bench = app.add_subcommand("bench", "Analytic pipeline report for a folding");
  std::string folding_name = "builtin";
  std::string bench_out;
  bench->add_option("--arch", arch)->capture_default_str();
  bench->add_option("--clock-mhz", clock_mhz)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--folding", folding_name, "builtin or unit")
      ->check(CLI::IsMember({"builtin", "unit"}))
      ->capture_default_str();
  bench->add_option("-o,--out", bench_out, "Write the report JSON here");

  // dse
  auto* dse = app.add_subcommand("dse", "Greedy rate-matching folding search");
  int pe_budget = 0;
  int simd_budget = 0;
  dse->add_option("--arch", arch)->capture_default_str();
  dse->add_option("--clock-mhz", clock_mhz)->check(CLI::PositiveNumber)->capture_default_str();
  dse->add_option("--pe-budget", pe_budget, "Total PEs (default: builtin folding total)");
  dse->add_option("--simd-budget", simd_budget, "Total SIMD lanes (default: builtin folding total)");
  dse->add_option("-o,--out", bench_out, "Write the report JSON here");

  // gradcam
  auto* gcam = app.add_subcommand("gradcam", "Grad-CAM overlays from a checkpoint");
  DataArgs gcam_data;
  std::vector<std::string> gcam_images;
  std::string out_dir;
  int target_class = -1;
  double alpha = 0.5;
  gcam->add_option("--checkpoint", ckpt_in)->required();
  gcam->add_option("--seed", seed)->capture_default_str();
  gcam->add_option("--out-dir", out_dir)->required();
  gcam->add_option("--class", target_class, "Target class (default: predicted class)")->check(CLI::Range(0, 3));
  gcam->add_option("--alpha", alpha)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gcam->add_option("images", gcam_images, "Image files");
  add_data_options(gcam, gcam_data);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (!simd_isa.empty()) {
      const auto isa = bcop::simd::parse_isa(simd_isa);
      if (!isa || !bcop::simd::select(*isa)) {
        std::cerr << "bcop: kernel variant '" << simd_isa << "' is not available\n";
        return 2;
      }
    }
    log(LogLevel::kDebug, std::string("kernels: ") + std::string(bcop::simd::to_string(bcop::simd::active().isa)));

    if (*train) {
      json s{{"command", "train"}, {"seed", seed}};
      const bcop::NetworkSpec spec = bcop::builtin_spec(arch);
      const bcop::Dataset data = load_data(train_data, seed, s);
      tcfg.seed = seed;
      bcop::Trainer trainer(bcop::init_model(spec, seed), tcfg);
      bcop::EpochMetrics m;
      for (int e = 0; e < tcfg.epochs; ++e) {
        m = trainer.train_epoch(data);
        std::ostringstream msg;
        msg << "epoch " << (e + 1) << "/" << tcfg.epochs << " loss " << m.loss << " acc " << m.accuracy;
        log(LogLevel::kInfo, msg.str());
      }
      bcop::save_checkpoint(trainer.model(), train_out);
      s["arch"] = spec.arch_name;
      s["epochs"] = tcfg.epochs;
      s["batch"] = tcfg.batch_size;
      s["lr"] = tcfg.learning_rate;
      s["samples"] = data.size();
      s["loss"] = m.loss;
      s["train_accuracy"] = m.accuracy;
      s["checkpoint"] = train_out;
      summary(s);
    } else if (*compile) {
      require_file(ckpt_in);
      const bcop::TrainedModel trained = bcop::load_checkpoint(ckpt_in);
      std::vector<std::string> warnings;
      const bcop::CompiledModel model = bcop::compile_model(trained, trained.spec, &warnings);
      for (const auto& w : warnings) log(LogLevel::kInfo, "warning: " + w);
      bcop::emit_model(model, model_out);
      summary({{"command", "compile"},
               {"arch", model.arch_name},
               {"layers", model.layers.size()},
               {"warnings", warnings.size()},
               {"model", model_out}});
    } else if (*infer) {
      require_file(model_in);
      const bcop::CompiledModel model = bcop::load_model(model_in);
      json results = json::array();
      for (const auto& path : images) {
        const bcop::Prediction p = bcop::classify(model, bcop::load_image(path));
        results.push_back({{"image", path},
                           {"class", p.label},
                           {"label", std::string(bcop::kClassNames[static_cast<std::size_t>(p.label)])},
                           {"logits", p.logits}});
      }
      summary({{"command", "infer"}, {"model", model_in}, {"results", results}});
    } else if (*eval) {
      require_file(model_in);
      const bcop::CompiledModel model = bcop::load_model(model_in);
      json s{{"command", "eval"}, {"seed", seed}};
      const bcop::Dataset data = load_data(eval_data, seed, s);
      const auto preds = bcop::classify_batch(model, data.images);
      bcop::ConfusionMatrix cm;
      for (std::size_t i = 0; i < preds.size(); ++i) cm.add(data.labels[i], preds[i].label);
      const auto metrics = bcop::metrics_from_confusion(cm);
      const std::string cm_json = bcop::to_json(cm, metrics);
      if (!eval_out.empty()) write_text(eval_out, cm_json);
      s["model"] = model_in;
      s["confusion"] = json::parse(cm_json);
      summary(s);
    } else if (*bench || *dse) {
      const bcop::NetworkSpec spec = bcop::builtin_spec(arch);
      bcop::FoldingConfig folding;
      json s;
      if (*bench) {
        folding = folding_name == "unit" ? bcop::unit_folding(spec) : bcop::builtin_folding(arch);
        s = {{"command", "bench"}, {"folding", folding_name}};
      } else {
        const bcop::FoldingConfig base = bcop::builtin_folding(arch);
        int pe_total = 0;
        int simd_total = 0;
        for (const auto& l : base.layers) {
          pe_total += l.pe;
          simd_total += l.simd;
        }
        if (pe_budget <= 0) pe_budget = pe_total;
        if (simd_budget <= 0) simd_budget = simd_total;
        folding = bcop::suggest_folding(spec, pe_budget, simd_budget);
        s = {{"command", "dse"}, {"pe_budget", pe_budget}, {"simd_budget", simd_budget},
             {"folding", folding_json(folding)}};
      }
      const auto report = bcop::pipeline_report(spec, folding, clock_mhz * 1e6);
      const std::string text = bcop::to_json(report);
      if (!bench_out.empty()) write_text(bench_out, text);
      s["report"] = json::parse(text);
      summary(s);
    } else if (*gcam) {
      require_file(ckpt_in);
      const bcop::TrainedModel model = bcop::load_checkpoint(ckpt_in);
      json s{{"command", "gradcam"}, {"seed", seed}};
      std::vector<bcop::Image> imgs;
      std::vector<std::string> names;
      std::vector<int> labels;
      if (!gcam_images.empty()) {
        for (const auto& p : gcam_images) {
          imgs.push_back(bcop::load_image(p));
          names.push_back(fs::path(p).stem().string());
          labels.push_back(-1);
        }
      } else {
        bcop::Dataset data = load_data(gcam_data, seed, s);
        for (std::size_t i = 0; i < data.size(); ++i) {
          names.push_back("sample_" + std::to_string(i));
          labels.push_back(data.labels[i]);
        }
        imgs = std::move(data.images);
      }
      std::error_code ec;
      fs::create_directories(out_dir, ec);
      if (ec) bcop::fail(bcop::ErrorCode::kIo, "cannot create '" + out_dir + "': " + ec.message());
      std::ostringstream manifest;
      manifest << "file,label,predicted,target_class,peak_x,peak_y\n";
      for (std::size_t i = 0; i < imgs.size(); ++i) {
        const int predicted = bcop::latent_predict(model, imgs[i]);
        const int cls = target_class >= 0 ? target_class : predicted;
        const bcop::Heatmap hm = bcop::grad_cam(model, imgs[i], cls);
        const auto peak = static_cast<std::size_t>(
            std::max_element(hm.raw.begin(), hm.raw.end()) - hm.raw.begin());
        const std::string file = names[i] + "_cam.png";
        bcop::write_overlay(hm, imgs[i], fs::path(out_dir) / file, alpha);
        manifest << file << ',' << labels[i] << ',' << predicted << ',' << cls << ','
                 << peak % static_cast<std::size_t>(hm.raw_width) << ','
                 << peak / static_cast<std::size_t>(hm.raw_width) << '\n';
      }
      const std::string manifest_path = (fs::path(out_dir) / "manifest.csv").string();
      std::ofstream mf(manifest_path, std::ios::binary);
      mf << manifest.str();
      if (!mf) bcop::fail(bcop::ErrorCode::kIo, "cannot write '" + manifest_path + "'");
      s["images"] = imgs.size();
      s["out_dir"] = out_dir;
      s["manifest"] = manifest_path;
      summary(s);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "bcop: " << e.what() << '\n';
    return 2;
  } catch (const bcop::Error& e) {
    std::cerr << "bcop: " << bcop::to_string(e.code()) << ": " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "bcop: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
