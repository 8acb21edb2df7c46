#include "wdur/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>

#include "wdur/cascade.hpp"
#include "wdur/config.hpp"
#include "wdur/errors.hpp"
#include "wdur/io.hpp"
#include "wdur/metrics.hpp"
#include "wdur/selftest.hpp"
#include "wdur/trainer.hpp"
#include "wdur/wavelet.hpp"

namespace wdur {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) { return p.extension() == ".png" || p.extension() == ".wdtn"; }

std::map<std::string, fs::path> images_by_id(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw UsageError("'" + dir.string() + "' is not a directory");
  std::map<std::string, fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file() || !is_image_file(e.path())) continue;
    const std::string id = e.path().stem().string();
    if (!out.emplace(id, e.path()).second) {
      throw UsageError("'" + dir.string() + "' has more than one image named '" + id + "'");
    }
  }
  return out;
}

unsigned eval_threads() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WDUR_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw UsageError("WDUR_THREADS must be a positive integer, got '" + std::string(env) + "'");
    }
    n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

struct TrainArgs {
  std::string config, data, out;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  RunConfig cfg = a.config.empty() ? RunConfig{} : load_config(a.config);
  if (!a.data.empty()) cfg.data = a.data;
  if (!a.out.empty()) cfg.out = a.out;
  if (cfg.data.empty() || cfg.out.empty()) throw UsageError("train: --data and --out are required");
  const std::vector<SamplePair> data = load_dataset(cfg.data);
  const NoiseSchedule sched = cfg.schedule();
  Models models = make_models(cfg.net, cfg.model_seed);
  fs::create_directories(cfg.out);
  {
    std::ofstream cf(cfg.out / "train_config.txt");
    write_config(cf, cfg);
  }
  const int report_every = std::max(1, cfg.train.steps / 20);
  const auto log = fit(data, models, sched, cfg.train, cfg.projection, cfg.out,
                       [&](const LossRecord& r) {
                         if (r.step % report_every == 0 || r.step + 1 == cfg.train.steps) {
                           out << "step " << r.step << " lr " << r.lr << " loss "
                               << r.terms.l_total << '\n';
                         }
                       });
  write_loss_csv(cfg.out / "loss.csv", log);
  save_models(cfg.out / "model.wdur", models);
  out << "wrote " << (cfg.out / "model.wdur").string() << '\n';
  return 0;
}

struct UrArgs {
  std::string input, ref, mode = "csp", ckpt, out, config;
  int scale = 2;
  std::uint64_t seed = 0;
  bool dump_levels = false;
};

int cmd_ur(const UrArgs& a, std::ostream& out) {
  if (a.scale < 1 || (a.scale & (a.scale - 1)) != 0) {
    throw UsageError("ur: --scale must be a power of 2, got " + std::to_string(a.scale));
  }
  const CascadeMode mode = parse_mode(a.mode);
  if (mode == CascadeMode::csp && a.ref.empty()) throw UsageError("ur: csp mode needs --ref");
  const RunConfig rc = a.config.empty() ? RunConfig{} : load_config(a.config);
  const ImageTensor lr = load_image(a.input);
  const Models models = load_models(a.ckpt);
  CascadeConfig cfg = plan_cascade(lr.height(), lr.height() * a.scale, 2);
  cfg.mode = mode;
  cfg.seed = a.seed;
  cfg.hf_sigma = rc.cascade.hf_sigma;
  const NoiseSchedule sched = rc.schedule();
  const fs::path out_path(a.out);
  LevelCallback dump;
  if (a.dump_levels) {
    dump = [&](int level, const ImageTensor& img) {
      fs::path p = out_path;
      p.replace_filename(out_path.stem().string() + "_level" + std::to_string(level) +
                         out_path.extension().string());
      save_image(p, img);
    };
  }
  const ImageTensor result =
      mode == CascadeMode::csp
          ? run_csp_wavediffur(lr, load_image(a.ref), cfg, models, sched, rc.projection, dump)
          : run_wavediffur(lr, cfg, models, sched, rc.projection, dump);
  save_image(out_path, result);
  out << "wrote " << out_path.string() << " (" << result.shape_string() << ", d=" << cfg.d << ")\n";
  return 0;
}

struct EvalArgs {
  std::string pred_dir, gt_dir, csv;
  int scale = 0;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto gt = images_by_id(a.gt_dir);
  const auto pred = images_by_id(a.pred_dir);
  std::vector<std::string> ids;
  for (const auto& [id, path] : gt) {
    if (!pred.count(id)) throw UsageError("eval: no prediction for '" + id + "'");
    ids.push_back(id);
  }
  if (ids.empty()) throw UsageError("eval: no images in '" + a.gt_dir + "'");
  std::vector<MetricReport> reports(ids.size());
  std::vector<std::string> errors(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < ids.size(); i = next++) {
      try {
        reports[i] = evaluate(load_image(pred.at(ids[i])), load_image(gt.at(ids[i])));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned n = std::min<unsigned>(eval_threads(), static_cast<unsigned>(ids.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!errors[i].empty()) throw Error("eval: " + ids[i] + ": " + errors[i]);
  }
  std::ofstream csv(a.csv);
  if (!csv) throw FormatError("cannot open '" + a.csv + "' for writing");
  csv.precision(10);
  csv << "image_id,scale,psnr,ssim,sam,sre,ag\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const MetricReport& r = reports[i];
    csv << ids[i] << ',' << a.scale << ',' << r.psnr << ',' << r.ssim << ',' << r.sam << ','
        << r.sre << ',' << r.ag << '\n';
  }
  out << "evaluated " << ids.size() << " images\n";
  return 0;
}

int cmd_dwt(const std::string& input, const std::string& prefix, std::ostream& out) {
  const WaveletBands b = dwt2(load_image(input));
  for (const auto& [name, band] : {std::pair{"A", &b.A}, std::pair{"V", &b.V},
                                   std::pair{"H", &b.Hb}, std::pair{"D", &b.D}}) {
    save_tensor(prefix + "_" + name + ".wdtn", *band);
  }
  out << "wrote " << prefix << "_{A,V,H,D}.wdtn\n";
  return 0;
}

struct GenArgs {
  std::string out;
  int n = 200, hr_size = 32, levels = 1, channels = 3;
  std::uint64_t seed = 0;
};

int cmd_gendata(const GenArgs& a, std::ostream& out) {
  save_dataset(a.out, make_synthetic_dataset(a.seed, a.n, a.hr_size, a.levels, a.channels));
  out << "wrote " << a.n << " samples to " << a.out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wavelet-domain cascaded diffusion super-resolution"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train the x2 models on a dataset directory");
  train->add_option("--config", ta.config, "key = value config file");
  train->add_option("--data", ta.data, "Dataset root with <id>/{lr,ref,hr}.wdtn");
  train->add_option("--out", ta.out, "Output directory");

  UrArgs ua;
  auto* ur = app.add_subcommand("ur", "Cascaded super-resolution of one image");
  ur->add_option("--input", ua.input, "Input image (.png or .wdtn)")->required();
  ur->add_option("--ref", ua.ref, "Reference image (csp mode)");
  ur->add_option("--scale", ua.scale, "Magnification, a power of 2")->required();
  ur->add_option("--mode", ua.mode, "baseline or csp");
  ur->add_option("--ckpt", ua.ckpt, "Model checkpoint")->required();
  ur->add_option("--seed", ua.seed, "Sampling seed");
  ur->add_option("--out", ua.out, "Output image (.png or .wdtn)")->required();
  ur->add_option("--config", ua.config, "Schedule and sampler settings");
  ur->add_flag("--dump-levels", ua.dump_levels, "Also write every cascade level");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Metrics over matching files in two directories");
  eval->add_option("--pred-dir", ea.pred_dir)->required();
  eval->add_option("--gt-dir", ea.gt_dir)->required();
  eval->add_option("--csv", ea.csv)->required();
  eval->add_option("--scale", ea.scale, "Value written to the scale column");

  std::string dwt_in, dwt_prefix;
  auto* dwt = app.add_subcommand("dwt", "Write the four Haar bands of an image");
  dwt->add_option("--input", dwt_in)->required();
  dwt->add_option("--out-prefix", dwt_prefix)->required();

  auto* selftest = app.add_subcommand("selftest", "Run the invariant suite");

  GenArgs ga;
  auto* gendata = app.add_subcommand("gendata", "Write a procedural dataset");
  gendata->add_option("--out", ga.out)->required();
  gendata->add_option("--n", ga.n);
  gendata->add_option("--hr-size", ga.hr_size);
  gendata->add_option("--levels", ga.levels);
  gendata->add_option("--channels", ga.channels);
  gendata->add_option("--seed", ga.seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (train->parsed()) return cmd_train(ta, out);
    if (ur->parsed()) return cmd_ur(ua, out);
    if (eval->parsed()) return cmd_eval(ea, out);
    if (dwt->parsed()) return cmd_dwt(dwt_in, dwt_prefix, out);
    if (gendata->parsed()) return cmd_gendata(ga, out);
    if (selftest->parsed()) return print_results(out, run_selftest()) ? 0 : 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace wdur
