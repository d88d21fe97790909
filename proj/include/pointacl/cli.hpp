#ifndef POINTACL_CLI_HPP
#define POINTACL_CLI_HPP

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pointacl/config.hpp"
#include "pointacl/dataio.hpp"
#include "pointacl/geometry.hpp"
#include "pointacl/manifest.hpp"
#include "pointacl/pipeline.hpp"

namespace pointacl::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) out.push_back(pointacl::detail::to_double(key, std::string(pointacl::detail::trim(item))));
  if (out.empty()) throw ConfigError(key, "empty list");
  return out;
}

inline std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!pointacl::detail::trim(item).empty()) out.emplace_back(pointacl::detail::trim(item));
  return out;
}

inline std::string fmt(double v) { return format_double(v); }

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline std::string metrics_csv(const Metrics& m) {
  std::string s = "scope,label,count,standard_accuracy,robust_accuracy\n";
  s += "all,," + std::to_string(m.samples.size()) + ',' + fmt(m.standard_accuracy) + ',' + fmt(m.robust_accuracy) + '\n';
  for (const auto& c : m.per_class)
    s += "class," + std::to_string(c.label) + ',' + std::to_string(c.count) + ',' + fmt(c.standard_accuracy) + ',' +
         fmt(c.robust_accuracy) + '\n';
  return s;
}

inline std::string samples_csv(const Metrics& m) {
  std::string s = "sample_id,clean_pred,adv_pred,label,linf_used\n";
  for (const auto& r : m.samples)
    s += r.id + ',' + std::to_string(r.clean_pred) + ',' + std::to_string(r.adv_pred) + ',' + std::to_string(r.label) +
         ',' + fmt(r.linf_used) + '\n';
  return s;
}

// Options shared by commands that read a TrainConfig: --config plus --set key=value overrides.
struct ConfigOptions {
  std::string file;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "flat key = value training config");
    app->add_option("--set", sets, "override one config key (key=value), repeatable");
  }

  /// Loads the config; `extra` receives keys that are not TrainConfig fields.
  TrainConfig load(std::map<std::string, std::string>* extra = nullptr) const {
    ConfigEntries entries;
    if (!file.empty()) {
      std::ifstream in(file);
      if (!in) throw ConfigError("config", "cannot open " + file);
      try {
        entries = parse_config(in);
      } catch (const ParseError& e) {
        throw ConfigError("config", e.what());
      }
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError(s, "--set expects key=value");
      entries.emplace_back(std::string(pointacl::detail::trim(s.substr(0, eq))),
                           std::string(pointacl::detail::trim(s.substr(eq + 1))));
    }
    ConfigEntries known;
    for (auto& [k, v] : entries) {
      if (is_config_key(k)) known.emplace_back(k, v);
      else if (extra) (*extra)[k] = v;
      else throw ConfigError(k, "unknown key");
    }
    return apply_config(TrainConfig{}, known);
  }
};

inline std::vector<PointCloud> load_prepared(const fs::path& dir, std::size_t points, std::uint64_t seed,
                                             std::size_t* classes = nullptr) {
  const Dataset ds = read_dataset(dir);
  if (ds.samples.empty()) throw InvalidInput("dataset " + dir.string() + " is empty");
  if (classes) *classes = ds.classes();
  return prepare_all(ds.samples, points, seed);
}

struct Sink {
  std::ostream& out;
  std::ostream& err;
};

// ---- subcommands ----

struct GenData {
  std::string classes = "sphere,cube,cylinder";
  std::size_t per_class = 200, points = 256;
  double noise = 0.01, test_fraction = 0.3;
  std::uint64_t seed = 7;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--classes", classes, "comma-separated shape families")->capture_default_str();
    app->add_option("--per-class", per_class, "samples per family")->capture_default_str();
    app->add_option("--points", points, "points per sample")->capture_default_str();
    app->add_option("--noise", noise, "isotropic noise std (m)")->capture_default_str();
    app->add_option("--test-fraction", test_fraction, "stratified test share")->capture_default_str();
    app->add_option("--seed", seed, "generator seed")->capture_default_str();
    app->add_option("--out", out, "output directory (train/ and test/ inside)")->required();
  }

  int run(RunManifest& man, Sink io) const {
    const auto families = split_names(classes);
    if (families.empty()) throw ConfigError("classes", "no shape families given");
    for (const auto& f : families) {
      try {
        parse_shape(f);
      } catch (const InvalidInput& e) {
        throw ConfigError("classes", e.what());
      }
    }
    if (per_class < 1) throw ConfigError("per-class", "must be >= 1");
    if (points < 1) throw ConfigError("points", "must be >= 1");
    if (!(noise >= 0.0)) throw ConfigError("noise", "must be >= 0");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test-fraction", "must lie in (0, 1)");
    const Dataset ds = generate_synthetic(families, per_class, points, noise, seed);
    const SplitResult sp = split(ds, test_fraction, seed);
    write_dataset(sp.train, fs::path(out) / "train");
    write_dataset(sp.test, fs::path(out) / "test");
    if (sp.warnings) io.err << "warning: " << sp.warnings << " class(es) too small to contribute test samples\n";
    man.seed = seed;
    man.add_output(out);
    man.results["train_samples"] = static_cast<double>(sp.train.size());
    man.results["test_samples"] = static_cast<double>(sp.test.size());
    io.out << "wrote " << sp.train.size() << " train and " << sp.test.size() << " test samples to " << out << '\n';
    return kExitOk;
  }
};

struct Don {
  std::string input, out;
  double r1 = 0.05, r2 = 0.20, keep = 0.75;

  void attach(CLI::App* app) {
    app->add_option("--input", input, "XYZ cloud")->required();
    app->add_option("--r1", r1, "small support radius (m)")->capture_default_str();
    app->add_option("--r2", r2, "large support radius (m)")->capture_default_str();
    app->add_option("--keep", keep, "keep fraction c in (0, 1)")->capture_default_str();
    app->add_option("--out", out, "output XYZ of the high-difference points; magnitudes go to <out>.mag")->required();
  }

  int run(RunManifest& man, Sink io) const {
    if (!(r1 > 0.0 && r1 < r2)) throw ConfigError("r1", "radii must satisfy 0 < r1 < r2");
    if (!(keep > 0.0 && keep < 1.0)) throw ConfigError("keep", "must lie in (0, 1)");
    const PointCloud cloud = load_xyz(input);
    man.add_input(input);
    const DoNField field = don_field(cloud, r1, r2);
    const PointCloud hd = select_high_difference(cloud, field, keep);
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    save_xyz(hd, out);
    std::string mags;
    for (double m : field.magnitudes) mags += fmt(m) + '\n';
    write_text(out + ".mag", mags);
    man.add_output(out);
    man.add_output(out + ".mag");
    man.results["kept"] = static_cast<double>(hd.size());
    io.out << "kept " << hd.size() << " of " << cloud.size() << " points\n";
    return kExitOk;
  }
};

inline std::string loss_csv(const std::vector<RobustLoss>& curve) {
  std::string s = "step,total,contrastive,kld_clean_adv,kld_adv_hd\n";
  for (std::size_t i = 0; i < curve.size(); ++i)
    s += std::to_string(i) + ',' + fmt(curve[i].total) + ',' + fmt(curve[i].contrastive) + ',' +
         fmt(curve[i].kld_clean_adv) + ',' + fmt(curve[i].kld_adv_hd) + '\n';
  return s;
}

struct Pretrain {
  ConfigOptions config;
  std::string data, out;
  std::string resolved_out;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--data", data, "training dataset directory (or config key 'data')");
    app->add_option("--out", out, "run directory (or config key 'out')");
  }

  int run(RunManifest& man, Sink io) {
    std::map<std::string, std::string> extra;
    TrainConfig cfg = config.load(&extra);
    std::string data_dir = data.empty() ? extra["data"] : data;
    std::string out_dir = out.empty() ? extra["out"] : out;
    extra.erase("data");
    extra.erase("out");
    if (!extra.empty()) throw ConfigError(extra.begin()->first, "unknown key");
    if (data_dir.empty()) throw ConfigError("data", "no training data given");
    if (out_dir.empty()) throw ConfigError("out", "no output directory given");
    resolved_out = out_dir;
    std::size_t classes = 0;
    const auto train = load_prepared(data_dir, cfg.dims.points, cfg.seed, &classes);
    cfg.dims.classes = std::max<std::size_t>(classes, 1);
    man.add_input(data_dir);
    man.config = config_to_text(cfg);
    man.seed = cfg.seed;
    std::vector<RobustLoss> curve;
    const ModelParams p = pretrain(train, cfg, nullptr, [&](std::size_t, const RobustLoss& l) {
      RobustLoss slim;
      slim.total = l.total;
      slim.contrastive = l.contrastive;
      slim.kld_clean_adv = l.kld_clean_adv;
      slim.kld_adv_hd = l.kld_adv_hd;
      curve.push_back(slim);
    });
    fs::create_directories(out_dir);
    const fs::path ck = fs::path(out_dir) / "checkpoint.txt";
    save_checkpoint(ck.string(), p);
    write_text(fs::path(out_dir) / "loss.csv", loss_csv(curve));
    write_text(fs::path(out_dir) / "config.txt", man.config);
    for (const char* f : {"checkpoint.txt", "loss.csv", "config.txt"}) man.add_output(fs::path(out_dir) / f);
    if (!curve.empty()) {
      man.results["loss_first"] = curve.front().total;
      man.results["loss_last"] = curve.back().total;
    }
    man.results["steps"] = static_cast<double>(curve.size());
    io.out << "pretrained " << curve.size() << " steps; checkpoint " << ck.string() << '\n';
    return kExitOk;
  }
};

struct Finetune {
  ConfigOptions config;
  std::string checkpoint, mode = "linear", data, out;

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--checkpoint", checkpoint, "pretrained checkpoint")->required();
    app->add_option("--mode", mode, "linear (frozen encoder) or aff (adversarial full finetune)")
        ->check(CLI::IsMember({"linear", "aff"}))
        ->capture_default_str();
    app->add_option("--data", data, "labeled training dataset directory")->required();
    app->add_option("--out", out, "run directory")->required();
  }

  int run(RunManifest& man, Sink io) const {
    TrainConfig cfg = config.load();
    ModelParams p = load_checkpoint(checkpoint);
    man.add_input(checkpoint);
    man.add_input(data);
    std::size_t classes = 0;
    cfg.dims = p.dims;
    const auto train = load_prepared(data, p.dims.points, cfg.seed, &classes);
    if (classes != p.dims.classes) {
      // head sized for this dataset; the encoder is kept
      ModelDims d = p.dims;
      d.classes = classes;
      ModelParams q = init_params(derive_seed(cfg.seed, {0x4844ull}), d);
      q.w1 = p.w1, q.b1 = p.b1, q.w2 = p.w2, q.b2 = p.b2, q.w3 = p.w3, q.b3 = p.b3;
      q.pw1 = p.pw1, q.pb1 = p.pb1, q.pw2 = p.pw2, q.pb2 = p.pb2;
      p = q;
      cfg.dims = d;
    }
    man.config = config_to_text(cfg);
    man.seed = cfg.seed;
    std::string curve_csv;
    if (mode == "linear") {
      std::vector<double> curve;
      p = linear_finetune(p, train, cfg.finetune_epochs, cfg.finetune_lr, cfg.finetune_batch, cfg.seed, &curve);
      curve_csv = "epoch,loss\n";
      for (std::size_t i = 0; i < curve.size(); ++i) curve_csv += std::to_string(i) + ',' + fmt(curve[i]) + '\n';
    } else {
      p = linear_finetune(p, train, cfg.finetune_epochs, cfg.finetune_lr, cfg.finetune_batch, cfg.seed);
      AffCurve curve;
      p = adversarial_full_finetune(p, train, cfg, &curve);
      curve_csv = "epoch,clean_loss,adversarial_loss\n";
      for (std::size_t i = 0; i < curve.clean.size(); ++i)
        curve_csv += std::to_string(i) + ',' + fmt(curve.clean[i]) + ',' + fmt(curve.adversarial[i]) + '\n';
    }
    fs::create_directories(out);
    const fs::path ck = fs::path(out) / "checkpoint.txt";
    save_checkpoint(ck.string(), p);
    write_text(fs::path(out) / "finetune.csv", curve_csv);
    man.add_output(ck);
    man.add_output(fs::path(out) / "finetune.csv");
    io.out << mode << " finetune done; checkpoint " << ck.string() << '\n';
    return kExitOk;
  }
};

struct AttackEval {
  std::string checkpoint, data, mode = "ce", report, metrics;
  double epsilon = 0.01, step_size = 0.0, init_scale = 0.1;
  std::size_t steps = 7;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "finetuned checkpoint")->required();
    app->add_option("--data", data, "labeled test dataset directory")->required();
    app->add_option("--epsilon", epsilon, "l-infinity budget (m)")->capture_default_str();
    app->add_option("--steps", steps, "attack iterations")->capture_default_str();
    app->add_option("--step-size", step_size, "per-step size, 0 = epsilon / steps")->capture_default_str();
    app->add_option("--init-scale", init_scale, "random start as a fraction of epsilon")->capture_default_str();
    app->add_option("--mode", mode, "ce (supervised) or kld (feature space)")
        ->check(CLI::IsMember({"ce", "kld"}))
        ->capture_default_str();
    app->add_option("--seed", seed, "attack seed")->capture_default_str();
    app->add_option("--report", report, "per-sample CSV")->required();
    app->add_option("--metrics", metrics, "aggregate metrics CSV");
  }

  int run(RunManifest& man, Sink io) const {
    AttackConfig ac{epsilon, steps, step_size, init_scale, AttackMode::supervised_ce, Representation::unprojected, seed};
    try {
      ac.validate();
    } catch (const InvalidInput& e) {
      throw ConfigError("epsilon", e.what());
    }
    const ModelParams p = load_checkpoint(checkpoint);
    man.add_input(checkpoint);
    man.add_input(data);
    man.seed = seed;
    const auto test = load_prepared(data, p.dims.points, seed);
    Metrics m;
    if (mode == "ce") {
      m = evaluate(p, test, ac, seed);
    } else {
      // feature-space attack against the clean features; no labels used to craft it
      const std::vector<int> y = labels_of(test);
      m.samples.resize(test.size());
      AttackConfig fa = ac;
      fa.mode = AttackMode::feature_kld;
      parallel_for(test.size(), [&](std::size_t i) {
        AttackConfig a = fa;
        a.seed = derive_seed(seed, {0x4556ull, i});
        const PointCloud adv = ifgm_feature(p, test[i], test[i], a);
        auto& s = m.samples[i];
        s.id = test[i].id;
        s.label = y[i];
        s.clean_pred = predict_index(classify(p, encode(p, test[i], false).h)) + 1;
        s.adv_pred = predict_index(classify(p, encode(p, adv, false).h)) + 1;
        s.linf_used = linf_distance(adv, test[i]);
      });
      std::map<int, ClassMetrics> per;
      std::size_t sa = 0, ra = 0;
      for (const auto& s : m.samples) {
        auto& c = per[s.label];
        c.label = s.label;
        ++c.count;
        c.standard_accuracy += s.clean_pred == s.label;
        c.robust_accuracy += s.adv_pred == s.label;
        sa += s.clean_pred == s.label;
        ra += s.adv_pred == s.label;
      }
      for (auto& [l, c] : per) {
        c.standard_accuracy /= static_cast<double>(c.count);
        c.robust_accuracy /= static_cast<double>(c.count);
        m.per_class.push_back(c);
      }
      m.standard_accuracy = static_cast<double>(sa) / static_cast<double>(test.size());
      m.robust_accuracy = static_cast<double>(ra) / static_cast<double>(test.size());
    }
    write_text(report, samples_csv(m));
    man.add_output(report);
    if (!metrics.empty()) {
      write_text(metrics, metrics_csv(m));
      man.add_output(metrics);
    }
    man.results["standard_accuracy"] = m.standard_accuracy;
    man.results["robust_accuracy"] = m.robust_accuracy;
    io.out << "SA " << fmt(m.standard_accuracy) << " RA " << fmt(m.robust_accuracy) << " over " << test.size()
           << " samples\n";
    return kExitOk;
  }
};

struct Sweep {
  ConfigOptions config;
  std::string axis = "all", values, data, out, checkpoint, seeds = "1,2,3";

  void attach(CLI::App* app) {
    config.attach(app);
    app->add_option("--axis", axis, "alpha, iterations, epsilon or all")
        ->check(CLI::IsMember({"alpha", "iterations", "epsilon", "all"}))
        ->capture_default_str();
    app->add_option("--values", values, "comma-separated grid (default grid per axis)");
    app->add_option("--data", data, "dataset root holding train/ and test/")->required();
    app->add_option("--checkpoint", checkpoint, "finetuned checkpoint for the attack axes (skips training)");
    app->add_option("--seeds", seeds, "comma-separated training seeds")->capture_default_str();
    app->add_option("--out", out, "output directory for sweep_<axis>.csv")->required();
  }

  static std::vector<double> default_grid(const std::string& a) {
    if (a == "alpha") return {0.0, 1.0, 10.0};
    if (a == "iterations") return {1, 3, 5, 10, 20};
    return {0.005, 0.01, 0.02, 0.04};
  }

  int run(RunManifest& man, Sink io) const {
    const TrainConfig base = config.load();
    if (axis == "all" && !values.empty()) throw ConfigError("values", "cannot be combined with --axis all");
    std::vector<std::uint64_t> seed_list;
    for (double s : parse_list("seeds", seeds)) {
      if (s < 0 || s != std::floor(s)) throw ConfigError("seeds", "expected non-negative integers");
      seed_list.push_back(static_cast<std::uint64_t>(s));
    }
    const fs::path root(data);
    man.add_input(root);
    man.config = config_to_text(base);
    man.seed = base.seed;
    fs::create_directories(out);

    std::size_t classes = 0;
    const Dataset train_ds = read_dataset(root / "train"), test_ds = read_dataset(root / "test");
    classes = train_ds.classes();

    // linear-probed model per seed for the attack axes
    std::vector<ModelParams> probed;
    const auto probe = [&](TrainConfig cfg, std::uint64_t seed) {
      cfg.seed = seed;
      cfg.dims.classes = classes;
      const auto train = prepare_all(train_ds.samples, cfg.dims.points, seed);
      return linear_finetune(pretrain(train, cfg), train, cfg.finetune_epochs, cfg.finetune_lr, cfg.finetune_batch, seed);
    };
    const std::vector<std::string> axes =
        axis == "all" ? std::vector<std::string>{"alpha", "iterations", "epsilon"} : std::vector<std::string>{axis};
    for (const auto& a : axes) {
      const std::vector<double> grid = values.empty() ? default_grid(a) : parse_list("values", values);
      std::string csv;
      if (a == "alpha") {
        csv = "alpha,seeds,standard_accuracy,robust_accuracy,feature_kld\n";
        for (double alpha : grid) {
          if (alpha < 0) throw ConfigError("values", "alpha must be >= 0");
          double sa = 0, ra = 0, kl = 0;
          for (auto seed : seed_list) {
            TrainConfig cfg = base;
            cfg.alpha = alpha;
            const ModelParams p = probe(cfg, seed);
            const auto test = prepare_all(test_ds.samples, cfg.dims.points, seed + 1);
            const Metrics m = evaluate(p, test, cfg.eval_attack, seed);
            sa += m.standard_accuracy;
            ra += m.robust_accuracy;
            kl += mean_feature_divergence(p, test, cfg.attack, seed);
          }
          const double n = static_cast<double>(seed_list.size());
          csv += fmt(alpha) + ',' + std::to_string(seed_list.size()) + ',' + fmt(sa / n) + ',' + fmt(ra / n) + ',' +
                 fmt(kl / n) + '\n';
          io.out << "alpha " << fmt(alpha) << " RA " << fmt(ra / n) << '\n';
        }
      } else {
        if (probed.empty()) {
          if (!checkpoint.empty()) {
            probed.push_back(load_checkpoint(checkpoint));
            man.add_input(checkpoint);
          } else {
            for (auto seed : seed_list) probed.push_back(probe(base, seed));
          }
        }
        csv = a + ",seeds,standard_accuracy,robust_accuracy\n";
        for (double v : grid) {
          AttackConfig ac = base.eval_attack;
          if (a == "iterations") {
            if (v < 0 || v != std::floor(v)) throw ConfigError("values", "iterations must be non-negative integers");
            ac.steps = static_cast<std::size_t>(v);
          } else {
            if (!(v >= 0)) throw ConfigError("values", "epsilon must be >= 0");
            ac.epsilon = v;
          }
          double sa = 0, ra = 0;
          for (std::size_t k = 0; k < probed.size(); ++k) {
            const std::uint64_t seed = checkpoint.empty() ? seed_list[k] : base.seed;
            const auto test = prepare_all(test_ds.samples, probed[k].dims.points, seed + 1);
            const Metrics m = evaluate(probed[k], test, ac, seed);
            sa += m.standard_accuracy;
            ra += m.robust_accuracy;
          }
          const double n = static_cast<double>(probed.size());
          csv += (a == "iterations" ? std::to_string(ac.steps) : fmt(v)) + ',' + std::to_string(probed.size()) + ',' +
                 fmt(sa / n) + ',' + fmt(ra / n) + '\n';
          io.out << a << ' ' << fmt(v) << " RA " << fmt(ra / n) << '\n';
        }
      }
      const fs::path path = fs::path(out) / ("sweep_" + a + ".csv");
      write_text(path, csv);
      man.add_output(path);
    }
    return kExitOk;
  }
};

struct Report {
  std::string runs, out;

  void attach(CLI::App* app) {
    app->add_option("--runs", runs, "directory searched recursively for manifest.json")->required();
    app->add_option("--out", out, "summary CSV (run,command,metric,value)")->required();
  }

  int run(RunManifest& man, Sink io) const {
    if (!fs::is_directory(runs)) throw ConfigError("runs", "not a directory: " + runs);
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(runs))
      if (e.is_regular_file() && e.path().filename() == "manifest.json") found.push_back(e.path());
    std::sort(found.begin(), found.end());
    std::string csv = "run,command,metric,value\n";
    for (const auto& f : found) {
      const RunManifest m = RunManifest::load(f);
      const std::string run = fs::relative(f.parent_path(), runs).string();
      for (const auto& [k, v] : m.results) csv += run + ',' + m.command + ',' + k + ',' + fmt(v) + '\n';
    }
    write_text(out, csv);
    man.add_output(out);
    io.out << "summarized " << found.size() << " run(s)\n";
    return kExitOk;
  }
};

// Directory that receives manifest.json for a run.
inline fs::path manifest_dir(const std::string& command, const GenData& g, const Don& d, const Pretrain& p,
                             const Finetune& f, const AttackEval& a, const Sweep& s, const Report& r) {
  const auto parent_of = [](const std::string& file) {
    const fs::path pp = fs::path(file).parent_path();
    return pp.empty() ? fs::path(".") : pp;
  };
  if (command == "gen-data") return g.out;
  if (command == "don") return parent_of(d.out);
  if (command == "pretrain") return p.resolved_out;
  if (command == "finetune") return f.out;
  if (command == "attack-eval") return parent_of(a.report);
  if (command == "sweep") return s.out;
  return parent_of(r.out);
}

}  // namespace detail

/// Parses argv (argv[0] is the program name) and runs one subcommand.
/// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
inline int route(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  using namespace detail;
  CLI::App app{"Adversarial contrastive pretraining for point clouds", args.empty() ? "pointacl" : args.front()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  GenData gen;
  Don don;
  Pretrain pre;
  Finetune fin;
  AttackEval att;
  Sweep swp;
  Report rep;
  gen.attach(app.add_subcommand("gen-data", "generate a synthetic labeled dataset"));
  don.attach(app.add_subcommand("don", "difference-of-normals high-difference selection"));
  pre.attach(app.add_subcommand("pretrain", "adversarial contrastive pretraining"));
  fin.attach(app.add_subcommand("finetune", "linear probe or adversarial full finetune"));
  att.attach(app.add_subcommand("attack-eval", "standard and robust accuracy under an l-infinity attack"));
  swp.attach(app.add_subcommand("sweep", "alpha, attack-iteration and epsilon grids"));
  rep.attach(app.add_subcommand("report", "collect run results into one CSV"));

  std::vector<std::string> rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(rest.begin(), rest.end());  // CLI11 consumes from the back
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp& e) {
    std::string help = app.help();
    for (const auto* sub : app.get_subcommands()) help = sub->help();
    out << help;
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    // help of the subcommand that failed, else the top level
    std::string help = app.help();
    for (const auto* sub : app.get_subcommands()) help = sub->help();
    err << "error: " << e.what() << "\n\n" << help;
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  RunManifest man;
  man.command = command;
  man.argv = args;
  man.started = utc_timestamp();
  const Sink io{out, err};
  try {
    int code = kExitOk;
    if (command == "gen-data") code = gen.run(man, io);
    else if (command == "don") code = don.run(man, io);
    else if (command == "pretrain") code = pre.run(man, io);
    else if (command == "finetune") code = fin.run(man, io);
    else if (command == "attack-eval") code = att.run(man, io);
    else if (command == "sweep") code = swp.run(man, io);
    else code = rep.run(man, io);
    man.finished = utc_timestamp();
    const fs::path dir = manifest_dir(command, gen, don, pre, fin, att, swp, rep);
    fs::create_directories(dir);
    man.save(dir / "manifest.json");
    return code;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

inline int route(int argc, char** argv) {
  return route(std::vector<std::string>(argv, argv + argc));
}

}  // namespace pointacl::cli

#endif  // POINTACL_CLI_HPP
