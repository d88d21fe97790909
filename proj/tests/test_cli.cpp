#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pointacl/cli.hpp"

using namespace pointacl;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "pointacl");
  std::ostringstream out, err;
  const int code = cli::route(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("pointacl_cli_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string l; std::getline(in, l);) ++n;
  return n;
}

// Small model dimensions shared by the training commands.
std::vector<std::string> small_model() {
  return {"--set", "points=64",      "--set", "hidden1=16",   "--set", "hidden2=32",
          "--set", "features=32",    "--set", "proj_hidden=16", "--set", "proj=8",
          "--set", "batch_size=8",   "--set", "epochs=1",     "--set", "attack.steps=2",
          "--set", "finetune_epochs=5"};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

TEST(Cli, NoArgumentsIsUsageError) {
  const auto r = run({});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("gen-data"), std::string::npos);
  std::ostringstream o, e;
  EXPECT_EQ(cli::route(std::vector<std::string>{}, o, e), 2);
}

TEST(Cli, UnknownCommandAndFlag) {
  EXPECT_EQ(run({"train"}).code, 2);
  const auto r = run({"gen-data", "--out", "x", "--bogus", "1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--per-class"), std::string::npos);  // usage of the subcommand
}

TEST(Cli, HelpPerSubcommand) {
  const auto r = run({"attack-eval", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--epsilon"), std::string::npos);
  EXPECT_NE(r.out.find("--report"), std::string::npos);
}

TEST(Cli, ConfigErrorsNameTheKey) {
  const auto d = scratch("cfg");
  const auto r = run({"pretrain", "--data", d.string(), "--out", d.string(), "--set", "temperature=-1"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("temperature"), std::string::npos);
  const auto u = run({"pretrain", "--data", d.string(), "--out", d.string(), "--set", "tempreature=1"});
  EXPECT_EQ(u.code, 2);
  EXPECT_NE(u.err.find("tempreature"), std::string::npos);
  const auto g = run({"gen-data", "--classes", "sphere,blob", "--out", d.string()});
  EXPECT_EQ(g.code, 2);
  EXPECT_NE(g.err.find("classes"), std::string::npos);
}

TEST(Cli, RuntimeFailureExitsOne) {
  const auto d = scratch("fail");
  const auto r = run({"don", "--input", (d / "missing.xyz").string(), "--out", (d / "o.xyz").string()});
  EXPECT_EQ(r.code, 1);
}

TEST(Cli, GenDataAndDon) {
  const auto d = scratch("gen");
  const auto r = run({"gen-data", "--classes", "sphere,cube,crease", "--per-class", "5", "--points", "200", "--seed", "3",
                      "--out", (d / "data").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(d / "data" / "train" / "manifest.csv"));
  EXPECT_TRUE(fs::exists(d / "data" / "test" / "classes.txt"));
  const auto man = RunManifest::load(d / "data" / "manifest.json");
  EXPECT_EQ(man.command, "gen-data");
  EXPECT_EQ(man.seed, 3u);
  EXPECT_EQ(man.outputs.size(), 2u * 2u + 15u);  // two manifests, two class lists, fifteen clouds
  for (const auto& [path, hash] : man.outputs) EXPECT_EQ(file_hash(path), hash);

  const auto cloud = d / "data" / "train" / "two-plane-crease-0000.xyz";
  const auto dn = run({"don", "--input", cloud.string(), "--keep", "0.5", "--out", (d / "hd.xyz").string()});
  ASSERT_EQ(dn.code, 0) << dn.err;
  EXPECT_EQ(load_xyz(d / "hd.xyz").size(), 100u);
  EXPECT_EQ(line_count(d / "hd.xyz.mag"), 200u);
  EXPECT_EQ(run({"don", "--input", cloud.string(), "--r1", "0.3", "--r2", "0.2", "--out", (d / "x.xyz").string()}).code,
            2);
}

TEST(Cli, EndToEndProtocolAndReplay) {
  const auto d = scratch("e2e");
  const auto data = d / "data";
  ASSERT_EQ(run({"gen-data", "--classes", "sphere,cube,cone", "--per-class", "8", "--points", "64", "--out",
                 data.string()})
                .code,
            0);
  const auto pre = run(concat({"pretrain", "--data", (data / "train").string(), "--out", (d / "pre").string()},
                              small_model()));
  ASSERT_EQ(pre.code, 0) << pre.err;
  EXPECT_EQ(line_count(d / "pre" / "loss.csv"), 1u + 2u);  // 18 train samples, batch 8, one epoch

  const auto fin = run(concat({"finetune", "--checkpoint", (d / "pre" / "checkpoint.txt").string(), "--mode", "linear",
                               "--data", (data / "train").string(), "--out", (d / "lin").string()},
                              small_model()));
  ASSERT_EQ(fin.code, 0) << fin.err;
  const auto pre_p = load_checkpoint((d / "pre" / "checkpoint.txt").string());
  const auto lin_p = load_checkpoint((d / "lin" / "checkpoint.txt").string());
  EXPECT_TRUE(same_bits(pre_p, lin_p, ParamGroup::encoder));

  const auto ev = run({"attack-eval", "--checkpoint", (d / "lin" / "checkpoint.txt").string(), "--data",
                       (data / "test").string(), "--epsilon", "0.01", "--steps", "7", "--report",
                       (d / "eval" / "samples.csv").string(), "--metrics", (d / "eval" / "metrics.csv").string()});
  ASSERT_EQ(ev.code, 0) << ev.err;
  std::ifstream rep(d / "eval" / "samples.csv");
  std::string header;
  std::getline(rep, header);
  EXPECT_EQ(header, "sample_id,clean_pred,adv_pred,label,linf_used");
  EXPECT_EQ(line_count(d / "eval" / "samples.csv"), 1u + 6u);

  // replay the recorded argv of every run and compare output hashes
  for (const auto& sub : {fs::path("pre"), fs::path("lin"), fs::path("eval")}) {
    const auto man = RunManifest::load(d / sub / "manifest.json");
    std::ostringstream o, e;
    ASSERT_EQ(cli::route(man.argv, o, e), 0) << e.str();
    for (const auto& [path, hash] : man.outputs) EXPECT_EQ(file_hash(path), hash) << path;
  }

  const auto kld = run({"attack-eval", "--checkpoint", (d / "lin" / "checkpoint.txt").string(), "--data",
                        (data / "test").string(), "--mode", "kld", "--report", (d / "kld" / "s.csv").string()});
  EXPECT_EQ(kld.code, 0) << kld.err;

  const auto aff = run(concat({"finetune", "--checkpoint", (d / "pre" / "checkpoint.txt").string(), "--mode", "aff",
                               "--data", (data / "train").string(), "--out", (d / "aff").string(), "--set",
                               "aff_epochs=2"},
                              small_model()));
  ASSERT_EQ(aff.code, 0) << aff.err;
  EXPECT_EQ(line_count(d / "aff" / "finetune.csv"), 1u + 2u);

  const auto sw = run({"sweep", "--axis", "epsilon", "--values", "0.001,0.005,0.01,0.02", "--data", data.string(),
                       "--checkpoint", (d / "lin" / "checkpoint.txt").string(), "--out", (d / "sweep").string()});
  ASSERT_EQ(sw.code, 0) << sw.err;
  EXPECT_EQ(line_count(d / "sweep" / "sweep_epsilon.csv"), 1u + 4u);
  const auto it = run({"sweep", "--axis", "iterations", "--data", data.string(), "--checkpoint",
                       (d / "lin" / "checkpoint.txt").string(), "--out", (d / "sweep").string()});
  ASSERT_EQ(it.code, 0) << it.err;
  EXPECT_EQ(line_count(d / "sweep" / "sweep_iterations.csv"), 1u + 5u);

  const auto rp = run({"report", "--runs", d.string(), "--out", (d / "summary.csv").string()});
  ASSERT_EQ(rp.code, 0) << rp.err;
  std::ifstream sum(d / "summary.csv");
  const std::string text((std::istreambuf_iterator<char>(sum)), std::istreambuf_iterator<char>());
  EXPECT_NE(text.find("eval,attack-eval,robust_accuracy,"), std::string::npos);
}

TEST(Cli, PretrainReadsConfigFile) {
  const auto d = scratch("cfgfile");
  ASSERT_EQ(run({"gen-data", "--classes", "sphere,cube", "--per-class", "6", "--points", "64", "--out",
                 (d / "data").string()})
                .code,
            0);
  std::ofstream cfg(d / "run.cfg");
  cfg << "# tiny run\ndata = " << (d / "data" / "train").string() << "\nout = " << (d / "run").string()
      << "\npoints = 64\nfeatures = 16\nhidden1 = 8\nhidden2 = 8\nproj_hidden = 8\nproj = 4\nbatch_size = 4\n"
      << "epochs = 1\nattack.steps = 1\nalpha = 0.5\n";
  cfg.close();
  const auto r = run({"pretrain", "--config", (d / "run.cfg").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto text = read_file(d / "run" / "config.txt");
  EXPECT_NE(text.find("alpha = 0.5"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "run" / "manifest.json"));
}
