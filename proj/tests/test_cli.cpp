#include <cstdlib>
#include <fstream>

#include <doctest.h>
#include <json.hpp>

#include "him/taxonomy.hpp"
#include "test_util.hpp"

using him::test::TempDir;
using him::test::slurp;
using nlohmann::json;

namespace {

const char* cli() { return HIM_CLI_PATH; }

/// Runs the CLI, captures stdout into out_file, returns the exit code.
int run_cli(const std::string& args, const std::string& out_file = "/dev/null") {
  std::string cmd = std::string(cli()) + " " + args + " > " + out_file + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string q(const std::string& s) { return "'" + s + "'"; }

struct Workspace {
  TempDir dir{"cli"};
  std::string entities, edges;
  Workspace() {
    entities = dir.file("entities.tsv");
    edges = dir.file("edges.tsv");
    REQUIRE(run_cli("synth --out-dir " + q(dir.path.string()) +
                    " --branching 3 --min-branching 2 --depth 3 --seed 5") == 0);
  }
  std::string train_args(const std::string& manifold, const std::string& extra = "",
                         const std::string& epochs = "--epochs 1") {
    return "train --entities " + q(entities) + " --edges " + q(edges) + " --manifold " + manifold +
           " " + epochs + " --batch-size 8 --config " + q(config_path()) + " " + extra;
  }
  std::string config_path() {
    std::string p = dir.file("cfg.json");
    std::ofstream os(p);
    os << R"({"encoder": {"max_len": 16, "dim": 8, "inner": 16, "state": 2, "blocks": 1,
              "dropout": 0.1}, "warmup_steps": 2, "lr_target": 0.002, "triplets_per_pair": 0.5})";
    return p;
  }
};

}  // namespace

TEST_CASE("cli: help exits 0 for every subcommand") {
  CHECK(run_cli("--help") == 0);
  for (const char* sub : {"synth", "train", "eval", "hyperbolicity", "embed", "pretrain"})
    CHECK(run_cli(std::string(sub) + " --help") == 0);
}

TEST_CASE("cli: usage errors exit 2") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("train") == 2);                      // missing required options
  CHECK(run_cli("synth --depth 1") == 2);            // invalid depth
  CHECK(run_cli("frobnicate") == 2);                 // unknown subcommand
}

TEST_CASE("cli: synth is deterministic and parseable") {
  TempDir d1("synth1"), d2("synth2");
  std::string args = " --branching 3 --depth 4 --seed 11";
  CHECK(run_cli("synth --out-dir " + q(d1.path.string()) + args) == 0);
  CHECK(run_cli("synth --out-dir " + q(d2.path.string()) + args) == 0);
  CHECK(slurp(d1.file("entities.tsv")) == slurp(d2.file("entities.tsv")));
  CHECK(slurp(d1.file("edges.tsv")) == slurp(d2.file("edges.tsv")));
  him::Taxonomy tax = him::load_taxonomy(d1.file("entities.tsv"), d1.file("edges.tsv"));
  CHECK(tax.num_nodes() > 4);
}

TEST_CASE("cli: hyperbolicity reports zero for trees") {
  Workspace ws;
  std::string out = ws.dir.file("delta.json");
  CHECK(run_cli("hyperbolicity --entities " + q(ws.entities) + " --edges " + q(ws.edges) +
                    " --quadruples 500 --seed 3",
                out) == 0);
  json j = json::parse(slurp(out));
  CHECK(j.at("mean_delta").get<double>() == 0.0);
  CHECK(j.at("mean_normalized_delta").get<double>() == 0.0);
  CHECK(j.at("quadruples").get<int64_t>() > 0);

  // seed-stable output bytes
  std::string out2 = ws.dir.file("delta2.json");
  CHECK(run_cli("hyperbolicity --entities " + q(ws.entities) + " --edges " + q(ws.edges) +
                    " --quadruples 500 --seed 3",
                out2) == 0);
  CHECK(slurp(out) == slurp(out2));
}

TEST_CASE("cli: missing files exit 1") {
  CHECK(run_cli("hyperbolicity --entities /nonexistent.tsv --edges /nonexistent2.tsv") == 1);
  CHECK(run_cli("eval --ckpt /no/such.him --entities /e --edges /g") == 1);
  CHECK(run_cli("pretrain --pairs /no/such.jsonl --out /tmp/x.him") == 1);
}

TEST_CASE("cli: train, eval, embed round trip") {
  Workspace ws;
  std::string ckpt = ws.dir.file("model.him");
  std::string metrics = ws.dir.file("metrics.jsonl");

  SUBCASE("train writes checkpoint and metrics; eval and embed consume them") {
    REQUIRE(run_cli(ws.train_args("poincare", "--out " + q(ckpt) + " --metrics " + q(metrics) +
                                  " --seed 9")) == 0);
    CHECK(std::ifstream(ckpt).good());
    {
      std::ifstream is(metrics);
      std::string line;
      int lines = 0;
      while (std::getline(is, line))
        if (!line.empty()) {
          json j = json::parse(line);
          for (const char* key : {"epoch", "train_loss", "val_f1", "c", "gamma", "wallclock_s"})
            CHECK(j.contains(key));
          ++lines;
        }
      CHECK(lines == 1);
    }

    std::string report = ws.dir.file("report.json");
    CHECK(run_cli("eval --ckpt " + q(ckpt) + " --entities " + q(ws.entities) + " --edges " +
                      q(ws.edges),
                  report) == 0);
    json j = json::parse(slurp(report));
    std::vector<std::string> keys;
    for (auto& [k, v] : j.items()) keys.push_back(k);
    std::sort(keys.begin(), keys.end());
    CHECK(keys == std::vector<std::string>{"f1", "n_neg", "n_pos", "per_hop", "precision",
                                           "recall", "task", "threshold"});

    // identical invocation, identical bytes
    std::string report2 = ws.dir.file("report2.json");
    CHECK(run_cli("eval --ckpt " + q(ckpt) + " --entities " + q(ws.entities) + " --edges " +
                      q(ws.edges),
                  report2) == 0);
    CHECK(slurp(report) == slurp(report2));

    // manifold mismatch is a config error
    CHECK(run_cli("eval --ckpt " + q(ckpt) + " --entities " + q(ws.entities) + " --edges " +
                  q(ws.edges) + " --manifold lorentz") == 1);

    std::string emb = ws.dir.file("emb.tsv");
    CHECK(run_cli("embed --ckpt " + q(ckpt) + " --entities " + q(ws.entities) + " --edges " +
                  q(ws.edges) + " --out " + q(emb)) == 0);
    him::Taxonomy tax = him::load_taxonomy(ws.entities, ws.edges);
    std::ifstream is(emb);
    std::string line;
    int rows = 0;
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    CHECK(rows == tax.num_nodes());
  }

  SUBCASE("corrupt checkpoint exits 1") {
    REQUIRE(run_cli(ws.train_args("poincare", "--out " + q(ckpt))) == 0);
    std::string blob = slurp(ckpt);
    blob[3] = 'z';
    std::ofstream os(ckpt, std::ios::binary);
    os.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    os.close();
    CHECK(run_cli("eval --ckpt " + q(ckpt) + " --entities " + q(ws.entities) + " --edges " +
                  q(ws.edges)) == 1);
  }

  SUBCASE("euclidean training logs a constant c") {
    REQUIRE(run_cli(ws.train_args("euclidean", "--metrics " + q(metrics), "--epochs 2")) == 0);
    std::ifstream is(metrics);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      json j = json::parse(line);
      CHECK(j.at("c").get<double>() == 1.0);
      CHECK(j.at("gamma").get<double>() == doctest::Approx(0.01));
    }
  }

  SUBCASE("resume continues the epoch count") {
    REQUIRE(run_cli(ws.train_args("poincare", "--out " + q(ckpt) + " --metrics " + q(metrics) +
                                  " --seed 4")) == 0);
    REQUIRE(run_cli(ws.train_args("poincare", "--resume " + q(ckpt) + " --metrics " + q(metrics) +
                                  " --seed 4", "--epochs 2")) == 0);
    auto lines = 0;
    std::ifstream is(metrics);
    std::string line;
    int last_epoch = 0;
    while (std::getline(is, line))
      if (!line.empty()) {
        last_epoch = json::parse(line).at("epoch").get<int>();
        ++lines;
      }
    CHECK(lines == 2);
    CHECK(last_epoch == 2);
  }
}

TEST_CASE("cli: pretrain produces a loadable init checkpoint") {
  Workspace ws;
  std::string corpus = ws.dir.file("pairs.jsonl");
  {
    std::ofstream os(corpus);
    const char* words[] = {"fern", "moss", "pine", "oak", "ivy", "reed"};
    for (int i = 0; i < 40; ++i) {
      json j = {{"text_a", words[i % 6]},
                {"text_b", std::string(words[i % 6]) + " " + words[(i + 2) % 6]}};
      os << j.dump() << "\n";
    }
  }
  std::string pre = ws.dir.file("pre.him");
  REQUIRE(run_cli("pretrain --pairs " + q(corpus) + " --out " + q(pre) +
                  " --epochs 2 --batch-pairs 8 --dim 8 --blocks 1 --state 2 --max-len 8") == 0);
  CHECK(std::ifstream(pre).good());
  CHECK(run_cli(ws.train_args("lorentz", "--init " + q(pre))) == 0);
}
