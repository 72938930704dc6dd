#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "spikecpc/encodings.hpp"
#include "spikecpc/errors.hpp"
#include "spikecpc/experiment.hpp"
#include "spikecpc/sha256.hpp"
#include "spikecpc/svg.hpp"

using namespace spikecpc;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<MnistImage> blob_images(int per_class, std::uint64_t seed) {
  std::vector<MnistImage> images;
  Rng rng(seed);
  for (int c = 0; c < 10; ++c) {
    for (int i = 0; i < per_class; ++i) {
      MnistImage img{};
      img.label = c;
      img.index = int(images.size());
      const int cx = 4 + 2 * c, cy = 6 + int(rng.uniform_int(14));
      for (int y = 0; y < 28; ++y) {
        for (int x = 0; x < 28; ++x) {
          const double d2 = double((x - cx) * (x - cx) + (y - cy) * (y - cy));
          img.pixels[y * 28 + x] = float(std::exp(-d2 / 10.0));
        }
      }
      images.push_back(img);
    }
  }
  return images;
}

}  // namespace

TEST_CASE("config parses typed values and rejects unknown keys") {
  RunConfig rc = RunConfig::from_string(
      "# comment\n"
      "dataset = 5000\n"
      "encoding = classifier\n"
      "seeds = 4,5\n"
      "cpc.hidden = 64\n"
      "pairs.wrap = false\n"
      "ae.learning_rate = 5e-4\n");
  const auto cfg = exp::config_from(rc);
  rc.ensure_all_consumed();
  CHECK(cfg.per_class == 500);
  CHECK(cfg.encoding == exp::EncodingMethod::Classifier);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(cfg.cpc_hidden == 64);
  CHECK(cfg.wrap == false);
  CHECK(cfg.ae_learning_rate == doctest::Approx(5e-4));
  CHECK(cfg.dataset_name() == "MNIST-5000");
  CHECK(cfg.row_tag() == "mnist5000_classifier");
}

TEST_CASE("unknown config keys are fatal") {
  RunConfig rc = RunConfig::from_string("dataset = 2500\ncpc.hiden = 64\n");
  exp::config_from(rc);
  CHECK_THROWS_AS(rc.ensure_all_consumed(), ConfigError);
}

TEST_CASE("malformed values are reported with the key") {
  RunConfig rc = RunConfig::from_string("cpc.hidden = banana\n");
  CHECK_THROWS_WITH_AS(exp::config_from(rc), doctest::Contains("cpc.hidden"), ConfigError);
}

TEST_CASE("bad dataset and encoding are rejected") {
  RunConfig r1 = RunConfig::from_string("dataset = 300\n");
  CHECK_THROWS_AS(exp::config_from(r1), ConfigError);
  RunConfig r2 = RunConfig::from_string("encoding = fourier\n");
  CHECK_THROWS_AS(exp::config_from(r2), ConfigError);
}

TEST_CASE("random encodings are fixed per image and distinct across images") {
  const auto images = blob_images(3, 1);
  const auto subset = build_subset(images, 3, 9);
  const auto a = random_encoding<float>(subset, 16, 42);
  const auto b = random_encoding<float>(subset, 16, 42);
  REQUIRE(a.size() == subset.images.size());
  CHECK(a.dim == 16);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.vectors[i] == b.vectors[i]);
  CHECK(a.vectors[0] != a.vectors[1]);
  // keyed by the underlying image, not the subset position
  const auto c = random_encoding<float>(build_subset(images, 3, 10), 16, 42);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (a.image_indices[i] == c.image_indices[j]) CHECK(a.vectors[i] == c.vectors[j]);
    }
  }
}

TEST_CASE("encoding dump is byte-stable with a version header") {
  const auto images = blob_images(2, 2);
  const auto subset = build_subset(images, 2, 3);
  const auto enc = random_encoding<float>(subset, 4, 7);
  const auto dir = fs::temp_directory_path() / "spikecpc_enc";
  fs::create_directories(dir);
  dump_encodings(enc, (dir / "e1.tsv").string());
  dump_encodings(enc, (dir / "e2.tsv").string());
  CHECK(slurp(dir / "e1.tsv") == slurp(dir / "e2.tsv"));
  CHECK(slurp(dir / "e1.tsv").rfind("spikecpc_encodings v1", 0) == 0);
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  const unsigned char abc[] = {'a', 'b', 'c'};
  CHECK(sha256_hex({abc, 3}) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("checkpoint container round trip") {
  std::vector<CheckpointEntry> entries(2);
  entries[0] = {"alpha", {2, 3}, {1, 2, 3, 4, 5, 6}};
  entries[1] = {"beta", {4}, {0.5, -0.25, 1e-9, 3e7}};
  const std::string path = "/tmp/spikecpc_ckpt_test.bin";
  write_checkpoint(path, entries);
  const auto loaded = read_checkpoint(path);
  REQUIRE(loaded.size() == 2);
  CHECK(checkpoint_entry(loaded, "alpha").data == entries[0].data);
  CHECK(checkpoint_entry(loaded, "beta").shape == std::vector<int>{4});
  CHECK(checkpoint_entry(loaded, "beta").data == entries[1].data);
  CHECK_THROWS_AS(checkpoint_entry(loaded, "gamma"), IoError);
}

TEST_CASE("svg writer draws mean line and truncated band") {
  std::vector<std::vector<double>> runs = {
      {0.5, 0.6, 0.7, 0.8, 0.82}, {0.5, 0.62, 0.71, 0.79}, {0.52, 0.6, 0.69}};
  const std::string path = "/tmp/spikecpc_curve_test.svg";
  write_accuracy_svg(path, "test curves", runs);
  const std::string svg = slurp(path);
  CHECK(svg.find("<polyline") != std::string::npos);
  CHECK(svg.find("<polygon") != std::string::npos);
  // band truncated at the shortest run: 3 upper + 3 lower points
  const auto poly_start = svg.find("<polygon");
  const auto points_start = svg.find("points=", poly_start);
  const auto points_end = svg.find("\"/>", points_start);
  const std::string points = svg.substr(points_start, points_end - points_start);
  int commas = 0;
  for (char ch : points) commas += ch == ',';
  CHECK(commas == 6);
}

TEST_CASE("format_table1 flags bands and ordering") {
  std::vector<exp::Table1Row> rows = {{1, 250, exp::EncodingMethod::Autoencoder},
                                      {3, 250, exp::EncodingMethod::Classifier},
                                      {5, 250, exp::EncodingMethod::Random}};
  std::vector<exp::RunSummary> summaries(3);
  summaries[0].dataset = "MNIST-2500";
  summaries[0].encoding = "autoencoder";
  summaries[0].accuracy_mean = 0.95;
  summaries[1].dataset = "MNIST-2500";
  summaries[1].encoding = "classifier";
  summaries[1].accuracy_mean = 0.80;
  summaries[2].dataset = "MNIST-2500";
  summaries[2].encoding = "random";
  summaries[2].accuracy_mean = 0.55;

  bool ordering = false, bands = false;
  const std::string text = exp::format_table1(rows, summaries, &ordering, &bands);
  CHECK(ordering);
  CHECK(bands);
  CHECK(text.find("pass (>=0.90)") != std::string::npos);
  CHECK(text.find("pass (>=0.70)") != std::string::npos);
  CHECK(text.find("pass (0.45..0.65)") != std::string::npos);

  summaries[1].accuracy_mean = 0.92;  // breaks the gap to the autoencoder row
  const std::string text2 = exp::format_table1(rows, summaries, &ordering, &bands);
  CHECK(!ordering);
  CHECK(text2.find("FAIL") != std::string::npos);
}

TEST_CASE("micro experiment end to end with byte-identical rerun") {
  const auto dir = fs::temp_directory_path() / "spikecpc_micro_exp";
  fs::remove_all(dir);
  fs::create_directories(dir / "data");
  const auto images = blob_images(24, 5);
  write_idx(images, (dir / "data/train-images-idx3-ubyte").string(),
            (dir / "data/train-labels-idx1-ubyte").string());

  exp::ExperimentConfig cfg;
  cfg.per_class = 20;
  cfg.encoding = exp::EncodingMethod::Random;
  cfg.seeds = {1, 2};
  cfg.data_dir = (dir / "data").string();
  cfg.out_dir = (dir / "out").string();
  cfg.random_dim = 24;
  cfg.cpc_hidden = 12;
  cfg.quiet = true;
  cfg.schedule.max_epochs = 3;
  cfg.schedule.pos_per_batch = 8;
  cfg.schedule.neg_per_batch = 8;
  cfg.schedule.train_batches_per_epoch = 3;
  cfg.schedule.val_batches = 2;
  cfg.config_echo = {{"dataset", "200"}};

  const auto summary = exp::run_experiment(cfg);
  CHECK(summary.runs.size() == 2);
  const fs::path row_dir = dir / "out" / cfg.row_tag();
  CHECK(fs::exists(row_dir / "seed1/metrics.csv"));
  CHECK(fs::exists(row_dir / "seed1/cpc.ckpt"));
  CHECK(fs::exists(row_dir / "summary.json"));
  CHECK(fs::exists(row_dir / "curves.svg"));

  // aggregate equals a recomputation from the per-seed metrics files
  double acc[2];
  for (int k = 0; k < 2; ++k) {
    const auto metrics =
        cpc::read_metrics_csv((row_dir / ("seed" + std::to_string(k + 1)) / "metrics.csv").string());
    double best = 0;
    for (const auto& m : metrics) best = std::max(best, m.val_acc);
    acc[k] = best;
    CHECK(best == doctest::Approx(summary.runs[k].max_val_accuracy).epsilon(1e-9));
  }
  CHECK(summary.accuracy_mean == doctest::Approx((acc[0] + acc[1]) / 2).epsilon(1e-9));
  const double refstd = std::sqrt(((acc[0] - summary.accuracy_mean) * (acc[0] - summary.accuracy_mean) +
                                   (acc[1] - summary.accuracy_mean) * (acc[1] - summary.accuracy_mean)));
  CHECK(summary.accuracy_std == doctest::Approx(refstd).epsilon(1e-9));

  // summary json carries the config echo and aggregates
  nlohmann::json j;
  std::ifstream jin(row_dir / "summary.json");
  jin >> j;
  CHECK(j["config"]["dataset"] == "200");
  CHECK(j["aggregate"]["accuracy_mean"].get<double>() ==
        doctest::Approx(summary.accuracy_mean).epsilon(1e-12));

  // rerun into a fresh directory: metrics files must match byte for byte
  const std::string first = slurp(row_dir / "seed1/metrics.csv");
  exp::ExperimentConfig cfg2 = cfg;
  cfg2.out_dir = (dir / "out2").string();
  cfg2.seeds = {1};
  exp::run_experiment(cfg2);
  const std::string second = slurp(dir / "out2" / cfg.row_tag() / "seed1/metrics.csv");
  CHECK(first == second);
}

TEST_CASE("missing encoder checkpoint names the artifact") {
  const auto dir = fs::temp_directory_path() / "spikecpc_missing_enc";
  fs::remove_all(dir);
  const auto images = blob_images(8, 6);
  const auto subset = build_subset(images, 8, 1);
  exp::ExperimentConfig cfg;
  cfg.encoding = exp::EncodingMethod::Classifier;
  cfg.out_dir = dir.string();
  cfg.train_encoders = false;
  CHECK_THROWS_WITH_AS(exp::build_encodings(cfg, subset, 1), doctest::Contains("stdp_2500_seed1"),
                       IoError);
}
