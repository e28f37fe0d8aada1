#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <string>

#include "opencam/metrics.hpp"
#include "opencam/scenes.hpp"
#include "opencam/tensor_io.hpp"
#include "test_util.hpp"

namespace {

const std::filesystem::path kDir = testutil::scratch("cli");

// Runs the CLI with stdout and stderr captured; returns the exit status.
int run(const std::string& args, std::string* err = nullptr) {
  const std::string cmd = std::string(OPENCAM_CLI_PATH) + " " + args + " >" + (kDir / "stdout.txt").string() +
                          " 2>" + (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream in(kDir / "stderr.txt");
    *err = {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string p(const std::string& name) { return (kDir / name).string(); }

}  // namespace

TEST_CASE("cli help and argument errors") {
  CHECK(run("--help") == 0);
  CHECK(run("keygen --help") == 0);
  CHECK(run("") == 2);
  CHECK(run("keygen --psf-side 16") == 2);  // no --out
  CHECK(run("frobnicate --out " + p("x")) == 2);
  CHECK(run("keygen --channels 2 --out " + p("bad_key")) == 2);
  std::string err;
  CHECK(run("attack --kind nope --key " + kDir.string() + " --out " + p("nope"), &err) != 0);
}

TEST_CASE("cli keygen, encrypt, decrypt round trip") {
  REQUIRE(run("--seed 5 keygen --psf-side 16 --scene-dims 32x32 --out " + p("key")) == 0);
  for (const char* f : {"psf.ocam", "scaling.ocam", "key.json", "psf.png", "scaling.png"}) {
    CHECK(std::filesystem::exists(kDir / "key" / f));
  }
  opencam::Rng rng(3);
  const opencam::Tensor scene = opencam::synthetic_scene(32, 32, 1, rng);
  opencam::write_tensor(scene, kDir / "scene.ocam");

  REQUIRE(run("--seed 1 encrypt --key " + p("key") + " --scene " + p("scene.ocam") + " --out " + p("y.ocam")) == 0);
  REQUIRE(run("--seed 1 encrypt --key " + p("key") + " --scene " + p("scene.ocam") + " --out " + p("y2.ocam")) == 0);
  CHECK(opencam::read_tensor(kDir / "y.ocam") == opencam::read_tensor(kDir / "y2.ocam"));

  REQUIRE(run("decrypt --key " + p("key") + " --measurement " + p("y.ocam") + " --truth " + p("scene.ocam") +
              " --out " + p("x.ocam")) == 0);
  const opencam::Tensor x = opencam::read_tensor(kDir / "x.ocam");
  CHECK(opencam::psnr(x, scene) > 25.0);
  const auto j = opencam::read_json(kDir / "x.ocam.json");
  CHECK(j.at("psnr").get<double>() == doctest::Approx(opencam::psnr(x, scene)));

  // Mismatched geometry: a 16x16 measurement cannot come from this key.
  opencam::write_tensor(opencam::Tensor(16, 16), kDir / "small.ocam");
  CHECK(run("decrypt --key " + p("key") + " --measurement " + p("small.ocam") + " --out " + p("bad.ocam")) == 4);
  // Corrupt tensor file.
  std::ofstream(kDir / "junk.ocam") << "not a tensor";
  CHECK(run("decrypt --key " + p("key") + " --measurement " + p("junk.ocam") + " --out " + p("bad.ocam")) == 2);

  REQUIRE(run("attack --kind ikpa --r 1000 --key " + p("key") + " --scene " + p("scene.ocam") + " --out " +
              p("atk")) == 0);
  CHECK(std::filesystem::exists(kDir / "atk" / "report.json"));
  CHECK(std::filesystem::exists(kDir / "atk" / "montage.png"));
  REQUIRE(run("attack --kind uikpa --iters 3 --key " + p("key") + " --out " + p("atk2")) == 0);
  CHECK(std::filesystem::exists(kDir / "atk2" / "trace.csv"));
  CHECK(run("inspect " + p("key")) == 0);
  CHECK(run("inspect " + p("y.ocam")) == 0);
}

TEST_CASE("cli study") {
  std::ofstream(kDir / "exp.json") << R"({"scene_dims": [16, 16], "psf_side": 16, "key_seeds": [1, 2],
    "scene_count": 2, "attacks": ["ikpa"], "r_grid": [1000], "save_tensors": false, "save_montages": false})";
  REQUIRE(run("study --experiment " + p("exp.json") + " --out " + p("study")) == 0);
  CHECK(std::filesystem::exists(kDir / "study" / "keyed.csv"));
  CHECK(std::filesystem::exists(kDir / "study" / "config.json"));
  std::ofstream(kDir / "bad.json") << R"({"scene_dims": [16, 16], "mystery": 1})";
  CHECK(run("study --experiment " + p("bad.json") + " --out " + p("study2")) == 2);
}
