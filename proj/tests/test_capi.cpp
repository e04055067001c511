#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "patchlesion.h"

namespace fs = std::filesystem;

namespace {

struct Cfg {
  pla_config* ptr;
  Cfg() : ptr(pla_config_create()) { REQUIRE(ptr != nullptr); }
  ~Cfg() { pla_config_destroy(ptr); }
};

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "pla_test_capi" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Small geometry so library-level runs finish in milliseconds.
void set_tiny(pla_config* c, const fs::path& out) {
  CHECK(pla_config_set(c, "synth_train_per_class", "4") == PLA_OK);
  CHECK(pla_config_set(c, "synth_val_per_class", "2") == PLA_OK);
  CHECK(pla_config_set(c, "synth_test_per_class", "2") == PLA_OK);
  CHECK(pla_config_set(c, "synth_image_size", "48") == PLA_OK);
  CHECK(pla_config_set(c, "input_size", "16") == PLA_OK);
  CHECK(pla_config_set(c, "backbone_channels", "6,8") == PLA_OK);
  CHECK(pla_config_set(c, "epochs", "1") == PLA_OK);
  CHECK(pla_config_set(c, "batch_size", "7") == PLA_OK);
  CHECK(pla_config_set(c, "out_dir", out.string().c_str()) == PLA_OK);
}

}  // namespace

TEST_CASE("config set/get round-trips through the C boundary") {
  Cfg c;
  CHECK(pla_config_set(c.ptr, "epochs", "12") == PLA_OK);
  char buf[32];
  CHECK(pla_config_get(c.ptr, "epochs", buf, sizeof(buf)) == PLA_OK);
  CHECK(std::string(buf) == "12");

  // Truncation is NUL-terminated.
  CHECK(pla_config_get(c.ptr, "class_names", buf, 4) == PLA_OK);
  CHECK(std::strlen(buf) == 3);
}

TEST_CASE("unknown keys produce a config error with a message") {
  Cfg c;
  CHECK(pla_config_set(c.ptr, "no_such_key", "1") == PLA_ERR_CONFIG);
  CHECK(std::string(pla_last_error()).find("no_such_key") !=
        std::string::npos);
  CHECK(pla_config_get(c.ptr, "no_such_key", nullptr, 0) == PLA_ERR_CONFIG);
}

TEST_CASE("null arguments are rejected instead of crashing") {
  Cfg c;
  CHECK(pla_config_set(nullptr, "epochs", "1") == PLA_ERR_CONFIG);
  CHECK(pla_config_set(c.ptr, nullptr, "1") == PLA_ERR_CONFIG);
  CHECK(pla_config_load_file(c.ptr, nullptr) == PLA_ERR_CONFIG);
  CHECK(pla_train(nullptr) == PLA_ERR_CONFIG);
  CHECK(pla_eval(c.ptr, nullptr) == PLA_ERR_CONFIG);
  CHECK(pla_gradcheck(nullptr, nullptr, 0, nullptr) == PLA_ERR_CONFIG);
}

TEST_CASE("config files load through the C API") {
  auto dir = fresh_dir("load_file");
  auto path = dir / "exp.conf";
  {
    std::ofstream f(path);
    f << "epochs = 9\nk = 0.5\n";
  }
  Cfg c;
  CHECK(pla_config_load_file(c.ptr, path.string().c_str()) == PLA_OK);
  char buf[16];
  CHECK(pla_config_get(c.ptr, "epochs", buf, sizeof(buf)) == PLA_OK);
  CHECK(std::string(buf) == "9");
  CHECK(pla_config_load_file(c.ptr, "/nonexistent.conf") == PLA_ERR_IO);
}

TEST_CASE("invalid configurations fail at the train entry point") {
  Cfg c;
  CHECK(pla_config_set(c.ptr, "strategy", "downsample") == PLA_OK);
  CHECK(pla_config_set(c.ptr, "p_d", "0.5") == PLA_OK);
  CHECK(pla_train(c.ptr) == PLA_ERR_CONFIG);
  CHECK(std::string(pla_last_error()).find("p_d") != std::string::npos);
}

TEST_CASE("train then eval via the C API") {
  auto dir = fresh_dir("train_eval");
  Cfg c;
  set_tiny(c.ptr, dir);
  REQUIRE(pla_train(c.ptr) == PLA_OK);
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "model.ckpt"));
  CHECK(fs::exists(dir / "config.txt"));

  // Re-running without overwrite refuses to clobber the results.
  CHECK(pla_train(c.ptr) == PLA_ERR_CONFIG);

  CHECK(pla_config_set(c.ptr, "overwrite", "true") == PLA_OK);
  REQUIRE(pla_eval(c.ptr, (dir / "model.ckpt").string().c_str()) == PLA_OK);
  CHECK(fs::exists(dir / "metrics_eval.csv"));
  CHECK(fs::exists(dir / "attention.csv"));

  // A checkpoint from another architecture is rejected.
  CHECK(pla_config_set(c.ptr, "backbone_channels", "4,4") == PLA_OK);
  CHECK(pla_eval(c.ptr, (dir / "model.ckpt").string().c_str()) ==
        PLA_ERR_CONFIG);
}

TEST_CASE("gradcheck reports per-component results") {
  Cfg c;
  char report[4096] = {0};
  int failures = -1;
  REQUIRE(pla_gradcheck(c.ptr, report, sizeof(report), &failures) == PLA_OK);
  CHECK(failures == 0);
  std::string text(report);
  CHECK(text.find("conv_backbone") != std::string::npos);
  CHECK(text.find("attention_end") != std::string::npos);
  CHECK(text.find("gru_aggregator") != std::string::npos);
  CHECK(text.find("weighted_cross_entropy") != std::string::npos);
  CHECK(text.find("FAIL") == std::string::npos);
}

TEST_CASE("synthetic generation via the C API") {
  auto dir = fresh_dir("gen");
  Cfg c;
  CHECK(pla_config_set(c.ptr, "synth_train_per_class", "2") == PLA_OK);
  CHECK(pla_config_set(c.ptr, "synth_image_size", "48") == PLA_OK);
  CHECK(pla_config_set(c.ptr, "input_size", "16") == PLA_OK);
  CHECK(pla_config_set(c.ptr, "out_dir", dir.string().c_str()) == PLA_OK);
  char report[1024] = {0};
  REQUIRE(pla_gen_synth(c.ptr, report, sizeof(report)) == PLA_OK);
  CHECK(fs::exists(dir / "manifest.csv"));
  CHECK(fs::exists(dir / "images" / "000000.png"));
  CHECK(std::string(report).find("MEL") != std::string::npos);
}

TEST_CASE("version string is stable") {
  CHECK(pla_version() != nullptr);
  CHECK(std::strlen(pla_version()) > 0);
}
