#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int run_tool(const std::string& args, const std::string& output_dir) {
  ::setenv("MFSMP_OUTPUT_DIR", output_dir.c_str(), 1);
  const std::string cmd = std::string(MFSMP_BIN) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  ::unsetenv("MFSMP_OUTPUT_DIR");
  return WEXITSTATUS(rc);
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("mfsmp_cli_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_json(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << j.dump(2) << '\n';
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json small_config() {
  json c;
  c["model"]["name"] = "nonconvex";
  c["grid"] = {{"T", 1.0}, {"steps", 10}};
  c["particles"] = 200;
  c["seed"] = 4;
  c["policy"] = {{"features", {"const", "t"}}, {"theta", {{0.2, 0.1}}}};
  return c;
}

}  // namespace

TEST_CASE("simulate writes its artifact set") {
  const auto dir = fresh_dir("simulate");
  const auto cfg = write_json(dir, "config.json", small_config());
  CHECK(run_tool("simulate " + cfg, dir.string()) == 0);
  for (const char* f :
       {"forward.csv", "backward.csv", "adjoint.csv", "picard.csv", "manifest.json"})
    CHECK(fs::exists(dir / f));
}

TEST_CASE("invalid configurations exit with the usage code") {
  const auto dir = fresh_dir("badcfg");
  json bad = small_config();
  bad["particles"] = 1;
  CHECK(run_tool("simulate " + write_json(dir, "p.json", bad), dir.string()) == 2);

  bad = small_config();
  bad["volatility"] = 3.0;  // unknown key
  CHECK(run_tool("simulate " + write_json(dir, "k.json", bad), dir.string()) == 2);

  bad = small_config();
  bad["model"]["name"] = "no_such_model";
  CHECK(run_tool("simulate " + write_json(dir, "m.json", bad), dir.string()) == 2);

  CHECK(run_tool("simulate " + (dir / "missing.json").string(), dir.string()) == 2);
  CHECK(run_tool("simulate", dir.string()) == 2);
}

TEST_CASE("verify subcommand reports success on a builtin model") {
  const auto dir = fresh_dir("verify");
  json c = small_config();
  c["particles"] = 400;
  const auto cfg = write_json(dir, "config.json", c);
  CHECK(run_tool("verify " + cfg, dir.string()) == 0);
  CHECK(fs::exists(dir / "invariants.csv"));
}

TEST_CASE("gradient-check and optimize produce their reports") {
  const auto dir = fresh_dir("grad");
  json c = small_config();
  c["model"]["name"] = "lq";
  c["particles"] = 400;
  const auto cfg = write_json(dir, "config.json", c);
  CHECK(run_tool("gradient-check " + cfg, dir.string()) == 0);
  CHECK(fs::exists(dir / "gradient_check.csv"));

  const auto dir2 = fresh_dir("opt");
  c["optimizer"] = {{"max_iters", 2}};
  const auto cfg2 = write_json(dir2, "config.json", c);
  CHECK(run_tool("optimize " + cfg2, dir2.string()) == 0);
  CHECK(fs::exists(dir2 / "trace.csv"));
  CHECK(fs::exists(dir2 / "policy.json"));
}

TEST_CASE("manifest rerun reproduces artifacts bitwise across worker counts") {
  const auto a = fresh_dir("repro_a");
  const auto cfg = write_json(a, "config.json", small_config());
  REQUIRE(run_tool("simulate " + cfg, a.string()) == 0);

  // Rerun from the manifest alone, with a different worker count.
  json manifest = json::parse(slurp(a / "manifest.json"));
  manifest["config"]["workers"] = 4;
  const auto b = fresh_dir("repro_b");
  const auto cfg2 = write_json(b, "manifest_edit.json", manifest);
  REQUIRE(run_tool("simulate " + cfg2, b.string()) == 0);

  for (const char* f : {"forward.csv", "backward.csv", "adjoint.csv", "picard.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
}
