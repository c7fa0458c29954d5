#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "quasipot/config.hpp"
#include "quasipot/experiment.hpp"

using namespace quasipot;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(QUASIPOT_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) : path(fs::temp_directory_path() / ("quasipot_test_" + tag)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config parsing: comments, whitespace, errors") {
  const ConfigMap m = parse_config("# header\n sim.eps = 0.25 \n\nstart= 1,2 # inline\n");
  CHECK(m.at("sim.eps") == "0.25");
  CHECK(m.at("start") == "1,2");
  CHECK(m.size() == 2);
  CHECK_THROWS_AS(parse_config("no equals sign here\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("= value\n"), ConfigError);
}

TEST_CASE("config round-trip is idempotent") {
  const std::string text = "a.b = 1\nc = two words\nz.z = -3.5\n";
  const ConfigMap once = parse_config(text);
  const std::string ser = serialize_config(once);
  CHECK(parse_config(ser) == once);
  CHECK(serialize_config(parse_config(ser)) == ser);
}

TEST_CASE("overrides and unknown keys") {
  ConfigMap m;
  apply_override(m, "sim.eps=0.7");
  CHECK(m.at("sim.eps") == "0.7");
  CHECK_THROWS_AS(apply_override(m, "noequals"), ConfigError);

  ConfigMap bad;
  bad["command"] = "simulate";
  bad["not.a.key"] = "1";
  CHECK_THROWS_AS(config_from_map(bad), ConfigError);
  ConfigMap badval;
  badval["sim.eps"] = "soup";
  try {
    config_from_map(badval);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sim.eps") != std::string::npos);
  }
}

TEST_CASE("landscape and diffusion id resolution") {
  CHECK(resolve_landscape("quadratic_bowl").dim == 2);
  CHECK(resolve_landscape("two_well").dim == 2);
  CHECK(resolve_landscape("quadratic(1,2,3)").dim == 3);
  CHECK_THROWS_AS(resolve_landscape("mystery"), ConfigError);

  CHECK(resolve_diffusion("diag(1.5)", 2).D({0.0, 0.0})(0, 0) == 1.5);
  CHECK(resolve_diffusion("identity", 3).dim == 3);
  CHECK(resolve_diffusion("two_well_diffusion(1.5,1.5)", 2).dim == 2);
  CHECK_THROWS_AS(resolve_diffusion("diag(1.5)", 3), ConfigError);
  CHECK_THROWS_AS(resolve_diffusion("mystery", 2), ConfigError);
  CHECK_THROWS_AS(resolve_diffusion("diag(5)", 2), ParameterError);
}

TEST_CASE("presets carry the published parameter values") {
  const ConfigMap f1 = preset_config("fig1-anisotropic");
  CHECK(f1.at("command") == "exit-time");
  CHECK(f1.at("diffusion") == "diag(1.9999)");
  CHECK(f1.at("sim.eps") == "0.1");
  CHECK(f1.at("sim.h") == "0.01");
  CHECK(f1.at("sim.max_steps") == "140000");

  const ConfigMap f1i = preset_config("fig1-isotropic");
  CHECK(f1i.at("diffusion") == "diag(1)");

  const ConfigMap f2 = preset_config("fig2-from-O1");
  CHECK(f2.at("command") == "two-well");
  CHECK(f2.at("twowell.mu1") == "1.9999");
  CHECK(f2.at("twowell.mu2") == "1.0001");
  CHECK(f2.at("sim.eps") == "0.2");
  CHECK(f2.at("sim.max_steps") == "22000");
  CHECK(f2.at("start") == "-2,0");
  CHECK(preset_config("fig2-from-O2").at("start") == "2,0");

  CHECK_THROWS_AS(preset_config("fig9"), ConfigError);
}

TEST_CASE("run_experiment simulate writes trajectory and summary") {
  TempDir dir("simulate");
  ConfigMap m;
  m["command"] = "simulate";
  m["landscape"] = "quadratic_bowl";
  m["diffusion"] = "diag(1)";
  m["sim.max_steps"] = "500";
  m["out.dir"] = dir.path.string();
  const RunResult r = run_experiment(config_from_map(m));
  CHECK(r.status == kOk);
  REQUIRE(fs::exists(dir.path / "trajectory.csv"));
  REQUIRE(fs::exists(dir.path / "summary.txt"));
  const std::string csv = slurp(dir.path / "trajectory.csv");
  CHECK(csv.rfind("step,t,x1,x2", 0) == 0);
  CHECK_FALSE(r.summary_line.empty());
}

TEST_CASE("run_experiment determinism: identical config gives byte-identical CSVs") {
  TempDir a("det_a"), b("det_b");
  ConfigMap m;
  m["command"] = "simulate";
  m["sim.max_steps"] = "2000";
  m["sim.eps"] = "0.3";
  m["sim.seed"] = "12345";
  m["out.dir"] = a.path.string();
  run_experiment(config_from_map(m));
  m["out.dir"] = b.path.string();
  run_experiment(config_from_map(m));
  CHECK(slurp(a.path / "trajectory.csv") == slurp(b.path / "trajectory.csv"));
  CHECK(slurp(a.path / "summary.txt") == slurp(b.path / "summary.txt"));
}

TEST_CASE("run_experiment exit-time emits per-trial CSV and JSON summary") {
  TempDir dir("exit");
  ConfigMap m;
  m["command"] = "exit-time";
  m["sim.eps"] = "0.6";
  m["sim.max_steps"] = "100000";
  m["run.trials"] = "20";
  m["run.threads"] = "2";
  m["out.dir"] = dir.path.string();
  const RunResult r = run_experiment(config_from_map(m));
  CHECK(r.status == kOk);
  const std::string csv = slurp(dir.path / "trials.csv");
  CHECK(csv.rfind("trial,seed,exited,exit_step,exit_time,exit_x1,exit_x2", 0) == 0);
  const std::string json = slurp(dir.path / "summary.json");
  CHECK(json.find("\"mean_exit_time\"") != std::string::npos);
  CHECK(json.find("\"censor_fraction\"") != std::string::npos);
}

TEST_CASE("run_experiment mam and hj-check and diffusion-estimate") {
  TempDir dir("mam");
  ConfigMap m;
  m["command"] = "mam";
  m["diffusion"] = "diag(1.5)";
  m["start"] = "0,0";
  m["mam.end"] = "1,0";
  m["mam.n_points"] = "40";
  m["out.dir"] = dir.path.string();
  const RunResult r = run_experiment(config_from_map(m));
  CHECK(r.status == kOk);
  CHECK(slurp(dir.path / "path.csv").rfind("x1,x2", 0) == 0);
  CHECK(r.summary_line.find("true") != std::string::npos);

  ConfigMap hj;
  hj["command"] = "hj-check";
  hj["diffusion"] = "diag(1.5)";
  hj["hj.candidate"] = "example31";
  hj["hj.mu"] = "1.5";
  hj["out.dir"] = dir.path.string();
  const RunResult rh = run_experiment(config_from_map(hj));
  CHECK(rh.status == kOk);
  CHECK(slurp(dir.path / "summary.txt").find("max_abs_residual") != std::string::npos);

  ConfigMap de;
  de["command"] = "diffusion-estimate";
  de["estimate.n"] = "5";
  de["estimate.m"] = "2";
  de["estimate.point"] = "0.5,-0.5";
  de["out.dir"] = dir.path.string();
  const RunResult rd = run_experiment(config_from_map(de));
  CHECK(rd.status == kOk);
  CHECK(fs::exists(dir.path / "diffusion.csv"));
}

TEST_CASE("run_experiment two-well emits labels and phi grid") {
  TempDir dir("twowell");
  ConfigMap m = preset_config("fig2-from-O1");
  m["sim.max_steps"] = "5000";
  m["out.dir"] = dir.path.string();
  const RunResult r = run_experiment(config_from_map(m));
  CHECK(r.status == kOk);
  CHECK(slurp(dir.path / "labels.csv").rfind("label,start_step,end_step", 0) == 0);
  CHECK(slurp(dir.path / "phi_grid.csv").rfind("x1_center,x2_center,count,phi", 0) == 0);
  CHECK(slurp(dir.path / "summary.txt").find("occupation.b1") != std::string::npos);
}

TEST_CASE("cli binary: exit statuses and file emission") {
  TempDir dir("bin");
  // success
  CHECK(run_cli("simulate sim.max_steps=100 out.dir=" + (dir.path / "ok").string()) == 0);
  CHECK(fs::exists(dir.path / "ok" / "trajectory.csv"));
  // config errors
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("simulate landscape=mystery") == 2);
  CHECK(run_cli("simulate sim.eps=banana") == 2);
  CHECK(run_cli("simulate not-a-kv-pair") == 2);
  CHECK(run_cli("") == 2);
  // compute error (divergent run)
  CHECK(run_cli("simulate 'landscape=quadratic(-1)' diffusion=identity start=1 sim.h=0.5 sim.eps=0 "
                "out.dir=" + (dir.path / "div").string()) == 3);
  // preset path
  CHECK(run_cli("preset fig2-from-O1 sim.max_steps=200 out.dir=" + (dir.path / "p").string()) == 0);
  CHECK(fs::exists(dir.path / "p" / "summary.txt"));
  CHECK(run_cli("preset nope") == 2);
}

TEST_CASE("cli binary: --config file and --threads") {
  TempDir dir("cfg");
  const fs::path cfg = dir.path / "run.cfg";
  std::ofstream(cfg) << "sim.max_steps = 300\nsim.eps = 0.4\nrun.trials = 12\n"
                     << "out.dir = " << (dir.path / "o").string() << "\n";
  CHECK(run_cli("exit-time --config " + cfg.string() + " --threads 3") == 0);
  CHECK(fs::exists(dir.path / "o" / "trials.csv"));
  CHECK(run_cli("exit-time --config " + (dir.path / "missing.cfg").string()) == 4);
}
