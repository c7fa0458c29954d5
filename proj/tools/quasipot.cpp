#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "quasipot/config.hpp"
#include "quasipot/dynamics.hpp"
#include "quasipot/experiment.hpp"
#include "quasipot/io.hpp"
#include "quasipot/landscape.hpp"

namespace {

const char* kUsage =
    "usage: quasipot <command> [--config FILE] [--threads N] [key=value ...]\n"
    "       quasipot preset <name> [key=value ...]\n"
    "\n"
    "commands: simulate | exit-time | mam | hj-check | two-well |\n"
    "          diffusion-estimate | preset\n"
    "presets:  fig1-anisotropic | fig1-isotropic | fig2-from-O1 | fig2-from-O2\n";

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw quasipot::IoError("cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace quasipot;
  if (argc < 2) {
    std::fputs(kUsage, stderr);
    return kConfigError;
  }

  try {
    ConfigMap m;
    std::string command = argv[1];
    int first_extra = 2;
    if (command == "preset") {
      if (argc < 3) throw ConfigError("preset: missing preset name");
      m = preset_config(argv[2]);
      command = m.at("command");
      first_extra = 3;
    }
    m["command"] = command;

    for (int i = first_extra; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg == "--config") {
        if (i + 1 >= argc) throw ConfigError("--config: missing file argument");
        ConfigMap from_file = parse_config(read_file(argv[++i]));
        from_file.erase("command");  // the positional command wins
        for (auto& [k, v] : from_file) m[k] = v;
      } else if (arg == "--threads") {
        if (i + 1 >= argc) throw ConfigError("--threads: missing count");
        m["run.threads"] = argv[++i];
      } else if (arg == "--help" || arg == "-h") {
        std::fputs(kUsage, stdout);
        return kOk;
      } else {
        apply_override(m, arg);
      }
    }
    m["command"] = command;  // command-line position is authoritative

    const ExperimentConfig cfg = config_from_map(m);
    const RunResult res = run_experiment(cfg);
    std::cout << res.summary_line << "\n";
    for (const std::string& f : res.files) std::cout << "wrote " << f << "\n";
    return res.status;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ParameterError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kComputeError;
  }
}
