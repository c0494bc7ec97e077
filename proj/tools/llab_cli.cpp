#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "llab/common.hpp"
#include "llab/report.hpp"

namespace {

constexpr int kExitPass = 0, kExitChecks = 1, kExitConfig = 2;

std::string default_out() {
  const char* env = std::getenv(llab::kOutputDirEnv);
  return env && *env ? env : "llab-output";
}

int cmd_run(const std::string& config, const std::string& out, int jobs, std::optional<std::uint64_t> seed) {
  const auto configs = llab::load_config(config, seed);
  const auto res = llab::run_suite(configs, out, jobs);
  int failed = 0;
  for (const auto& r : res.reports) {
    const auto name = r.config.value("name", std::string("?"));
    std::size_t bad = 0;
    for (const auto& c : r.checks) bad += !c.pass;
    std::cout << (bad ? "FAIL " : "PASS ") << name << "  (" << r.checks.size() - bad << "/" << r.checks.size()
              << " checks)\n";
    for (const auto& c : r.checks)
      if (!c.pass)
        std::cout << "    " << c.name << ": " << c.measured << ' ' << c.relation << ' ' << c.bound
                  << (c.note.empty() ? "" : "  [" + c.note + "]") << '\n';
    failed += bad > 0;
  }
  std::cout << "reports written to " << out << '\n';
  return failed ? kExitChecks : kExitPass;
}

int cmd_list() {
  for (const auto& p : llab::list_presets()) {
    std::cout << p.type << '/' << p.name << "  " << p.doc << '\n';
    if (p.default_h > 0) std::cout << "    h = " << p.default_h << '\n';
    for (const auto& a : p.params)
      std::cout << "    " << a.key << " (" << a.kind << ") = " << a.default_value.dump() << "  " << a.doc << '\n';
    for (const auto& [k, v] : p.tolerances) std::cout << "    tolerances." << k << " = " << v << '\n';
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elliptic unique-continuation laboratory"};
  app.require_subcommand(1);

  std::string config, out = default_out(), dir;
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "run the scenarios of a config file");
  run->add_option("config", config, "scenario file")->required();
  run->add_option("--out", out, "output directory (default $LLAB_OUTPUT_DIR or llab-output)");
  run->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "override every scenario seed");
  auto* list = app.add_subcommand("list-presets", "list scenario types, presets and parameters");
  auto* report = app.add_subcommand("report", "re-render the plots of an output directory");
  report->add_option("dir", dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (*run) return cmd_run(config, out, jobs, seed);
    if (*list) return cmd_list();
    if (*report) {
      const int n = llab::rerender_reports(dir);
      std::cout << n << " plots written\n";
      return kExitPass;
    }
  } catch (const llab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const llab::ResourceError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitPass;
}
