// pbl_cli: periodic Prandtl layer solver.
//
//   pbl_cli solve      --config run.json [--output-dir DIR] [--workers N] [--verbose]
//   pbl_cli sweep      --config run.json ...
//   pbl_cli crosscheck --config run.json ...
//   pbl_cli identities --config run.json ...
//
// Exit status: 0 all checks passed, 1 a check failed, 2 solver error,
// 3 configuration or usage error.

#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "pbl/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Periodic Prandtl boundary layers in von Mises variables"};
  app.require_subcommand(1);

  std::string config_path;
  std::string output_dir;
  unsigned workers = pbl::default_workers();
  bool verbose = false;

  const std::pair<const char*, const char*> modes[] = {
      {"solve", "Picard solve for one epsilon"},
      {"sweep", "Picard solves over sweep.epsilons with scaling fits"},
      {"crosscheck", "Picard solve against the marching oracle"},
      {"identities", "geometry, kernel and manufactured-solution diagnostics"}};
  for (const auto& [name, help] : modes) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--output-dir", output_dir, "output directory (overrides output_dir in the config)");
    sub->add_option("--workers", workers, "concurrent sweep entries (default: PBL_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--verbose", verbose, "progress messages on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pbl::kExitConfigError;
  }

  const std::string mode = app.get_subcommands().front()->get_name();
  pbl::RunConfig cfg;
  try {
    cfg = pbl::load_config(config_path);
    const pbl::RunMode requested = pbl::parse_mode(mode);
    cfg.mode = requested;
    pbl::validate(cfg);
  } catch (const pbl::Error& e) {
    std::cerr << "pbl_cli: " << e.what() << '\n';
    const pbl::ojson record{{"error", pbl::error_record(e)}};
    std::cout << record.dump(2) << '\n';
    if (!output_dir.empty()) {
      try {
        std::filesystem::create_directories(output_dir);
        pbl::detail::write_text(std::filesystem::path(output_dir) / "error.json", record.dump(2) + "\n");
      } catch (const std::exception&) {
      }
    }
    return pbl::kExitConfigError;
  }

  pbl::RunOptions opt;
  if (!output_dir.empty()) opt.output_dir = output_dir;
  opt.workers = workers;
  opt.verbose = verbose;

  pbl::RunOutcome out;
  try {
    out = pbl::run(cfg, opt);
  } catch (const pbl::Error& e) {
    std::cerr << "pbl_cli: " << e.what() << '\n';
    std::cout << pbl::ojson{{"error", pbl::error_record(e)}}.dump(2) << '\n';
    return pbl::kExitRunError;
  } catch (const std::exception& e) {
    std::cerr << "pbl_cli: " << e.what() << '\n';
    return pbl::kExitRunError;
  }

  const auto dir = pbl::output_root(cfg, opt);
  if (out.summary.contains("error"))
    std::cerr << "pbl_cli: " << out.summary["error"]["message"].get<std::string>() << '\n';
  std::cout << "mode " << mode << ": " << (out.summary["passed"].get<bool>() ? "passed" : "FAILED")
            << ", summary in " << (dir / "summary.json").string() << '\n';
  return out.exit_code;
}
