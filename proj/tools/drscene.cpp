#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/scenegen/bundle_io.hpp"
#include "drpipe/scenegen/scene.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Writes a synthetic scene bundle with ground truth"};
  std::string config;
  std::string out;
  bool print_default = false;
  app.add_option("--config", config, "scene config JSON (default scene when omitted)")->check(CLI::ExistingFile);
  app.add_option("--out", out, "bundle directory");
  app.add_flag("--print-default", print_default, "print the default scene config and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (print_default) {
      std::cout << drpipe::scenegen::scene_config_to_json(drpipe::scenegen::default_scene_config()).dump(2) << "\n";
      return 0;
    }
    if (out.empty()) {
      std::cerr << "--out is required\n";
      return 1;
    }
    auto cfg = drpipe::scenegen::default_scene_config();
    if (!config.empty()) {
      const auto bytes = drpipe::core::read_file(config);
      cfg = drpipe::scenegen::scene_config_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
    }
    const auto bundle = drpipe::scenegen::generate_sequence(cfg);
    drpipe::scenegen::write_bundle(bundle, out);
    std::printf("%zu frames -> %s (%s)\n", bundle.size(), out.c_str(),
                drpipe::scenegen::bundle_hash(bundle).substr(0, 12).c_str());
  } catch (const drpipe::Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << config << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
