#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "drpipe/bench/quality.hpp"
#include "drpipe/core/error.hpp"
#include "drpipe/core/image_io.hpp"
#include "drpipe/pipeline/results_io.hpp"
#include "drpipe/scenegen/bundle_io.hpp"

namespace {

using json = nlohmann::json;
using namespace drpipe;

// Exit status of `compare` when a metric worsened beyond its tolerance.
constexpr int kExitRegression = 2;

json read_json(const std::string& path) {
  const auto bytes = core::read_file(path);
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    fail(ErrorCode::kManifestSchema, path + ": " + e.what());
  }
}

void write_json(const std::string& path, const json& j) {
  const auto text = j.dump(2) + "\n";
  core::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

int run_evaluate(const std::string& results_dir, const std::string& bundle_dir, const std::string& assets_dir,
                 const std::string& out) {
  const auto stored = pipeline::read_results(results_dir);
  const auto bundle = scenegen::read_bundle(bundle_dir);
  const auto hash = scenegen::bundle_hash(bundle);
  if (stored.bundle_hash && *stored.bundle_hash != hash) {
    fail(ErrorCode::kBundleMismatch, "results were produced on bundle " + stored.bundle_hash->substr(0, 12) +
                                         ", not " + hash.substr(0, 12));
  }
  bench::EvalOptions opts;
  opts.asset_id = stored.asset_id;
  opts.assets = std::make_shared<const compose::AssetStore>(
      assets_dir.empty() ? compose::AssetStore() : compose::AssetStore::with_directory(assets_dir));
  const auto report = bench::evaluate(stored.results, bundle, opts);
  write_json(out, report.to_json());

  std::printf("%zu frames, %zu dropped, bundle %s\n", report.frames, report.dropped, hash.substr(0, 12).c_str());
  for (const auto m : bench::kAllMetrics) {
    const auto& a = report.aggregate(m);
    if (a) {
      std::printf("  %-18s mean %10.4g  p50 %10.4g  p95 %10.4g\n", std::string(bench::metric_name(m)).c_str(), a->mean,
                  a->p50, a->p95);
    } else {
      std::printf("  %-18s undefined\n", std::string(bench::metric_name(m)).c_str());
    }
  }
  std::printf("  bypass %.3f  reuse %.3f  drop %.3f\n", report.bypass_rate, report.reuse_rate, report.drop_rate);
  return 0;
}

int run_compare(const std::string& a, const std::string& b, const std::string& out) {
  const auto cmp = bench::compare(read_json(a), read_json(b));
  if (!out.empty()) write_json(out, cmp.json);
  std::cout << cmp.table;
  if (cmp.regressions.empty()) {
    std::cout << "no regressions\n";
    return 0;
  }
  std::cout << "regressed:";
  for (const auto& r : cmp.regressions) std::cout << " " << r;
  std::cout << "\n";
  return kExitRegression;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scene-quality evaluation and report comparison"};
  app.require_subcommand(1);

  auto* eval = app.add_subcommand("evaluate", "score a results directory against its bundle's ground truth");
  std::string results_dir, bundle_dir, assets_dir, eval_out;
  eval->add_option("--results", results_dir, "results directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--bundle", bundle_dir, "bundle directory")->required()->check(CLI::ExistingDirectory);
  eval->add_option("--assets", assets_dir, "extra asset directory")->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_out, "report JSON path")->required();

  auto* cmp = app.add_subcommand("compare", "diff two quality reports; exits 2 on a regression");
  std::string report_a, report_b, cmp_out;
  cmp->add_option("a", report_a, "baseline report")->required()->check(CLI::ExistingFile);
  cmp->add_option("b", report_b, "candidate report")->required()->check(CLI::ExistingFile);
  cmp->add_option("--out", cmp_out, "comparison JSON path");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*eval) return run_evaluate(results_dir, bundle_dir, assets_dir, eval_out);
    return run_compare(report_a, report_b, cmp_out);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
}
