#include "drpipe/pipeline/end_to_end.hpp"

#include "drpipe/pipeline/report.hpp"

namespace drpipe::pipeline {

EndToEndRun end_to_end_once(const scenegen::SequenceBundle& bundle, const SessionConfig& cfg,
                            std::shared_ptr<const compose::AssetStore> assets) {
  Session session(cfg, std::move(assets));
  RunReportBuilder report;
  EndToEndRun run;
  run.results.reserve(bundle.size());
  for (const auto& frame : bundle.frames) {
    run.results.push_back(session.process_frame(frame));
    report.add(run.results.back());
  }
  run.report = report.to_json();
  return run;
}

}  // namespace drpipe::pipeline
