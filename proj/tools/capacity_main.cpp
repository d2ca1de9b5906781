// capacity: red-ball / green-star frame processing probe.

#include <iostream>

#include "CLI11.hpp"
#include "vqalign/capacity.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/pipeline.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;

int main(int argc, char** argv) {
  CLI::App app{"Frame processing capacity probe"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Probe one provider");
  std::string provider, transport = "grading-fixture", fixture, lexicon, out_dir = ".";
  int frames = 0, iterations = 5;
  double fps = 0.0;
  bool write_frames = false;
  run->add_option("--provider", provider)->required();
  run->add_option("--frames", frames, "Frames per case (default: 5 s at the provider's rate)");
  run->add_option("--fps", fps, "Override the provider's frame rate");
  run->add_option("--iterations", iterations, "Star positions to try");
  run->add_option("--transport", transport)->check(CLI::IsMember({"live", "replay", "grading-fixture"}));
  run->add_option("--fixture", fixture, "Grading fixture or replay fixture");
  run->add_option("--lexicon", lexicon, "JSON lexicon overriding the grading word lists");
  run->add_option("--out", out_dir, "Directory for capacity_report.json");
  run->add_flag("--write-frames", write_frames, "Also write each case's PNG frames");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    auto config = harness::default_provider_config(parse_provider(provider));
    if (fps > 0.0) config.frame_rate_fps = Rational::from_double(fps);
    capacity::CapacityOptions opts;
    opts.num_frames = frames;
    opts.iterations = iterations;
    if (!lexicon.empty()) opts.lexicon = capacity::lexicon_from_json(Json::parse(util::read_file(lexicon)));

    std::unique_ptr<harness::Transport> held;
    capacity::Responder responder;
    if (transport == "grading-fixture") {
      if (fixture.empty()) throw ConfigError("--fixture is required for the grading-fixture transport");
      responder = capacity::GradingFixture::load(fixture).responder();
    } else {
      if (transport == "replay") {
        if (fixture.empty()) throw ConfigError("--fixture is required for the replay transport");
        held = std::make_unique<harness::ReplayTransport>(fixture);
      } else {
        held = std::make_unique<harness::LiveTransport>();
      }
      responder = capacity::responder_from(*held);
    }

    const auto report = capacity::run_capacity(config, responder, opts);
    const std::filesystem::path dir(out_dir);
    util::write_if_changed(dir / "capacity_report.json", report.to_json().dump(2) + "\n");
    if (write_frames) {
      for (const auto& it : report.iterations) {
        auto [c, imgs] = capacity::generate_case(report.num_frames, it.star_frame_index);
        capacity::write_case(dir / ("star_" + std::to_string(it.star_frame_index)), c, imgs);
      }
    }
    std::cout << provider << " @ " << util::format_double(config.frame_rate_fps.value()) << " fps, "
              << report.num_frames << " frames: " << (report.passed() ? "passed" : "failed") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::exit_code_for(e);
  }
}
