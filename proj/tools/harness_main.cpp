// harness: query VLM providers for every (clip, question) of a manifest.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "vqalign/errors.hpp"
#include "vqalign/harness.hpp"
#include "vqalign/pipeline.hpp"

using namespace vqalign;

int main(int argc, char** argv) {
  CLI::App app{"Collect VLM responses"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run every job for one provider");
  std::string manifest_path, provider, system, transport = "replay", fixture, out = "responses.jsonl";
  std::string errors_path, retries_path;
  std::size_t in_flight = 4;
  run->add_option("--manifest", manifest_path)->required();
  run->add_option("--provider", provider, "Provider name, e.g. pixtral")->required();
  run->add_option("--system", system, "System id (default: every system using the provider)");
  run->add_option("--transport", transport)->check(CLI::IsMember({"live", "replay", "record"}));
  run->add_option("--fixture", fixture, "Replay fixture to read, or record fixture to append to");
  run->add_option("--out", out);
  run->add_option("--errors", errors_path, "Error rows (default: <out>.errors.jsonl)");
  run->add_option("--retry-log", retries_path, "Retry log (default: <out>.retries.jsonl)");
  run->add_option("--max-in-flight", in_flight);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    const auto manifest = load_run_manifest(manifest_path);
    validate_manifest(manifest);
    const auto p = parse_provider(provider);
    if ((transport == "replay" || transport == "record") && fixture.empty())
      throw ConfigError("--fixture is required for the " + transport + " transport");

    std::vector<harness::QueryJob> jobs;
    for (const auto& s : manifest.systems) {
      if (!s.provider_config || s.provider_config->provider != p) continue;
      if (!system.empty() && s.id != system) continue;
      auto part = harness::plan_jobs(manifest, s.id);
      jobs.insert(jobs.end(), part.begin(), part.end());
    }
    if (jobs.empty()) throw ValidationError("no VLM system in the manifest uses provider " + provider);

    harness::LiveTransport live;
    std::unique_ptr<harness::Transport> wrapped;
    if (transport == "replay") wrapped = std::make_unique<harness::ReplayTransport>(fixture);
    if (transport == "record") wrapped = std::make_unique<harness::RecordTransport>(live, fixture);
    harness::Transport& t = wrapped ? *wrapped : live;

    harness::RunOptions opts;
    opts.max_in_flight = in_flight;
    const auto result = harness::run_jobs(jobs, t, opts);
    save_responses(result.records, out);
    auto dump = [](const std::string& path, const auto& rows) {
      std::ofstream f(path);
      for (const auto& r : rows) f << harness::to_json(r).dump() << "\n";
    };
    dump(errors_path.empty() ? out + ".errors.jsonl" : errors_path, result.errors);
    dump(retries_path.empty() ? out + ".retries.jsonl" : retries_path, result.retries);
    std::cout << result.records.size() << " response(s), " << result.errors.size() << " error row(s), "
              << result.retries.size() << " retr" << (result.retries.size() == 1 ? "y" : "ies") << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pipeline::exit_code_for(e);
  }
}
