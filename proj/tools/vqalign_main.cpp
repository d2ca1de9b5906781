// vqalign: staged analysis pipeline, survey server and question generation.

#include <iostream>

#include "CLI11.hpp"
#include "httplib.h"
#include "vqalign/errors.hpp"
#include "vqalign/harness.hpp"
#include "vqalign/pipeline.hpp"
#include "vqalign/questions.hpp"
#include "vqalign/server.hpp"
#include "vqalign/util.hpp"

using namespace vqalign;

namespace {

void print(const pipeline::StageResult& r) {
  std::cout << pipeline::to_string(r.stage) << ": ";
  if (r.skipped)
    std::cout << "up to date\n";
  else
    std::cout << r.written.size() << " file(s) written\n";
}

int run_serve(const std::string& manifest_path, const std::string& responses, const std::string& static_dir,
              const std::string& tokens, const std::string& sessions, const std::string& host, int port) {
  auto manifest = load_run_manifest(manifest_path);
  validate_manifest(manifest);
  auto token_map = server::SurveyService::load_tokens(
      manifest, tokens.empty() ? std::nullopt : std::optional<std::filesystem::path>(tokens));
  server::SurveyService service(std::move(manifest), std::move(token_map), responses, sessions);
  httplib::Server svr;
  server::mount(svr, service, static_dir);
  std::cout << "serving on http://" << host << ":" << port << "\n";
  if (!svr.listen(host, port)) throw ConfigError("could not listen on " + host + ":" + std::to_string(port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Human/VLM answer alignment analysis"};
  app.require_subcommand(1);

  std::string config_path = "run.toml";
  std::vector<CLI::App*> stage_cmds;
  for (auto s : pipeline::all_stages()) {
    auto* cmd = app.add_subcommand(std::string(pipeline::to_string(s)), "Run the " +
                                   std::string(pipeline::to_string(s)) + " stage");
    cmd->add_option("--config", config_path, "Run config (TOML)")->required();
    stage_cmds.push_back(cmd);
  }
  auto* all = app.add_subcommand("all", "Run every stage in order");
  all->add_option("--config", config_path, "Run config (TOML)")->required();

  std::string manifest, responses = "responses.jsonl", static_dir, tokens, sessions, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the survey API and UI bundle");
  serve->add_option("--manifest", manifest)->required();
  serve->add_option("--responses", responses, "Append human answers here");
  serve->add_option("--static", static_dir, "Built UI bundle to host at /");
  serve->add_option("--tokens", tokens, "JSON map of participant token to system id");
  serve->add_option("--sessions", sessions, "Persist consent state here");
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  auto* qs = app.add_subcommand("questions", "Question bank and Oracle question generation");
  qs->require_subcommand(1);
  auto* bank = qs->add_subcommand("bank", "Print questions 6-15 as JSON");
  std::string metadata_dir, out_path, input, transport = "replay", fixture, model = "gpt-4o";
  auto* prompt = qs->add_subcommand("prompt", "Print the Oracle prompts for the manifest's clips");
  prompt->add_option("--manifest", manifest)->required();
  prompt->add_option("--metadata", metadata_dir, "Directory of <video_id>.json meta-tag files")->required();
  auto* parse = qs->add_subcommand("parse", "Merge a saved Oracle reply into the manifest");
  parse->add_option("--manifest", manifest)->required();
  parse->add_option("--input", input, "Oracle reply text")->required();
  parse->add_option("--out", out_path, "Output manifest (default: overwrite)");
  auto* generate = qs->add_subcommand("generate", "Query the Oracle and merge its questions");
  generate->add_option("--manifest", manifest)->required();
  generate->add_option("--metadata", metadata_dir)->required();
  generate->add_option("--transport", transport)->check(CLI::IsMember({"live", "replay", "record"}));
  generate->add_option("--fixture", fixture, "Replay/record fixture");
  generate->add_option("--model", model);
  generate->add_option("--out", out_path);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    for (std::size_t i = 0; i < stage_cmds.size(); ++i) {
      if (stage_cmds[i]->parsed()) {
        print(pipeline::run_stage(pipeline::all_stages()[i], load_run_config(config_path)));
        return 0;
      }
    }
    if (all->parsed()) {
      for (const auto& r : pipeline::run_all(load_run_config(config_path))) print(r);
      return 0;
    }
    if (serve->parsed()) return run_serve(manifest, responses, static_dir, tokens, sessions, host, port);
    if (bank->parsed()) {
      Json j = Json::array();
      for (const auto& q : questions::question_bank()) j.push_back(to_json(q));
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    auto clip_ids = [](const RunManifest& m) {
      std::vector<std::string> ids;
      for (const auto& v : m.videos) ids.push_back(v.id);
      return ids;
    };
    if (prompt->parsed()) {
      const auto m = load_run_manifest(manifest);
      const auto p = questions::build_oracle_prompt(questions::load_metadata_dir(metadata_dir, clip_ids(m)));
      std::cout << "=== system instructions ===\n" << p.system_instructions
                << "\n\n=== starter message ===\n" << p.starter_message << "\n";
      return 0;
    }
    if (parse->parsed() || generate->parsed()) {
      auto m = load_run_manifest(manifest);
      std::vector<questions::OracleQA> qas;
      if (parse->parsed()) {
        qas = questions::parse_oracle_output(util::read_file(input));
      } else {
        const auto records = questions::load_metadata_dir(metadata_dir, clip_ids(m));
        harness::LiveTransport live;
        std::unique_ptr<harness::Transport> t;
        if (transport == "replay") {
          t = std::make_unique<harness::ReplayTransport>(fixture);
        } else if (transport == "record") {
          t = std::make_unique<harness::RecordTransport>(live, fixture);
        }
        qas = questions::run_oracle(records, t ? *t : static_cast<harness::Transport&>(live), model);
      }
      questions::merge_into_manifest(m, qas);
      validate_manifest(m);
      save_run_manifest(m, out_path.empty() ? manifest : out_path);
      std::cout << "merged " << qas.size() << " clip(s)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    const int code = pipeline::exit_code_for(e);
    if (const auto* d = dynamic_cast<const DependencyError*>(&e))
      std::cerr << "error [" << d->stage() << "]: " << e.what() << "\n";
    else
      std::cerr << "error: " << e.what() << "\n";
    return code;
  }
  return 0;
}
