#pragma once

// HTTP backend for the human survey: sessions, clip streaming, the question
// list and answer submission, plus static hosting of the UI bundle.
//
//   GET  /api/session/{token}
//   POST /api/session/{token}/consent   {"consent": true, "language_confirmed": true}
//   GET  /api/clips/{video_id}
//   GET  /api/questions[?video_id=...]
//   POST /api/responses                 {"token", "video_id", "qid", "answer"}

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "vqalign/model.hpp"

namespace httplib {
class Server;
}

namespace vqalign::server {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

enum class DeviceClass { Desktop, Other };
DeviceClass classify_device(std::string_view user_agent);

// nullopt when the answer is acceptable for the question's format.
std::optional<std::string> check_answer(const QuestionSpec& q, std::string_view answer);

struct Session {
  bool consent_given = false;
  bool language_confirmed = false;
};

class SurveyService {
 public:
  // tokens: opaque participant token -> human system id.
  SurveyService(RunManifest manifest, std::map<std::string, std::string> tokens,
                std::filesystem::path responses_file, std::filesystem::path sessions_file = {});

  HttpReply get_session(const std::string& token, std::string_view user_agent);
  HttpReply post_consent(const std::string& token, std::string_view body, std::string_view user_agent);
  HttpReply get_questions(const std::optional<std::string>& video_id) const;
  HttpReply get_clip(const std::string& video_id) const;
  HttpReply post_response(std::string_view body, std::string_view user_agent);

  // Each human system id is its own token unless a {"token": "system_id"} file is given.
  static std::map<std::string, std::string> load_tokens(const RunManifest& manifest,
                                                        const std::optional<std::filesystem::path>& file);

 private:
  Json session_json(const std::string& token, DeviceClass device) const;
  std::optional<CellKey> next_cell(const std::string& system_id) const;
  void save_sessions() const;

  RunManifest manifest_;
  std::map<std::string, std::string> tokens_;
  std::filesystem::path responses_file_;
  std::filesystem::path sessions_file_;
  std::map<std::string, Session> sessions_;
  std::map<ResponseKey, std::string> answers_;  // existing human answers
  mutable std::mutex mu_;
};

// Registers the API routes and, when static_dir is non-empty, mounts it at "/".
void mount(httplib::Server& server, SurveyService& service, const std::filesystem::path& static_dir);

}  // namespace vqalign::server
