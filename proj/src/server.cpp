#include "vqalign/server.hpp"

#include <algorithm>
#include <fstream>
#include <regex>

#include "httplib.h"
#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::server {

namespace {

HttpReply json_reply(int status, const Json& j) { return {status, "application/json", j.dump()}; }
HttpReply error_reply(int status, const std::string& msg) { return json_reply(status, {{"error", msg}}); }

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = util::to_lower(p.extension().string());
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".ogv") return "video/ogg";
  if (ext == ".mov") return "video/quicktime";
  if (ext == ".avi") return "video/x-msvideo";
  return "application/octet-stream";
}

Json question_json(const QuestionSpec& q, const std::string& text) {
  Json j{{"qid", q.qid},
         {"block", to_string(q.block)},
         {"text", text},
         {"answer_format", to_string(q.answer_format)}};
  if (q.answer_format != AnswerFormat::OpenText) j["options"] = options_for(q);
  return j;
}

}  // namespace

DeviceClass classify_device(std::string_view user_agent) {
  static const std::regex mobile(R"(Mobi|Android|iPhone|iPad|iPod|Windows Phone|Tablet)",
                                 std::regex::icase);
  return std::regex_search(user_agent.begin(), user_agent.end(), mobile) ? DeviceClass::Other
                                                                          : DeviceClass::Desktop;
}

std::optional<std::string> check_answer(const QuestionSpec& q, std::string_view answer) {
  const std::string a = util::trim(answer);
  if (a.empty()) return "answer is empty";
  if (q.answer_format == AnswerFormat::OpenText) return std::nullopt;
  const auto opts = options_for(q);
  if (std::find(opts.begin(), opts.end(), a) != opts.end()) return std::nullopt;
  std::string msg = "question " + std::to_string(q.qid) + " accepts only:";
  for (const auto& o : opts) msg += " " + o;
  return msg;
}

SurveyService::SurveyService(RunManifest manifest, std::map<std::string, std::string> tokens,
                             std::filesystem::path responses_file, std::filesystem::path sessions_file)
    : manifest_(std::move(manifest)),
      tokens_(std::move(tokens)),
      responses_file_(std::move(responses_file)),
      sessions_file_(std::move(sessions_file)) {
  for (const auto& [token, id] : tokens_) {
    const auto* s = manifest_.find_system(id);
    if (!s || s->kind != SystemKind::Human)
      throw ValidationError("token maps to '" + id + "', which is not a human system");
  }
  if (std::filesystem::exists(responses_file_))
    for (const auto& r : load_responses(responses_file_)) answers_[key_of(r)] = r.text;
  if (!sessions_file_.empty() && std::filesystem::exists(sessions_file_)) {
    const auto j = Json::parse(util::read_file(sessions_file_));
    for (const auto& [token, s] : j.items())
      sessions_[token] = {s.value("consent_given", false), s.value("language_confirmed", false)};
  }
}

std::map<std::string, std::string> SurveyService::load_tokens(
    const RunManifest& manifest, const std::optional<std::filesystem::path>& file) {
  std::map<std::string, std::string> out;
  if (file) {
    try {
      const auto j = Json::parse(util::read_file(*file));
      for (const auto& [token, id] : j.items()) out[token] = id.get<std::string>();
    } catch (const Json::exception& e) {
      throw ValidationError(file->string() + ": " + e.what());
    }
    return out;
  }
  for (const auto& s : manifest.systems)
    if (s.kind == SystemKind::Human) out[s.id] = s.id;
  return out;
}

std::optional<CellKey> SurveyService::next_cell(const std::string& system_id) const {
  for (const auto& cell : manifest_.cells())
    if (!answers_.count({system_id, cell.video_id, cell.qid, 0})) return cell;
  return std::nullopt;
}

Json SurveyService::session_json(const std::string& token, DeviceClass device) const {
  const auto& system_id = tokens_.at(token);
  const auto it = sessions_.find(token);
  const Session s = it == sessions_.end() ? Session{} : it->second;
  Json progress = Json::object();
  for (const auto& v : manifest_.videos) {
    Json answered = Json::array();
    for (const auto& q : manifest_.questions)
      if (answers_.count({system_id, v.id, q.qid, 0})) answered.push_back(q.qid);
    progress[v.id] = answered;
  }
  const auto next = next_cell(system_id);
  std::string state;
  if (device == DeviceClass::Other)
    state = "blocked_device";
  else if (!s.consent_given || !s.language_confirmed)
    state = "consent";
  else if (!next)
    state = "complete";
  else
    state = "question";
  Json j{{"token", token},
         {"consent_given", s.consent_given},
         {"language_confirmed", s.language_confirmed},
         {"device_class", device == DeviceClass::Desktop ? "desktop" : "other"},
         {"state", state},
         {"progress", progress},
         {"next", nullptr}};
  if (state == "question") j["next"] = {{"video_id", next->video_id}, {"qid", next->qid}};
  return j;
}

HttpReply SurveyService::get_session(const std::string& token, std::string_view user_agent) {
  std::lock_guard lock(mu_);
  if (!tokens_.count(token)) return error_reply(401, "invalid session token");
  return json_reply(200, session_json(token, classify_device(user_agent)));
}

HttpReply SurveyService::post_consent(const std::string& token, std::string_view body,
                                      std::string_view user_agent) {
  std::lock_guard lock(mu_);
  if (!tokens_.count(token)) return error_reply(401, "invalid session token");
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    return error_reply(400, "body must be JSON");
  }
  if (j.value("consent", false) != true) return error_reply(422, "consent is required to continue");
  if (j.value("language_confirmed", false) != true)
    return error_reply(422, "participants must confirm they read English fluently");
  sessions_[token] = {true, true};
  save_sessions();
  return json_reply(200, session_json(token, classify_device(user_agent)));
}

void SurveyService::save_sessions() const {
  if (sessions_file_.empty()) return;
  Json j = Json::object();
  for (const auto& [token, s] : sessions_)
    j[token] = {{"consent_given", s.consent_given}, {"language_confirmed", s.language_confirmed}};
  util::write_if_changed(sessions_file_, j.dump(2) + "\n");
}

HttpReply SurveyService::get_questions(const std::optional<std::string>& video_id) const {
  Json qs = Json::array();
  if (video_id) {
    if (!manifest_.find_video(*video_id)) return error_reply(404, "unknown clip '" + *video_id + "'");
    for (const auto& q : manifest_.questions)
      qs.push_back(question_json(q, manifest_.question_text(*video_id, q.qid)));
    return json_reply(200, {{"video_id", *video_id}, {"questions", qs}});
  }
  for (const auto& q : manifest_.questions) qs.push_back(question_json(q, q.text));
  Json per_clip = Json::object();
  for (const auto& vq : manifest_.variable_questions)
    per_clip[vq.video_id].push_back({{"qid", vq.qid}, {"text", vq.text}});
  Json videos = Json::array();
  for (const auto& v : manifest_.videos) videos.push_back(v.id);
  return json_reply(200, {{"questions", qs}, {"variable_questions", per_clip}, {"videos", videos}});
}

HttpReply SurveyService::get_clip(const std::string& video_id) const {
  const auto* v = manifest_.find_video(video_id);
  if (!v) return error_reply(404, "unknown clip '" + video_id + "'");
  const std::filesystem::path p = v->source_path_or_uri;
  if (!std::filesystem::is_regular_file(p)) return error_reply(404, "clip has no playable video file");
  const auto bytes = util::read_file(p);
  return {200, content_type_for(p), bytes};
}

HttpReply SurveyService::post_response(std::string_view body, std::string_view user_agent) {
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::exception&) {
    return error_reply(400, "body must be JSON");
  }
  for (const char* k : {"token", "video_id", "answer"})
    if (!j.contains(k) || !j.at(k).is_string()) return error_reply(400, std::string(k) + ": missing field");
  if (!j.contains("qid") || !j.at("qid").is_number_integer()) return error_reply(400, "qid: missing field");
  const auto token = j.at("token").get<std::string>();
  const auto video_id = j.at("video_id").get<std::string>();
  const int qid = j.at("qid").get<int>();
  const auto answer = util::trim(j.at("answer").get<std::string>());

  std::lock_guard lock(mu_);
  if (!tokens_.count(token)) return error_reply(401, "invalid session token");
  if (classify_device(user_agent) == DeviceClass::Other)
    return error_reply(403, "please use a computer or laptop");
  const auto it = sessions_.find(token);
  if (it == sessions_.end() || !it->second.consent_given || !it->second.language_confirmed)
    return error_reply(403, "consent has not been given");
  if (!manifest_.find_video(video_id)) return error_reply(422, "unknown clip '" + video_id + "'");
  const auto* q = manifest_.find_question(qid);
  if (!q) return error_reply(422, "unknown question " + std::to_string(qid));
  if (const auto problem = check_answer(*q, answer)) return error_reply(422, *problem);

  const auto& system_id = tokens_.at(token);
  const ResponseKey key{system_id, video_id, qid, 0};
  if (const auto prev = answers_.find(key); prev != answers_.end()) {
    if (prev->second == answer) return json_reply(200, {{"status", "duplicate"}});
    return error_reply(409, "question already answered");
  }
  const ResponseRecord r{system_id, video_id, qid, 0, answer, ResponseStatus::Raw, std::nullopt,
                         util::iso8601_now()};
  if (responses_file_.has_parent_path()) std::filesystem::create_directories(responses_file_.parent_path());
  {
    std::ofstream out(responses_file_, std::ios::app);
    out << to_json(r).dump() << '\n';
    if (!out) return error_reply(500, "could not store the answer");
  }
  answers_[key] = answer;
  return json_reply(201, {{"status", "stored"}});
}

void mount(httplib::Server& server, SurveyService& service, const std::filesystem::path& static_dir) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  server.Get(R"(/api/session/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_session(req.matches[1], req.get_header_value("User-Agent")));
  });
  server.Post(R"(/api/session/([^/]+)/consent)",
              [&service, send](const httplib::Request& req, httplib::Response& res) {
                send(res, service.post_consent(req.matches[1], req.body, req.get_header_value("User-Agent")));
              });
  server.Get(R"(/api/clips/([^/]+))", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.get_clip(req.matches[1]));
  });
  server.Get("/api/questions", [&service, send](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> video;
    if (req.has_param("video_id")) video = req.get_param_value("video_id");
    send(res, service.get_questions(video));
  });
  server.Post("/api/responses", [&service, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service.post_response(req.body, req.get_header_value("User-Agent")));
  });
  if (!static_dir.empty() && !server.set_mount_point("/", static_dir.string()))
    throw ConfigError("static directory not found: " + static_dir.string());
}

}  // namespace vqalign::server
