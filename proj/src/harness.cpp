#include "vqalign/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>
#include <thread>
#include <unistd.h>

#include "httplib.h"
#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::harness {

namespace {

constexpr std::string_view kGeminiSystemPrompt =
    "You are shown the frames of a short driving video. Answer the question about it.";
constexpr std::string_view kGeminiFrameMarker = "Video frames:";
constexpr std::string_view kLlamaSystemPrompt =
    "You are shown the frames of a short driving video, given below as base64-encoded JPEG "
    "images. Answer the question about it.";

bool is_remote(std::string_view uri) {
  return uri.starts_with("http://") || uri.starts_with("https://");
}

std::vector<std::filesystem::path> image_files(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const auto ext = util::to_lower(e.path().extension().string());
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".png") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const cv::Mat& img) {
  std::vector<std::uint8_t> buf;
  if (img.empty() || !cv::imencode(".jpg", img, buf, {cv::IMWRITE_JPEG_QUALITY, 90}))
    throw DecodeError("could not encode frame as JPEG");
  return buf;
}

std::filesystem::path temp_path(std::string_view ext) {
  static std::atomic<unsigned> counter{0};
  return std::filesystem::temp_directory_path() /
         ("vqalign-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) +
          std::string(ext));
}

bool is_image_provider(const ProviderConfig& c) {
  return c.input_modality == InputModality::ImagesText;
}

std::string data_uri_payload(std::string_view uri) {
  const auto comma = uri.find(',');
  return std::string(comma == std::string_view::npos ? uri : uri.substr(comma + 1));
}

}  // namespace

ProviderConfig default_provider_config(Provider p) {
  ProviderConfig c;
  c.provider = p;
  c.temperature = 1.0;
  c.top_p = 0.9;
  c.max_tokens = 512;
  switch (p) {
    case Provider::DeepSeek:
      c.model_name = "deepseek-chat";
      c.frame_rate_fps = {10, 1};
      c.repetitions = 10;
      break;
    case Provider::Pixtral:
      c.model_name = "pixtral-large-latest";
      c.frame_rate_fps = {1, 1};
      c.repetitions = 10;
      break;
    case Provider::Qwen2:
      c.model_name = "Qwen2-VL-7B";
      c.access = Access::Replicate;
      c.frame_rate_fps = {10, 1};
      c.input_modality = InputModality::VideoText;
      break;
    case Provider::CogVlm:
      c.model_name = "cogvlm2-video";
      c.access = Access::Replicate;
      c.frame_rate_fps = {10, 1};
      c.input_modality = InputModality::VideoText;
      c.max_tokens = 2000;
      break;
    case Provider::Gemini:
      c.model_name = "gemini-2.0-flash-exp";
      c.access = Access::Vertex;
      c.frame_rate_fps = {10, 1};
      c.max_tokens = 100;
      c.repetitions = 20;
      break;
    case Provider::Llama:
      c.model_name = "Llama-3.2-11B-Vision-Instruct";
      c.access = Access::Vertex;
      c.frame_rate_fps = {1, 2};
      c.max_tokens = 100;
      c.repetitions = 20;
      break;
    case Provider::GenericHttp:
      c.model_name = "generic";
      c.frame_rate_fps = {1, 1};
      break;
  }
  return c;
}

bool max_tokens_is_published(Provider p) {
  return p == Provider::CogVlm || p == Provider::Gemini || p == Provider::Llama;
}

std::optional<int> frame_cap(Provider p) {
  if (p == Provider::Pixtral) return 6;
  if (p == Provider::Llama) return 3;
  return std::nullopt;
}

// ---- frames ---------------------------------------------------------------

std::vector<int> frame_indices(const VideoClipRef& clip, Rational fps) {
  if (fps.num <= 0 || fps.den <= 0) throw ValidationError("fps must be positive");
  if (fps.num > static_cast<std::int64_t>(clip.native_fps) * fps.den)
    throw ValidationError("requested " + util::format_double(fps.value()) + " fps exceeds native " +
                          std::to_string(clip.native_fps) + " fps of clip " + clip.id);
  const auto count = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::floor(clip.duration_s * fps.value() + 1e-9)));
  std::vector<int> out;
  for (std::int64_t k = 0; k < count; ++k)
    out.push_back(static_cast<int>(k * clip.native_fps * fps.den / fps.num));
  return out;
}

std::vector<EncodedFrame> extract_frames(const VideoClipRef& clip, Rational fps) {
  const auto wanted = frame_indices(clip, fps);
  const std::filesystem::path src = clip.source_path_or_uri;
  std::vector<EncodedFrame> out;
  if (std::filesystem::is_directory(src)) {
    const auto files = image_files(src);
    for (int idx : wanted) {
      if (idx >= static_cast<int>(files.size()))
        throw DecodeError("clip " + clip.id + " has " + std::to_string(files.size()) +
                          " frames, frame " + std::to_string(idx) + " requested");
      const auto& f = files[static_cast<std::size_t>(idx)];
      const auto ext = util::to_lower(f.extension().string());
      auto bytes = util::read_binary(f);
      if (ext != ".jpg" && ext != ".jpeg") bytes = to_jpeg(bytes);
      out.push_back({idx, std::move(bytes)});
    }
    return out;
  }
  if (!std::filesystem::is_regular_file(src))
    throw DecodeError("clip " + clip.id + ": source not found: " + clip.source_path_or_uri);
  cv::VideoCapture cap(src.string());
  if (!cap.isOpened()) throw DecodeError("clip " + clip.id + ": cannot decode " + src.string());
  cv::Mat img;
  int pos = 0;
  for (int idx : wanted) {
    while (pos <= idx) {
      if (!cap.read(img))
        throw DecodeError("clip " + clip.id + ": video ended before frame " + std::to_string(idx));
      ++pos;
    }
    out.push_back({idx, encode_jpeg(img)});
  }
  return out;
}

std::vector<std::uint8_t> to_jpeg(std::span<const std::uint8_t> image) {
  const cv::Mat raw(1, static_cast<int>(image.size()), CV_8UC1,
                    const_cast<std::uint8_t*>(image.data()));
  const cv::Mat img = cv::imdecode(raw, cv::IMREAD_COLOR);
  if (img.empty()) throw DecodeError("could not decode image");
  return encode_jpeg(img);
}

std::vector<std::uint8_t> encode_video(const std::vector<std::vector<std::uint8_t>>& images,
                                       Rational fps) {
  if (images.empty()) throw PayloadError("cannot encode a video with no frames");
  std::vector<cv::Mat> frames;
  for (const auto& bytes : images) {
    const cv::Mat raw(1, static_cast<int>(bytes.size()), CV_8UC1,
                      const_cast<std::uint8_t*>(bytes.data()));
    frames.push_back(cv::imdecode(raw, cv::IMREAD_COLOR));
    if (frames.back().empty()) throw DecodeError("could not decode image");
    if (frames.back().size() != frames.front().size())
      throw PayloadError("video frames differ in size");
  }
  const auto path = temp_path(".avi");
  {
    cv::VideoWriter writer(path.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'),
                           fps.value(), frames.front().size());
    if (!writer.isOpened()) throw PayloadError("video writer unavailable");
    for (const auto& f : frames) writer.write(f);
  }
  auto bytes = util::read_binary(path);
  std::filesystem::remove(path);
  return bytes;
}

// ---- payloads -------------------------------------------------------------

std::string_view to_string(FrameEncoding e) {
  switch (e) {
    case FrameEncoding::JpegBase64: return "jpeg-base64";
    case FrameEncoding::BinaryVideo: return "binary-video";
    case FrameEncoding::RemoteUri: return "remote-uri";
  }
  return "?";
}

FramePayload payload_from_images(const std::vector<std::vector<std::uint8_t>>& images,
                                 const ProviderConfig& config) {
  FramePayload p;
  p.fps_used = config.frame_rate_fps;
  if (is_image_provider(config)) {
    p.encoding = FrameEncoding::JpegBase64;
    for (const auto& img : images)
      p.items.push_back(std::string(kJpegDataPrefix) + util::base64_encode(to_jpeg(img)));
  } else {
    p.encoding = FrameEncoding::BinaryVideo;
    p.items.push_back(std::string(kVideoDataPrefix) +
                      util::base64_encode(encode_video(images, config.frame_rate_fps)));
  }
  return p;
}

FramePayload build_payload(const VideoClipRef& clip, const ProviderConfig& config) {
  FramePayload p;
  p.fps_used = config.frame_rate_fps;
  if (is_image_provider(config)) {
    p.encoding = FrameEncoding::JpegBase64;
    for (const auto& f : extract_frames(clip, config.frame_rate_fps))
      p.items.push_back(std::string(kJpegDataPrefix) + util::base64_encode(f.bytes));
    return p;
  }
  if (is_remote(clip.source_path_or_uri)) {
    p.encoding = FrameEncoding::RemoteUri;
    p.items.push_back(clip.source_path_or_uri);
    return p;
  }
  p.encoding = FrameEncoding::BinaryVideo;
  const std::filesystem::path src = clip.source_path_or_uri;
  const bool native_rate =
      config.frame_rate_fps == Rational{clip.native_fps, 1} && std::filesystem::is_regular_file(src);
  std::vector<std::uint8_t> video;
  if (native_rate) {
    video = util::read_binary(src);
  } else {
    std::vector<std::vector<std::uint8_t>> images;
    for (auto& f : extract_frames(clip, config.frame_rate_fps)) images.push_back(std::move(f.bytes));
    video = encode_video(images, config.frame_rate_fps);
  }
  p.items.push_back(std::string(kVideoDataPrefix) + util::base64_encode(video));
  return p;
}

Json adapt_payload(const ProviderConfig& config, const FramePayload& payload,
                   const std::string& prompt) {
  const Provider p = config.provider;
  const std::string name(to_string(p));
  if (payload.items.empty()) throw PayloadError(name + ": payload has no frames");
  if (const auto cap = frame_cap(p); cap && static_cast<int>(payload.items.size()) > *cap)
    throw PayloadError(name + " accepts at most " + std::to_string(*cap) + " frames, got " +
                       std::to_string(payload.items.size()));
  const bool wants_images = is_image_provider(config);
  if (wants_images != (payload.encoding == FrameEncoding::JpegBase64))
    throw PayloadError(name + " cannot take a " + std::string(to_string(payload.encoding)) +
                       " payload");
  if (wants_images)
    for (const auto& item : payload.items)
      if (!item.starts_with(kJpegDataPrefix))
        throw PayloadError(name + ": frame is not a base64 JPEG data URI");

  switch (p) {
    case Provider::CogVlm:
      return {{"prompt", prompt},
              {"input_video", payload.items.front()},
              {"top_p", config.top_p},
              {"temperature", config.temperature},
              {"max_new_tokens", config.max_tokens}};
    case Provider::Qwen2:
      return {{"media", payload.items.front()},
              {"prompt", prompt},
              {"top_p", config.top_p},
              {"temperature", config.temperature},
              {"max_new_tokens", config.max_tokens}};
    case Provider::Gemini: {
      Json parts = Json::array();
      parts.push_back({{"text", std::string(kGeminiSystemPrompt) + "\n" +
                                    std::string(kGeminiFrameMarker)}});
      for (const auto& item : payload.items)
        parts.push_back(
            {{"inline_data", {{"mime_type", "image/jpeg"}, {"data", data_uri_payload(item)}}}});
      parts.push_back({{"text", prompt}});
      return {{"model", config.model_name},
              {"contents", Json::array({{{"role", "user"}, {"parts", parts}}})},
              {"generationConfig",
               {{"maxOutputTokens", config.max_tokens},
                {"temperature", config.temperature},
                {"topP", config.top_p}}}};
    }
    case Provider::Llama: {
      std::string block(kLlamaSystemPrompt);
      for (const auto& item : payload.items) block += "\n" + item;
      block += "\n" + prompt;
      return {{"model", config.model_name},
              {"instances", Json::array({{{"prompt", block}}})},
              {"parameters",
               {{"max_tokens", config.max_tokens},
                {"temperature", config.temperature},
                {"top_p", config.top_p}}}};
    }
    case Provider::Pixtral:
    case Provider::DeepSeek:
    case Provider::GenericHttp: {
      Json content = Json::array();
      content.push_back({{"type", "text"}, {"text", prompt}});
      for (const auto& item : payload.items) {
        if (p == Provider::Pixtral)
          content.push_back({{"type", "image_url"}, {"image_url", item}});
        else
          content.push_back({{"type", "image_url"}, {"image_url", {{"url", item}}}});
      }
      return {{"model", config.model_name},
              {"messages", Json::array({{{"role", "user"}, {"content", content}}})},
              {"max_tokens", config.max_tokens},
              {"temperature", config.temperature},
              {"top_p", config.top_p}};
    }
  }
  throw PayloadError("unknown provider");
}

std::string render_prompt(const RunManifest& manifest, const std::string& video_id, int qid) {
  const auto* q = manifest.find_question(qid);
  if (!q) throw ValidationError("qid " + std::to_string(qid) + " is not in the manifest");
  std::string out = manifest.question_text(video_id, qid);
  if (q->block == Block::MultipleChoice) {
    const auto opts = options_for(*q);
    out += "\n\nAnswer with exactly one of the following options and nothing else: ";
    for (std::size_t i = 0; i < opts.size(); ++i) out += (i ? ", " : "") + opts[i];
    out += ".";
  }
  return out;
}

std::vector<QueryJob> plan_jobs(const RunManifest& manifest, const std::string& system_id) {
  const auto* sys = manifest.find_system(system_id);
  if (!sys) throw ValidationError("unknown system '" + system_id + "'");
  if (sys->kind != SystemKind::Vlm || !sys->provider_config)
    throw ValidationError("system '" + system_id + "' is not a VLM");
  const auto& cfg = *sys->provider_config;
  if (cfg.repetitions < 1) throw ValidationError(system_id + ": repetitions must be >= 1");
  if (cfg.max_tokens < 1) throw ValidationError(system_id + ": max_tokens must be >= 1");
  if (cfg.temperature < 0.0 || cfg.temperature > 2.0)
    throw ValidationError(system_id + ": temperature outside [0, 2]");
  if (cfg.top_p <= 0.0 || cfg.top_p > 1.0) throw ValidationError(system_id + ": top_p outside (0, 1]");

  std::vector<QueryJob> jobs;
  for (const auto& clip : manifest.videos) {
    auto payload = std::make_shared<const FramePayload>(build_payload(clip, cfg));
    for (const auto& q : manifest.questions)
      jobs.push_back({system_id, clip.id, q.qid, render_prompt(manifest, clip.id, q.qid), payload, cfg});
  }
  return jobs;
}

// ---- transport ------------------------------------------------------------

std::string request_key(const Json& document) { return util::sha256_hex(document.dump()); }

std::string extract_reply_text(Provider p, const Json& body) {
  try {
    switch (p) {
      case Provider::Qwen2:
      case Provider::CogVlm: {
        const auto& out = body.at("output");
        if (out.is_string()) return out.get<std::string>();
        std::string joined;
        for (const auto& piece : out) joined += piece.get<std::string>();
        return joined;
      }
      case Provider::Gemini: {
        std::string joined;
        for (const auto& part : body.at("candidates").at(0).at("content").at("parts"))
          joined += part.at("text").get<std::string>();
        return joined;
      }
      case Provider::Llama: {
        const auto& pred = body.at("predictions").at(0);
        if (pred.is_string()) return pred.get<std::string>();
        if (pred.contains("content")) return pred.at("content").get<std::string>();
        return pred.at("generated_text").get<std::string>();
      }
      case Provider::DeepSeek:
      case Provider::Pixtral:
      case Provider::GenericHttp:
        return body.at("choices").at(0).at("message").at("content").get<std::string>();
    }
  } catch (const Json::exception& e) {
    throw TransportError(std::string(to_string(p)) + ": unexpected response shape: " + e.what());
  }
  throw TransportError("unknown provider");
}

std::string LiveTransport::env_prefix(Provider p) {
  std::string name(to_string(p));
  for (auto& c : name) c = c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return "VQALIGN_" + name;
}

TransportReply LiveTransport::send(const ProviderRequest& request) {
  const auto prefix = env_prefix(request.provider);
  const char* endpoint = std::getenv((prefix + "_ENDPOINT").c_str());
  if (!endpoint || !*endpoint)
    throw DependencyError("harness", prefix + "_ENDPOINT is not set; live transport needs it");
  const char* key = std::getenv((prefix + "_API_KEY").c_str());

  const auto url = util::split_url(endpoint);
  httplib::Client client(url.base);
  client.set_read_timeout(300, 0);
  httplib::Headers headers;
  if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);
  Json body = request.document;
  if (request.access == Access::Replicate) {
    headers.emplace("Prefer", "wait");
    body = {{"input", request.document}};
  }
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res)
    throw TransportError(std::string(to_string(request.provider)) + " unreachable: " +
                         httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300)
    throw TransportError(std::string(to_string(request.provider)) + " returned HTTP " +
                         std::to_string(res->status));
  Json reply;
  try {
    reply = Json::parse(res->body);
  } catch (const Json::exception& e) {
    throw TransportError(std::string("response is not JSON: ") + e.what());
  }
  return {extract_reply_text(request.provider, reply), util::iso8601_now()};
}

Json to_json(const ReplayEntry& e) {
  return {{"key", e.key},
          {"provider", e.provider},
          {"repetition", e.repetition},
          {"text", e.text},
          {"timestamp", e.timestamp}};
}

ReplayEntry replay_entry_from_json(const Json& j) {
  try {
    return {j.at("key").get<std::string>(), j.at("provider").get<std::string>(),
            j.at("repetition").get<int>(), j.at("text").get<std::string>(),
            j.at("timestamp").get<std::string>()};
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("replay fixture entry: ") + e.what());
  }
}

ReplayTransport::ReplayTransport(const std::filesystem::path& fixture) {
  std::ifstream in(fixture);
  if (!in) throw DependencyError("harness", "replay fixture not found: " + fixture.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    try {
      auto e = replay_entry_from_json(Json::parse(line));
      table_[{e.key, e.repetition}] = std::move(e);
    } catch (const Json::exception& e) {
      throw ValidationError(fixture.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

ReplayTransport::ReplayTransport(const std::vector<ReplayEntry>& entries) {
  for (const auto& e : entries) table_[{e.key, e.repetition}] = e;
}

TransportReply ReplayTransport::send(const ProviderRequest& request) {
  const auto it = table_.find({request.key, request.repetition});
  if (it == table_.end())
    throw TransportError("replay fixture has no response for request " + request.key.substr(0, 12) +
                         " repetition " + std::to_string(request.repetition));
  return {it->second.text, it->second.timestamp};
}

RecordTransport::RecordTransport(Transport& inner, std::filesystem::path fixture)
    : inner_(inner), fixture_(std::move(fixture)) {}

TransportReply RecordTransport::send(const ProviderRequest& request) {
  auto reply = inner_.send(request);
  const ReplayEntry e{request.key, std::string(to_string(request.provider)), request.repetition,
                      reply.text, reply.timestamp};
  std::lock_guard lock(mu_);
  if (fixture_.has_parent_path()) std::filesystem::create_directories(fixture_.parent_path());
  std::ofstream out(fixture_, std::ios::app);
  out << to_json(e).dump() << '\n';
  return reply;
}

// ---- scheduling -----------------------------------------------------------

int RunResult::retry_count(const ResponseKey& key) const {
  return static_cast<int>(std::count_if(retries.begin(), retries.end(),
                                        [&](const RetryEvent& r) { return r.key == key; }));
}

namespace {
Json key_json(const ResponseKey& k) {
  return {{"system_id", k.system_id}, {"video_id", k.video_id}, {"qid", k.qid},
          {"repetition", k.repetition}};
}
}  // namespace

Json to_json(const ErrorRow& e) {
  auto j = key_json(e.key);
  j["attempts"] = e.attempts;
  j["error"] = e.message;
  return j;
}

Json to_json(const RetryEvent& e) {
  auto j = key_json(e.key);
  j["attempt"] = e.attempt;
  j["error"] = e.message;
  return j;
}

RunResult run_jobs(const std::vector<QueryJob>& jobs, Transport& transport, const RunOptions& options) {
  struct Unit {
    std::size_t job;
    int repetition;
  };
  struct Outcome {
    std::optional<ResponseRecord> record;
    std::optional<ErrorRow> error;
    std::vector<RetryEvent> retries;
  };

  // Build every request document up front so failures surface before any call.
  std::vector<Json> documents;
  std::vector<std::string> keys;
  std::vector<Unit> units;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto& job = jobs[i];
    if (!job.payload) throw PayloadError("job without payload for " + job.video_id);
    documents.push_back(adapt_payload(job.config, *job.payload, job.prompt_text));
    keys.push_back(request_key(documents.back()));
    for (int r = 0; r < job.config.repetitions; ++r) units.push_back({i, r});
  }

  const auto sleeper = options.sleep ? options.sleep : [](std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
  };
  const int attempts = std::max(1, options.attempts);

  std::vector<Outcome> outcomes(units.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t u = next++; u < units.size(); u = next++) {
      const auto& job = jobs[units[u].job];
      const ResponseKey key{job.system_id, job.video_id, job.qid, units[u].repetition};
      const ProviderRequest req{job.config.provider, job.config.access, job.config.model_name,
                                documents[units[u].job], keys[units[u].job], units[u].repetition};
      auto& out = outcomes[u];
      for (int attempt = 1; attempt <= attempts; ++attempt) {
        try {
          auto reply = transport.send(req);
          out.record = ResponseRecord{job.system_id, job.video_id, job.qid, units[u].repetition,
                                      std::move(reply.text), ResponseStatus::Raw, std::nullopt,
                                      std::move(reply.timestamp)};
          break;
        } catch (const DependencyError&) {
          throw;
        } catch (const std::exception& e) {
          if (attempt == attempts) {
            out.error = ErrorRow{key, attempt, e.what()};
            break;
          }
          out.retries.push_back({key, attempt, e.what()});
          if (!options.backoff.empty())
            sleeper(options.backoff[std::min<std::size_t>(attempt - 1, options.backoff.size() - 1)]);
        }
      }
    }
  };

  const std::size_t n_threads =
      std::max<std::size_t>(1, std::min(options.max_in_flight, units.size()));
  std::vector<std::exception_ptr> failures(n_threads);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n_threads; ++t)
    threads.emplace_back([&, t] {
      try {
        worker();
      } catch (...) {
        failures[t] = std::current_exception();
        next = units.size();
      }
    });
  for (auto& th : threads) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  RunResult result;
  for (auto& o : outcomes) {
    if (o.record) result.records.push_back(std::move(*o.record));
    if (o.error) result.errors.push_back(std::move(*o.error));
    for (auto& r : o.retries) result.retries.push_back(std::move(r));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const auto& a, const auto& b) { return key_of(a) < key_of(b); });
  std::sort(result.errors.begin(), result.errors.end(),
            [](const auto& a, const auto& b) { return a.key < b.key; });
  std::stable_sort(result.retries.begin(), result.retries.end(),
                   [](const auto& a, const auto& b) { return a.key < b.key; });
  return result;
}

}  // namespace vqalign::harness
