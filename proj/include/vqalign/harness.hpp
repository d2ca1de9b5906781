#pragma once

// Querying VLM providers: frame extraction, per-provider request documents,
// a record/replay transport and the repetition scheduler.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqalign/model.hpp"

namespace vqalign::harness {

inline constexpr std::string_view kJpegDataPrefix = "data:image/jpeg;base64,";
inline constexpr std::string_view kVideoDataPrefix = "data:video/x-msvideo;base64,";
inline constexpr std::string_view kPromptSuffixVersion = "mc-suffix/1";

// Published defaults per provider; unpublished token limits default to 512.
ProviderConfig default_provider_config(Provider p);
// False where the max_tokens default is the 512 fallback.
bool max_tokens_is_published(Provider p);
// Largest frame count a provider accepts per request, if capped.
std::optional<int> frame_cap(Provider p);

// ---- frames ---------------------------------------------------------------

// Source frame numbers sampled at `fps`: floor(duration * fps) of them (at
// least one), the first frame of each period. Throws ValidationError when
// fps exceeds the clip's native rate.
std::vector<int> frame_indices(const VideoClipRef& clip, Rational fps);

struct EncodedFrame {
  int index = 0;
  std::vector<std::uint8_t> bytes;  // JPEG
};

// Reads the frames listed by frame_indices from a video file or a directory
// of sorted .jpg/.jpeg/.png images. Throws DecodeError.
std::vector<EncodedFrame> extract_frames(const VideoClipRef& clip, Rational fps);

// Re-encodes any OpenCV-readable image (PNG, JPEG...) as JPEG at quality 90.
std::vector<std::uint8_t> to_jpeg(std::span<const std::uint8_t> image);

// Motion-JPEG AVI of the given images at `fps`.
std::vector<std::uint8_t> encode_video(const std::vector<std::vector<std::uint8_t>>& images,
                                       Rational fps);

// ---- payloads -------------------------------------------------------------

enum class FrameEncoding { JpegBase64, BinaryVideo, RemoteUri };
std::string_view to_string(FrameEncoding e);

struct FramePayload {
  FrameEncoding encoding = FrameEncoding::JpegBase64;
  // JpegBase64: one data URI per frame. BinaryVideo: one video data URI.
  // RemoteUri: one URL.
  std::vector<std::string> items;
  Rational fps_used;
};

// Images for an images+text provider, or a video blob for a video+text one.
FramePayload payload_from_images(const std::vector<std::vector<std::uint8_t>>& images,
                                 const ProviderConfig& config);

// Clip frames or video in the form the provider's modality needs. http(s)
// sources of video providers are passed through as remote URIs.
FramePayload build_payload(const VideoClipRef& clip, const ProviderConfig& config);

// Provider request document. Throws PayloadError on empty payloads, frame
// caps, or an encoding the provider cannot take; never drops frames.
Json adapt_payload(const ProviderConfig& config, const FramePayload& payload,
                   const std::string& prompt);

// Question text for one clip, plus the option list for multiple-choice questions.
std::string render_prompt(const RunManifest& manifest, const std::string& video_id, int qid);

struct QueryJob {
  std::string system_id;
  std::string video_id;
  int qid = 0;
  std::string prompt_text;
  std::shared_ptr<const FramePayload> payload;
  ProviderConfig config;  // repetitions and generation parameters live here
};

// One job per (video, qid) for a VLM system in the manifest. Frames are
// loaded once per video. Throws ValidationError for unknown/human systems.
std::vector<QueryJob> plan_jobs(const RunManifest& manifest, const std::string& system_id);

// ---- transport ------------------------------------------------------------

struct ProviderRequest {
  Provider provider = Provider::GenericHttp;
  Access access = Access::DirectApi;
  std::string model_name;
  Json document;
  std::string key;  // sha256 of document.dump()
  int repetition = 0;
};

struct TransportReply {
  std::string text;
  std::string timestamp;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply send(const ProviderRequest& request) = 0;
};

std::string request_key(const Json& document);

// Pulls the answer text out of a provider's raw HTTP response body.
std::string extract_reply_text(Provider p, const Json& body);

// Reads <PREFIX>_ENDPOINT and <PREFIX>_API_KEY, e.g. VQALIGN_PIXTRAL_ENDPOINT.
class LiveTransport : public Transport {
 public:
  TransportReply send(const ProviderRequest& request) override;
  static std::string env_prefix(Provider p);
};

struct ReplayEntry {
  std::string key;
  std::string provider;
  int repetition = 0;
  std::string text;
  std::string timestamp;
};
Json to_json(const ReplayEntry& e);
ReplayEntry replay_entry_from_json(const Json& j);

// Serves responses from a fixture jsonl keyed by (request hash, repetition).
class ReplayTransport : public Transport {
 public:
  explicit ReplayTransport(const std::filesystem::path& fixture);
  explicit ReplayTransport(const std::vector<ReplayEntry>& entries);
  TransportReply send(const ProviderRequest& request) override;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::pair<std::string, int>, ReplayEntry> table_;
};

// Forwards to another transport and appends every reply to a fixture file.
class RecordTransport : public Transport {
 public:
  RecordTransport(Transport& inner, std::filesystem::path fixture);
  TransportReply send(const ProviderRequest& request) override;

 private:
  Transport& inner_;
  std::filesystem::path fixture_;
  std::mutex mu_;
};

// ---- scheduling -----------------------------------------------------------

struct RunOptions {
  int attempts = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(4)};
  std::size_t max_in_flight = 4;
  std::function<void(std::chrono::milliseconds)> sleep;  // defaults to this_thread::sleep_for
};

struct ErrorRow {
  ResponseKey key;
  int attempts = 0;
  std::string message;
};

struct RetryEvent {
  ResponseKey key;
  int attempt = 0;  // 1-based attempt that failed
  std::string message;
};

struct RunResult {
  std::vector<ResponseRecord> records;  // status raw, sorted by key
  std::vector<ErrorRow> errors;
  std::vector<RetryEvent> retries;
  int retry_count(const ResponseKey& key) const;
};

Json to_json(const ErrorRow& e);
Json to_json(const RetryEvent& e);

// Runs every job `repetitions` times. Failures are retried with backoff and,
// once attempts are exhausted, reported as error rows; the run continues.
RunResult run_jobs(const std::vector<QueryJob>& jobs, Transport& transport,
                   const RunOptions& options = {});

}  // namespace vqalign::harness
