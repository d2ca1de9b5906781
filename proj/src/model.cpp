#include "vqalign/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<SystemKind, 2> kKinds{{{SystemKind::Human, "human"}, {SystemKind::Vlm, "vlm"}}};
constexpr NameTable<Provider, 7> kProviders{{{Provider::DeepSeek, "deepseek"},
                                             {Provider::Pixtral, "pixtral"},
                                             {Provider::Qwen2, "qwen2"},
                                             {Provider::CogVlm, "cogvlm"},
                                             {Provider::Gemini, "gemini"},
                                             {Provider::Llama, "llama"},
                                             {Provider::GenericHttp, "generic-http"}}};
constexpr NameTable<Access, 3> kAccess{
    {{Access::DirectApi, "direct-api"}, {Access::Replicate, "replicate"}, {Access::Vertex, "vertex"}}};
constexpr NameTable<InputModality, 2> kModalities{
    {{InputModality::ImagesText, "images+text"}, {InputModality::VideoText, "video+text"}}};
constexpr NameTable<Block, 3> kBlocks{{{Block::Variable, "variable"},
                                       {Block::MultipleChoice, "multiple_choice"},
                                       {Block::Counterfactual, "counterfactual"}}};
constexpr NameTable<AnswerFormat, 4> kFormats{{{AnswerFormat::OpenText, "open_text"},
                                               {AnswerFormat::YesNo, "yes_no"},
                                               {AnswerFormat::Scale1To10, "scale_1_10"},
                                               {AnswerFormat::CountInterval, "count_interval"}}};
constexpr NameTable<ResponseStatus, 4> kStatuses{{{ResponseStatus::Raw, "raw"},
                                                  {ResponseStatus::Kept, "kept"},
                                                  {ResponseStatus::Modified, "modified"},
                                                  {ResponseStatus::Ignored, "ignored"}}};

template <typename E, std::size_t N>
std::string_view name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

template <typename E, std::size_t N>
E value_of(const NameTable<E, N>& table, std::string_view s, std::string_view what) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  throw ValidationError("unknown " + std::string(what) + " '" + std::string(s) + "'");
}

std::string at(std::string_view where, std::string_view field) {
  return std::string(where) + "." + std::string(field);
}

const Json& require(const Json& j, std::string_view field, std::string_view where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  auto it = j.find(std::string(field));
  if (it == j.end()) throw ValidationError(at(where, field) + ": missing field");
  return *it;
}

std::string get_string(const Json& j, std::string_view field, std::string_view where) {
  const Json& v = require(j, field, where);
  if (!v.is_string()) throw ValidationError(at(where, field) + ": expected a string");
  return v.get<std::string>();
}

std::int64_t get_int(const Json& j, std::string_view field, std::string_view where) {
  const Json& v = require(j, field, where);
  if (!v.is_number_integer()) throw ValidationError(at(where, field) + ": expected an integer");
  return v.get<std::int64_t>();
}

double get_number(const Json& j, std::string_view field, std::string_view where) {
  const Json& v = require(j, field, where);
  if (!v.is_number()) throw ValidationError(at(where, field) + ": expected a number");
  return v.get<double>();
}

bool get_bool(const Json& j, std::string_view field, std::string_view where) {
  const Json& v = require(j, field, where);
  if (!v.is_boolean()) throw ValidationError(at(where, field) + ": expected a boolean");
  return v.get<bool>();
}

template <typename F>
auto enum_field(const Json& j, std::string_view field, std::string_view where, F parse) {
  const std::string s = get_string(j, field, where);
  try {
    return parse(s);
  } catch (const ValidationError& e) {
    throw ValidationError(at(where, field) + ": " + e.what());
  }
}

void reject_unknown(const Json& j, std::initializer_list<std::string_view> known,
                    std::string_view where) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end())
      throw ValidationError(std::string(where) + ": unknown field '" + k + "'");
  }
}

Json rational_json(const Rational& r) {
  if (r.den == 1) return r.num;
  return r.value();
}

std::string describe_question(const QuestionSpec& q) {
  return "question qid " + std::to_string(q.qid);
}

}  // namespace

std::string_view to_string(SystemKind v) { return name_of(kKinds, v); }
std::string_view to_string(Provider v) { return name_of(kProviders, v); }
std::string_view to_string(Access v) { return name_of(kAccess, v); }
std::string_view to_string(InputModality v) { return name_of(kModalities, v); }
std::string_view to_string(Block v) { return name_of(kBlocks, v); }
std::string_view to_string(AnswerFormat v) { return name_of(kFormats, v); }
std::string_view to_string(ResponseStatus v) { return name_of(kStatuses, v); }

SystemKind parse_system_kind(std::string_view s) { return value_of(kKinds, s, "system kind"); }
Provider parse_provider(std::string_view s) { return value_of(kProviders, s, "provider"); }
Access parse_access(std::string_view s) { return value_of(kAccess, s, "access"); }
InputModality parse_input_modality(std::string_view s) {
  return value_of(kModalities, s, "input modality");
}
Block parse_block(std::string_view s) { return value_of(kBlocks, s, "block"); }
AnswerFormat parse_answer_format(std::string_view s) {
  return value_of(kFormats, s, "answer format");
}
ResponseStatus parse_response_status(std::string_view s) {
  return value_of(kStatuses, s, "response status");
}

Rational Rational::from_double(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("rate must be positive");
  // Continued-fraction expansion, stopping at the first convergent within 1e-12.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = v;
  for (int i = 0; i < 32; ++i) {
    const auto a = static_cast<std::int64_t>(std::floor(x));
    const std::int64_t h2 = a * h1 + h0, k2 = a * k1 + k0;
    if (k2 > 1000) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(static_cast<double>(h1) / static_cast<double>(k1) - v) < 1e-12) break;
    const double frac = x - static_cast<double>(a);
    if (frac < 1e-15) break;
    x = 1.0 / frac;
  }
  if (k1 == 0) throw ValidationError("rate not representable");
  return {h1, k1};
}

const SystemProfile* RunManifest::find_system(std::string_view id) const {
  for (const auto& s : systems)
    if (s.id == id) return &s;
  return nullptr;
}

const VideoClipRef* RunManifest::find_video(std::string_view id) const {
  for (const auto& v : videos)
    if (v.id == id) return &v;
  return nullptr;
}

const QuestionSpec* RunManifest::find_question(int qid) const {
  for (const auto& q : questions)
    if (q.qid == qid) return &q;
  return nullptr;
}

std::string RunManifest::question_text(std::string_view video_id, int qid) const {
  for (const auto& vq : variable_questions)
    if (vq.video_id == video_id && vq.qid == qid) return vq.text;
  if (const auto* q = find_question(qid)) return q->text;
  return {};
}

std::vector<CellKey> RunManifest::cells() const {
  std::vector<int> qids;
  for (const auto& q : questions) qids.push_back(q.qid);
  std::sort(qids.begin(), qids.end());
  std::vector<CellKey> out;
  out.reserve(videos.size() * qids.size());
  for (const auto& v : videos)
    for (int qid : qids) out.push_back({v.id, qid});
  return out;
}

Block block_of_qid(int qid) {
  if (qid >= 1 && qid <= 5) return Block::Variable;
  if (qid >= 6 && qid <= 10) return Block::MultipleChoice;
  if (qid >= 11 && qid <= 15) return Block::Counterfactual;
  throw ValidationError("qid " + std::to_string(qid) + " outside 1-15");
}

const std::vector<std::string>& pedestrian_count_options() {
  static const std::vector<std::string> kOptions{"0", "1", "2-3", "4-6", "7-10", "11-20", "21+"};
  return kOptions;
}

const std::vector<std::string>& yes_no_options() {
  static const std::vector<std::string> kOptions{"Yes", "No"};
  return kOptions;
}

const std::vector<std::string>& scale_options() {
  static const std::vector<std::string> kOptions{"1", "2", "3", "4", "5", "6", "7", "8", "9", "10"};
  return kOptions;
}

std::vector<std::string> options_for(const QuestionSpec& q) {
  if (q.allowed_options) return *q.allowed_options;
  switch (q.answer_format) {
    case AnswerFormat::YesNo: return yes_no_options();
    case AnswerFormat::Scale1To10: return scale_options();
    case AnswerFormat::CountInterval: return pedestrian_count_options();
    case AnswerFormat::OpenText: return {};
  }
  return {};
}

void validate_question(const QuestionSpec& q) {
  const std::string who = describe_question(q);
  Block expected;
  try {
    expected = block_of_qid(q.qid);
  } catch (const ValidationError&) {
    throw ValidationError(who + ": qid must be in 1-15");
  }
  if (q.block != expected)
    throw ValidationError(who + ": block must be " + std::string(to_string(expected)));
  if (q.text.empty()) throw ValidationError(who + ": empty text");

  auto require_format = [&](AnswerFormat f) {
    if (q.answer_format != f)
      throw ValidationError(who + ": answer_format must be " + std::string(to_string(f)) +
                            ", got " + std::string(to_string(q.answer_format)));
  };
  switch (q.qid) {
    case 6:
    case 10: require_format(AnswerFormat::Scale1To10); break;
    case 7:
    case 9: require_format(AnswerFormat::YesNo); break;
    case 8:
      require_format(AnswerFormat::CountInterval);
      if (!q.allowed_options || *q.allowed_options != pedestrian_count_options())
        throw ValidationError(who + ": allowed_options must be [0,1,2-3,4-6,7-10,11-20,21+]");
      break;
    default: require_format(AnswerFormat::OpenText); break;
  }
  if (q.answer_format == AnswerFormat::OpenText && q.allowed_options)
    throw ValidationError(who + ": open_text questions take no allowed_options");
  if (q.answer_format == AnswerFormat::YesNo && q.allowed_options &&
      *q.allowed_options != yes_no_options())
    throw ValidationError(who + ": yes_no allowed_options must be [Yes, No]");
  if (q.answer_format == AnswerFormat::Scale1To10 && q.allowed_options &&
      *q.allowed_options != scale_options())
    throw ValidationError(who + ": scale_1_10 allowed_options must be 1..10");
}

void validate_manifest(const RunManifest& m) {
  if (m.systems.empty()) throw ValidationError("empty systems");
  if (m.videos.empty()) throw ValidationError("empty videos");
  if (m.questions.empty()) throw ValidationError("empty questions");

  std::set<std::string> ids;
  for (const auto& s : m.systems) {
    const std::string who = "system '" + s.id + "'";
    if (s.id.empty()) throw ValidationError("system with empty id");
    if (!ids.insert(s.id).second) throw ValidationError(who + ": duplicate id");
    if (s.kind == SystemKind::Vlm && !s.provider_config)
      throw ValidationError(who + ": provider_config required for vlm");
    if (s.kind == SystemKind::Human && s.provider_config)
      throw ValidationError(who + ": provider_config only allowed for vlm");
    if (s.kind == SystemKind::Vlm && s.anonymized)
      throw ValidationError(who + ": anonymized applies to humans only");
    if (const auto& pc = s.provider_config) {
      if (pc->repetitions < 1) throw ValidationError(who + ": repetitions must be >= 1");
      if (pc->max_tokens < 1) throw ValidationError(who + ": max_tokens must be >= 1");
      if (pc->temperature < 0.0) throw ValidationError(who + ": temperature must be >= 0");
      if (!(pc->top_p > 0.0 && pc->top_p <= 1.0))
        throw ValidationError(who + ": top_p must be in (0,1]");
      if (pc->frame_rate_fps.num <= 0 || pc->frame_rate_fps.den <= 0)
        throw ValidationError(who + ": frame_rate_fps must be positive");
      if (pc->provider != Provider::GenericHttp) {
        const Rational r = pc->frame_rate_fps;
        if (!(r == Rational{1, 2} || r == Rational{1, 1} || r == Rational{10, 1}))
          throw ValidationError(who + ": frame_rate_fps must be one of 0.5, 1, 10");
      }
    }
  }

  std::set<std::string> vids;
  for (const auto& v : m.videos) {
    const std::string who = "video '" + v.id + "'";
    if (v.id.empty()) throw ValidationError("video with empty id");
    if (!vids.insert(v.id).second) throw ValidationError(who + ": duplicate id");
    if (v.frame_count < 1 || v.native_fps < 1 || !(v.duration_s > 0.0))
      throw ValidationError(who + ": frame_count, native_fps and duration_s must be positive");
    if (v.frame_count != static_cast<int>(std::lround(v.native_fps * v.duration_s)))
      throw ValidationError(who + ": frame_count must equal round(native_fps * duration_s)");
  }

  std::set<int> qids;
  for (const auto& q : m.questions) {
    validate_question(q);
    if (!qids.insert(q.qid).second)
      throw ValidationError(describe_question(q) + ": duplicate qid");
  }

  for (const auto& vq : m.variable_questions) {
    if (!vids.count(vq.video_id))
      throw ValidationError("variable question: unknown video '" + vq.video_id + "'");
    if (vq.qid < 1 || vq.qid > 5)
      throw ValidationError("variable question for '" + vq.video_id + "': qid must be 1-5");
    if (vq.text.empty())
      throw ValidationError("variable question for '" + vq.video_id + "': empty text");
  }
}

Json to_json(const ProviderConfig& v) {
  return Json{{"provider", to_string(v.provider)},
              {"model_name", v.model_name},
              {"access", to_string(v.access)},
              {"frame_rate_fps", rational_json(v.frame_rate_fps)},
              {"input_modality", to_string(v.input_modality)},
              {"max_tokens", v.max_tokens},
              {"temperature", v.temperature},
              {"top_p", v.top_p},
              {"repetitions", v.repetitions}};
}

Json to_json(const SystemProfile& v) {
  Json j{{"id", v.id}, {"kind", to_string(v.kind)}, {"display_name", v.display_name}};
  if (v.provider_config) j["provider_config"] = to_json(*v.provider_config);
  if (v.kind == SystemKind::Human) j["anonymized"] = v.anonymized;
  return j;
}

Json to_json(const VideoClipRef& v) {
  Json j{{"id", v.id},
         {"frame_count", v.frame_count},
         {"native_fps", v.native_fps},
         {"duration_s", v.duration_s},
         {"source_path_or_uri", v.source_path_or_uri}};
  if (v.city) j["city"] = *v.city;
  return j;
}

Json to_json(const QuestionSpec& v) {
  Json j{{"qid", v.qid},
         {"block", to_string(v.block)},
         {"text", v.text},
         {"answer_format", to_string(v.answer_format)}};
  if (v.allowed_options) j["allowed_options"] = *v.allowed_options;
  return j;
}

Json to_json(const VariableQuestion& v) {
  Json j{{"video_id", v.video_id}, {"qid", v.qid}, {"text", v.text}};
  if (v.reference_answer) j["reference_answer"] = *v.reference_answer;
  return j;
}

Json to_json(const ResponseRecord& v) {
  Json j{{"system_id", v.system_id},
         {"video_id", v.video_id},
         {"qid", v.qid},
         {"repetition", v.repetition},
         {"text", v.text},
         {"status", to_string(v.status)},
         {"timestamp", v.timestamp}};
  if (v.normalized_text) j["normalized_text"] = *v.normalized_text;
  return j;
}

Json to_json(const RunManifest& v) {
  Json j{{"systems", Json::array()}, {"videos", Json::array()}, {"questions", Json::array()}};
  for (const auto& s : v.systems) j["systems"].push_back(to_json(s));
  for (const auto& s : v.videos) j["videos"].push_back(to_json(s));
  for (const auto& s : v.questions) j["questions"].push_back(to_json(s));
  if (!v.variable_questions.empty()) {
    j["variable_questions"] = Json::array();
    for (const auto& s : v.variable_questions) j["variable_questions"].push_back(to_json(s));
  }
  return j;
}

ProviderConfig provider_config_from_json(const Json& j, std::string_view where) {
  reject_unknown(j,
                 {"provider", "model_name", "access", "frame_rate_fps", "input_modality",
                  "max_tokens", "temperature", "top_p", "repetitions"},
                 where);
  ProviderConfig c;
  c.provider = enum_field(j, "provider", where, parse_provider);
  c.model_name = get_string(j, "model_name", where);
  c.access = enum_field(j, "access", where, parse_access);
  try {
    c.frame_rate_fps = Rational::from_double(get_number(j, "frame_rate_fps", where));
  } catch (const ValidationError& e) {
    throw ValidationError(at(where, "frame_rate_fps") + ": " + e.what());
  }
  c.input_modality = enum_field(j, "input_modality", where, parse_input_modality);
  c.max_tokens = static_cast<int>(get_int(j, "max_tokens", where));
  c.temperature = get_number(j, "temperature", where);
  c.top_p = get_number(j, "top_p", where);
  c.repetitions = static_cast<int>(get_int(j, "repetitions", where));
  return c;
}

SystemProfile system_from_json(const Json& j, std::string_view where) {
  reject_unknown(j, {"id", "kind", "display_name", "provider_config", "anonymized"}, where);
  SystemProfile s;
  s.id = get_string(j, "id", where);
  s.kind = enum_field(j, "kind", where, parse_system_kind);
  s.display_name = get_string(j, "display_name", where);
  if (j.contains("provider_config"))
    s.provider_config = provider_config_from_json(j.at("provider_config"), at(where, "provider_config"));
  if (j.contains("anonymized")) s.anonymized = get_bool(j, "anonymized", where);
  return s;
}

VideoClipRef video_from_json(const Json& j, std::string_view where) {
  reject_unknown(j,
                 {"id", "frame_count", "native_fps", "duration_s", "source_path_or_uri", "city"},
                 where);
  VideoClipRef v;
  v.id = get_string(j, "id", where);
  v.frame_count = static_cast<int>(get_int(j, "frame_count", where));
  v.native_fps = static_cast<int>(get_int(j, "native_fps", where));
  v.duration_s = get_number(j, "duration_s", where);
  v.source_path_or_uri = get_string(j, "source_path_or_uri", where);
  if (j.contains("city")) v.city = get_string(j, "city", where);
  return v;
}

QuestionSpec question_from_json(const Json& j, std::string_view where) {
  reject_unknown(j, {"qid", "block", "text", "answer_format", "allowed_options"}, where);
  QuestionSpec q;
  q.qid = static_cast<int>(get_int(j, "qid", where));
  q.block = enum_field(j, "block", where, parse_block);
  q.text = get_string(j, "text", where);
  q.answer_format = enum_field(j, "answer_format", where, parse_answer_format);
  if (j.contains("allowed_options")) {
    const Json& opts = j.at("allowed_options");
    if (!opts.is_array()) throw ValidationError(at(where, "allowed_options") + ": expected array");
    std::vector<std::string> out;
    for (const auto& o : opts) {
      if (!o.is_string())
        throw ValidationError(at(where, "allowed_options") + ": expected strings");
      out.push_back(o.get<std::string>());
    }
    q.allowed_options = std::move(out);
  }
  return q;
}

ResponseRecord response_from_json(const Json& j, std::string_view where) {
  reject_unknown(j,
                 {"system_id", "video_id", "qid", "repetition", "text", "status",
                  "normalized_text", "timestamp"},
                 where);
  ResponseRecord r;
  r.system_id = get_string(j, "system_id", where);
  r.video_id = get_string(j, "video_id", where);
  r.qid = static_cast<int>(get_int(j, "qid", where));
  r.repetition = static_cast<int>(get_int(j, "repetition", where));
  if (r.repetition < 0) throw ValidationError(at(where, "repetition") + ": must be >= 0");
  r.text = get_string(j, "text", where);
  r.status = enum_field(j, "status", where, parse_response_status);
  if (j.contains("normalized_text")) r.normalized_text = get_string(j, "normalized_text", where);
  r.timestamp = get_string(j, "timestamp", where);
  if (r.status == ResponseStatus::Ignored && r.normalized_text)
    throw ValidationError(std::string(where) + ": ignored record carries normalized_text");
  if (r.status == ResponseStatus::Modified && (!r.normalized_text || *r.normalized_text == r.text))
    throw ValidationError(std::string(where) + ": modified record needs a differing normalized_text");
  return r;
}

RunManifest parse_manifest(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("manifest: invalid JSON: ") + e.what());
  }
  reject_unknown(j, {"systems", "videos", "questions", "variable_questions"}, "manifest");
  RunManifest m;
  auto list = [&](std::string_view key) -> const Json& {
    const Json& v = require(j, key, "manifest");
    if (!v.is_array()) throw ValidationError(at("manifest", key) + ": expected an array");
    return v;
  };
  const Json& systems = list("systems");
  for (std::size_t i = 0; i < systems.size(); ++i)
    m.systems.push_back(system_from_json(systems[i], "systems[" + std::to_string(i) + "]"));
  const Json& videos = list("videos");
  for (std::size_t i = 0; i < videos.size(); ++i)
    m.videos.push_back(video_from_json(videos[i], "videos[" + std::to_string(i) + "]"));
  const Json& questions = list("questions");
  for (std::size_t i = 0; i < questions.size(); ++i)
    m.questions.push_back(question_from_json(questions[i], "questions[" + std::to_string(i) + "]"));
  if (j.contains("variable_questions")) {
    const Json& vqs = list("variable_questions");
    for (std::size_t i = 0; i < vqs.size(); ++i) {
      const std::string where = "variable_questions[" + std::to_string(i) + "]";
      reject_unknown(vqs[i], {"video_id", "qid", "text", "reference_answer"}, where);
      VariableQuestion vq;
      vq.video_id = get_string(vqs[i], "video_id", where);
      vq.qid = static_cast<int>(get_int(vqs[i], "qid", where));
      vq.text = get_string(vqs[i], "text", where);
      if (vqs[i].contains("reference_answer"))
        vq.reference_answer = get_string(vqs[i], "reference_answer", where);
      m.variable_questions.push_back(std::move(vq));
    }
  }
  validate_manifest(m);
  return m;
}

std::string serialize_manifest(const RunManifest& m) { return to_json(m).dump(2) + "\n"; }

RunManifest load_run_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ValidationError("manifest not found: " + path.string());
  return parse_manifest(util::read_file(path));
}

void save_run_manifest(const RunManifest& m, const std::filesystem::path& path) {
  util::write_if_changed(path, serialize_manifest(m));
}

std::vector<ResponseRecord> parse_responses(std::string_view jsonl) {
  std::vector<ResponseRecord> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t nl = jsonl.find('\n', pos);
    if (nl == std::string_view::npos) nl = jsonl.size();
    const std::string_view line = jsonl.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (util::trim(line).empty()) continue;
    const std::string where = "responses line " + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ValidationError(where + ": invalid JSON: " + e.what());
    }
    out.push_back(response_from_json(j, where));
  }
  return out;
}

std::string serialize_responses(const std::vector<ResponseRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<ResponseRecord> load_responses(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw ValidationError("responses file not found: " + path.string());
  return parse_responses(util::read_file(path));
}

void save_responses(const std::vector<ResponseRecord>& records, const std::filesystem::path& path) {
  util::write_if_changed(path, serialize_responses(records));
}

Json ValidationReport::to_json() const {
  Json j{{"ok", ok()},
         {"missing", Json::array()},
         {"duplicates", Json::array()},
         {"unknown_ids", unknown_ids},
         {"invariant_violations", invariant_violations}};
  for (const auto& m : missing)
    j["missing"].push_back({{"system_id", m.system_id}, {"video_id", m.video_id}, {"qid", m.qid}});
  for (const auto& d : duplicates)
    j["duplicates"].push_back({{"system_id", d.system_id},
                               {"video_id", d.video_id},
                               {"qid", d.qid},
                               {"repetition", d.repetition}});
  return j;
}

ValidationReport validate_responses(const std::vector<ResponseRecord>& records,
                                    const RunManifest& manifest) {
  ValidationReport report;
  std::set<ResponseKey> seen;
  std::set<std::tuple<std::string, std::string, int>> answered;
  std::set<std::string> unknown;

  for (const auto& r : records) {
    const auto* sys = manifest.find_system(r.system_id);
    bool known = true;
    if (!sys) {
      unknown.insert("system:" + r.system_id);
      known = false;
    }
    if (!manifest.find_video(r.video_id)) {
      unknown.insert("video:" + r.video_id);
      known = false;
    }
    if (!manifest.find_question(r.qid)) {
      unknown.insert("qid:" + std::to_string(r.qid));
      known = false;
    }
    if (!seen.insert(key_of(r)).second) report.duplicates.push_back(key_of(r));

    if (sys && sys->kind == SystemKind::Human && r.repetition != 0) {
      report.invariant_violations.push_back("human record with repetition " +
                                            std::to_string(r.repetition) + " for " + r.system_id);
    }
    if (sys && sys->provider_config && r.repetition >= sys->provider_config->repetitions) {
      report.invariant_violations.push_back(
          "repetition " + std::to_string(r.repetition) + " exceeds configured repetitions for " +
          r.system_id);
    }
    if (known) answered.insert({r.system_id, r.video_id, r.qid});
  }
  report.unknown_ids.assign(unknown.begin(), unknown.end());

  for (const auto& s : manifest.systems)
    for (const auto& c : manifest.cells())
      if (!answered.count({s.id, c.video_id, c.qid}))
        report.missing.push_back({s.id, c.video_id, c.qid});
  return report;
}

}  // namespace vqalign
