#include "vqalign/curation.hpp"

#include <algorithm>
#include <regex>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::curation {

namespace {

long to_long(const std::string& digits) {
  // Anything with more than nine digits is far outside every option set.
  if (digits.size() > 9) return 999'999'999;
  return std::stol(digits);
}

const std::regex& number_expression() {
  static const std::regex kRe(
      R"(\b(more than|greater than|over|above|at least|less than|fewer than|under|below|up to|at most)\s+(\d+))"
      R"(|(\d+)\s*(?:-|\xE2\x80\x93|\bto\b)\s*(\d+))"
      R"(|(\d+)\s*(\+|or more\b|or greater\b|and above\b|and over\b|or less\b|or fewer\b|and below\b))"
      R"(|(\d+))",
      std::regex::ECMAScript | std::regex::optimize);
  return kRe;
}

Interval from_comparative(const std::string& word, long n) {
  if (word == "more than" || word == "greater than" || word == "over" || word == "above")
    return {n + 1, Interval::kOpenEnded};
  if (word == "at least") return {n, Interval::kOpenEnded};
  if (word == "less than" || word == "fewer than" || word == "under" || word == "below")
    return {0, std::max(0L, n - 1)};
  return {0, n};  // up to, at most
}

Interval from_suffix(long n, const std::string& suffix) {
  if (suffix == "+" || suffix.starts_with("or more") || suffix.starts_with("or greater") ||
      suffix.starts_with("and above") || suffix.starts_with("and over"))
    return {n, Interval::kOpenEnded};
  return {0, n};
}

}  // namespace

YesNo normalize_yes_no(std::string_view text) {
  std::string s = util::to_lower(text);
  // Decoration ("Option:", "Answer:", brackets, quotes) never contains the
  // words yes/no, so word-level scanning of what remains is sufficient.
  for (const char* deco : {"option:", "answer:", "options:", "response:"}) {
    std::size_t p;
    while ((p = s.find(deco)) != std::string::npos) s.replace(p, std::char_traits<char>::length(deco), " ");
  }
  bool yes = false, no = false;
  std::string word;
  auto flush = [&] {
    if (word == "yes") yes = true;
    if (word == "no") no = true;
    word.clear();
  };
  for (char c : s) {
    if (c >= 'a' && c <= 'z') {
      word.push_back(c);
    } else {
      flush();
    }
  }
  flush();
  if (yes == no) return YesNo::NotRecognized;
  return yes ? YesNo::Yes : YesNo::No;
}

bool Interval::contains(const Interval& other) const {
  if (other.lo < lo) return false;
  if (open_ended()) return true;
  if (other.open_ended()) return false;
  return other.hi <= hi;
}

Interval parse_option_interval(std::string_view option) {
  static const std::regex kSingle(R"(^\s*(\d+)\s*$)");
  static const std::regex kRange(R"(^\s*(\d+)\s*-\s*(\d+)\s*$)");
  static const std::regex kOpen(R"(^\s*(\d+)\s*\+\s*$)");
  const std::string s(option);
  std::smatch m;
  if (std::regex_match(s, m, kSingle)) {
    const long n = to_long(m[1]);
    return {n, n};
  }
  if (std::regex_match(s, m, kRange)) {
    const long a = to_long(m[1]), b = to_long(m[2]);
    if (a > b) throw ValidationError("option '" + s + "': empty range");
    return {a, b};
  }
  if (std::regex_match(s, m, kOpen)) return {to_long(m[1]), Interval::kOpenEnded};
  throw ValidationError("option '" + s + "' is not an integer interval");
}

std::vector<Interval> extract_intervals(std::string_view text) {
  const std::string s = util::to_lower(text);
  std::vector<Interval> out;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), number_expression());
       it != std::sregex_iterator(); ++it) {
    const std::smatch& m = *it;
    if (m[1].matched) {
      out.push_back(from_comparative(m[1], to_long(m[2])));
    } else if (m[3].matched) {
      long a = to_long(m[3]), b = to_long(m[4]);
      if (a > b) std::swap(a, b);
      out.push_back({a, b});
    } else if (m[5].matched) {
      out.push_back(from_suffix(to_long(m[5]), m[6]));
    } else {
      const long n = to_long(m[7]);
      out.push_back({n, n});
    }
  }
  return out;
}

std::optional<std::string> match_interval(std::string_view text,
                                          std::span<const std::string> options) {
  const auto found = extract_intervals(text);
  if (found.empty()) return std::nullopt;
  for (const auto& iv : found)
    if (!(iv == found.front())) return std::nullopt;

  const Interval& value = found.front();
  std::optional<std::string> hit;
  for (const auto& opt : options) {
    if (parse_option_interval(opt).contains(value)) {
      if (hit) return std::nullopt;
      hit = opt;
    }
  }
  return hit;
}

std::optional<std::string> normalize_scale(std::string_view text) {
  static const std::regex kOutOfTen(R"((\d+)\s*(?:/|out of)\s*10\b)", std::regex::icase);
  const std::string stripped = std::regex_replace(std::string(text), kOutOfTen, "$1");
  return match_interval(stripped, scale_options());
}

SystemCurationStats CurationStats::totals() const {
  SystemCurationStats t;
  for (const auto& [_, s] : per_system) {
    t.modifications += s.modifications;
    t.ignored += s.ignored;
    t.total += s.total;
  }
  return t;
}

Json CurationStats::to_json() const {
  Json j{{"rules_version", kCurationRulesVersion}, {"per_system", Json::object()}};
  for (const auto& [id, s] : per_system)
    j["per_system"][id] = {{"modifications", s.modifications}, {"ignored", s.ignored}, {"total", s.total}};
  const auto t = totals();
  j["totals"] = {{"modifications", t.modifications}, {"ignored", t.ignored}, {"total", t.total}};
  return j;
}

CurationStats CurationStats::from_json(const Json& j) {
  CurationStats out;
  for (const auto& [id, s] : j.at("per_system").items())
    out.per_system[id] = {s.at("modifications").get<long>(), s.at("ignored").get<long>(),
                          s.at("total").get<long>()};
  return out;
}

Normalized normalize_answer(std::string_view text, const QuestionSpec& question) {
  std::optional<std::string> canonical;
  switch (question.answer_format) {
    case AnswerFormat::OpenText: return {ResponseStatus::Kept, std::nullopt};
    case AnswerFormat::YesNo:
      switch (normalize_yes_no(text)) {
        case YesNo::Yes: canonical = "Yes"; break;
        case YesNo::No: canonical = "No"; break;
        case YesNo::NotRecognized: break;
      }
      break;
    case AnswerFormat::Scale1To10: canonical = normalize_scale(text); break;
    case AnswerFormat::CountInterval: {
      const auto opts = options_for(question);
      canonical = match_interval(text, opts);
      break;
    }
  }
  if (!canonical) return {ResponseStatus::Ignored, std::nullopt};
  if (*canonical == text) return {ResponseStatus::Kept, std::nullopt};
  return {ResponseStatus::Modified, std::move(canonical)};
}

CurationResult curate(const std::vector<ResponseRecord>& records, const RunManifest& manifest) {
  CurationResult result;
  result.records.reserve(records.size());
  for (const auto& in : records) {
    ResponseRecord r = in;
    r.normalized_text.reset();
    r.status = ResponseStatus::Kept;

    const auto* sys = manifest.find_system(r.system_id);
    const auto* q = manifest.find_question(r.qid);
    const bool is_human = sys && sys->kind == SystemKind::Human;
    if (!is_human && q) {
      auto n = normalize_answer(r.text, *q);
      r.status = n.status;
      r.normalized_text = std::move(n.normalized_text);
    }

    auto& stats = result.stats.per_system[r.system_id];
    ++stats.total;
    if (r.status == ResponseStatus::Modified) ++stats.modifications;
    if (r.status == ResponseStatus::Ignored) ++stats.ignored;
    result.records.push_back(std::move(r));
  }
  std::sort(result.records.begin(), result.records.end(),
            [](const ResponseRecord& a, const ResponseRecord& b) { return key_of(a) < key_of(b); });
  return result;
}

}  // namespace vqalign::curation
