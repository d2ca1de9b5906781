#include "vqalign/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::capacity {

namespace {

const cv::Scalar kWhite(255, 255, 255);
const cv::Scalar kRed(0, 0, 255);
const cv::Scalar kGreen(0, 255, 0);

std::vector<cv::Point> star_polygon(Point c, int box) {
  const double outer = box / 2.0;
  const double inner = outer * 0.381966;
  std::vector<cv::Point> pts;
  for (int k = 0; k < 10; ++k) {
    const double r = k % 2 == 0 ? outer : inner;
    const double a = -std::numbers::pi / 2 + k * std::numbers::pi / 5;
    pts.emplace_back(static_cast<int>(std::lround(c.x + r * std::cos(a))),
                     static_cast<int>(std::lround(c.y + r * std::sin(a))));
  }
  return pts;
}

std::string normalize_text(std::string_view text) {
  std::string s = util::to_lower(text);
  // Typographic apostrophes and dashes to ASCII.
  for (const auto& [from, to] : std::vector<std::pair<std::string, std::string>>{
           {"\xE2\x80\x99", "'"}, {"\xE2\x80\x93", " "}, {"\xE2\x80\x94", " "}}) {
    for (auto pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos))
      s.replace(pos, from.size(), to);
  }
  std::string out;
  for (char c : s) {
    if (c == '-' || c == '_') c = ' ';
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!out.empty() && out.back() != ' ') out.push_back(' ');
    } else {
      out.push_back(c);
    }
  }
  return out;
}

bool negated(const std::string& text, std::size_t pos, const Lexicon& lex) {
  std::size_t start = text.find_last_of(".!?;:\n", pos == 0 ? 0 : pos - 1);
  start = start == std::string::npos || start >= pos ? 0 : start + 1;
  static const std::regex word("[a-z']+");
  std::vector<std::string> words;
  const std::string prefix = text.substr(start, pos - start);
  for (auto it = std::sregex_iterator(prefix.begin(), prefix.end(), word); it != std::sregex_iterator();
       ++it)
    words.push_back(it->str());
  const std::size_t from = words.size() > static_cast<std::size_t>(lex.negation_window)
                               ? words.size() - lex.negation_window
                               : 0;
  for (std::size_t i = from; i < words.size(); ++i) {
    if (words[i].ends_with("n't")) return true;
    if (std::find(lex.negators.begin(), lex.negators.end(), words[i]) != lex.negators.end())
      return true;
  }
  return false;
}

bool affirmed(const std::string& text, const std::vector<std::string>& patterns, const Lexicon& lex) {
  for (const auto& p : patterns) {
    const std::regex re(p);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it)
      if (!negated(text, static_cast<std::size_t>(it->position()), lex)) return true;
  }
  return false;
}

}  // namespace

std::pair<CapacityCase, std::vector<GeneratedFrame>> generate_case(int num_frames,
                                                                   int star_frame_index,
                                                                   FrameSize size,
                                                                   const RenderParams& params) {
  if (num_frames < 2) throw ValidationError("capacity case needs at least 2 frames");
  if (star_frame_index < 0 || star_frame_index >= num_frames)
    throw ValidationError("star frame index " + std::to_string(star_frame_index) +
                          " outside [0, " + std::to_string(num_frames) + ")");
  const int r = params.ball_radius;
  const int m = params.margin;
  const int x0 = m + r, x1 = size.width - m - r;
  const int y0 = size.height - m - r, y1 = m + r;
  if (x1 - x0 < num_frames - 1 || y0 - y1 < num_frames - 1)
    throw ValidationError("frame too small for " + std::to_string(num_frames) + " distinct ball positions");

  CapacityCase c;
  c.num_frames = num_frames;
  c.star_frame_index = star_frame_index;
  c.frame_size = size;
  for (int k = 0; k < num_frames; ++k) {
    const double t = static_cast<double>(k) / (num_frames - 1);
    c.ball_positions.push_back({static_cast<int>(std::lround(x0 + (x1 - x0) * t)),
                                static_cast<int>(std::lround(y0 + (y1 - y0) * t))});
  }
  // Top-left corner, well off the ball's diagonal.
  c.star_center = {m + params.star_box / 2, m + params.star_box / 2};
  {
    const double dx = x1 - x0, dy = y1 - y0;
    const double dist = std::abs(dy * (c.star_center.x - x0) - dx * (c.star_center.y - y0)) /
                        std::hypot(dx, dy);
    if (dist <= r + params.star_box / 2.0 + 1)
      throw ValidationError("frame too small to keep the star clear of the ball path");
  }

  std::vector<GeneratedFrame> frames;
  for (int k = 0; k < num_frames; ++k) {
    cv::Mat img(size.height, size.width, CV_8UC3, kWhite);
    cv::circle(img, {c.ball_positions[k].x, c.ball_positions[k].y}, r, kRed, cv::FILLED, cv::LINE_8);
    if (k == star_frame_index) {
      const std::vector<std::vector<cv::Point>> poly{star_polygon(c.star_center, params.star_box)};
      cv::fillPoly(img, poly, kGreen, cv::LINE_8);
    }
    GeneratedFrame f;
    if (!cv::imencode(".png", img, f.png, {cv::IMWRITE_PNG_COMPRESSION, 6}))
      throw ComputeError("PNG encoding failed");
    f.filename = util::sha256_hex(f.png).substr(0, 16) + ".png";
    frames.push_back(std::move(f));
  }
  return {std::move(c), std::move(frames)};
}

Bitmap decode_png(std::span<const std::uint8_t> png) {
  const cv::Mat raw(1, static_cast<int>(png.size()), CV_8UC1, const_cast<std::uint8_t*>(png.data()));
  const cv::Mat img = cv::imdecode(raw, cv::IMREAD_COLOR);
  if (img.empty()) throw DecodeError("not a decodable image");
  Bitmap b{img.cols, img.rows, {}};
  b.bgr.assign(img.datastart, img.dataend);
  return b;
}

const std::string& capacity_prompt() {
  static const std::string kPrompt =
      "Task: Answer the following questions based solely on the sequence of images provided. "
      "The images represent frames from a short video sequence.\n"
      "\n"
      "Questions:\n"
      "1. In which direction is the red ball moving?\n"
      "2. Do you see any other objects besides the red ball? If so, please describe the "
      "object(s) and their color(s).\n"
      "\n"
      "Instructions:\n"
      "- Carefully analyze each image frame by frame.\n"
      "- Base your answers only on what is visibly present in the images.\n"
      "- Do not assume any information that is not directly observable.\n"
      "- Provide a concise answer, and explain your reasoning if necessary.";
  return kPrompt;
}

const Lexicon& default_lexicon() {
  static const Lexicon kLex{
      {R"(\b(top|upper) right\b)", R"(\bup(ward|wards)? (and )?(to (the )?|towards? (the )?)?right\b)",
       R"(\bnorth ?east(ward|wards)?\b)", R"(\bfrom (the )?(bottom|lower) left\b)"},
      {R"(\b(to|toward|towards|into) (the )?(bottom|lower) left\b)",
       R"(\bdown(ward|wards)? (and )?(to (the )?|towards? (the )?)?left\b)",
       R"(\bsouth ?west(ward|wards)?\b)", R"(\bfrom (the )?(top|upper) right\b)"},
      {R"(\bstars?\b)", R"(\bfive pointed\b)", R"(\bpentagram\b)"},
      {"no", "not", "without", "never", "none", "neither", "nor", "cannot"},
      4};
  return kLex;
}

Lexicon lexicon_from_json(const Json& j) {
  Lexicon lex = default_lexicon();
  auto list = [&](const char* name, std::vector<std::string>& dst) {
    if (j.contains(name)) dst = j.at(name).get<std::vector<std::string>>();
  };
  list("toward_top_right", lex.toward_top_right);
  list("reversed", lex.reversed);
  list("star_terms", lex.star_terms);
  list("negators", lex.negators);
  if (j.contains("negation_window")) lex.negation_window = j.at("negation_window").get<int>();
  return lex;
}

Grade grade_response(std::string_view text, const CapacityCase&, const Lexicon& lexicon) {
  const std::string t = normalize_text(text);
  Grade g;
  g.direction_ok = affirmed(t, lexicon.toward_top_right, lexicon) && !affirmed(t, lexicon.reversed, lexicon);
  g.star_detected = affirmed(t, lexicon.star_terms, lexicon) && affirmed(t, {R"(\bgreen\b)"}, lexicon);
  return g;
}

int frames_for(Rational fps, double seconds) {
  return std::max(2, static_cast<int>(std::lround(seconds * fps.value())));
}

std::vector<int> star_schedule(int num_frames, int iterations) {
  iterations = std::clamp(iterations, 1, num_frames);
  if (iterations == 1) return {num_frames - 1};
  std::vector<int> out;
  for (int k = 0; k < iterations; ++k)
    out.push_back(static_cast<int>(std::lround(static_cast<double>(k) * (num_frames - 1) / (iterations - 1))));
  return out;
}

bool CapacityReport::passed() const {
  return !iterations.empty() &&
         std::all_of(iterations.begin(), iterations.end(), [](const auto& i) { return i.passed(); });
}

Json CapacityReport::to_json() const {
  Json its = Json::array();
  for (const auto& i : iterations)
    its.push_back({{"star_frame_index", i.star_frame_index},
                   {"payload_ok", i.payload_ok},
                   {"error", i.error},
                   {"direction_ok", i.grade.direction_ok},
                   {"star_detected", i.grade.star_detected},
                   {"passed", i.passed()},
                   {"response_text", i.response_text}});
  return {{"provider", provider},   {"model_name", model_name}, {"fps", fps.value()},
          {"num_frames", num_frames}, {"passed", passed()},   {"iterations", its}};
}

Responder responder_from(harness::Transport& transport) {
  return [&transport](const harness::ProviderRequest& req, const CapacityCase&) {
    return transport.send(req);
  };
}

GradingFixture::GradingFixture(const Json& j) {
  try {
    for (const auto& e : j.at("responses")) {
      Entry entry;
      entry.provider = e.at("provider").get<std::string>();
      entry.fps = Rational::from_double(e.at("fps").get<double>());
      if (e.contains("star_frame_index")) entry.star_frame_index = e.at("star_frame_index").get<int>();
      entry.text = e.at("text").get<std::string>();
      entries_.push_back(std::move(entry));
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("grading fixture: ") + e.what());
  }
}

GradingFixture GradingFixture::load(const std::filesystem::path& path) {
  try {
    return GradingFixture(Json::parse(util::read_file(path)));
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Responder GradingFixture::responder() const {
  return [entries = entries_](const harness::ProviderRequest& req, const CapacityCase& c) {
    // The request does not carry the frame rate; recover it from the frame count.
    const Entry* fallback = nullptr;
    for (const auto& e : entries) {
      if (e.provider != to_string(req.provider) || frames_for(e.fps) != c.num_frames) continue;
      if (e.star_frame_index == c.star_frame_index) return harness::TransportReply{e.text, ""};
      if (!e.star_frame_index && !fallback) fallback = &e;
    }
    if (!fallback)
      throw TransportError("grading fixture has no response for " + std::string(to_string(req.provider)) +
                           " with " + std::to_string(c.num_frames) + " frames");
    return harness::TransportReply{fallback->text, ""};
  };
}

CapacityReport run_capacity(const ProviderConfig& config, const Responder& responder,
                            const CapacityOptions& options) {
  CapacityReport report;
  report.provider = std::string(to_string(config.provider));
  report.model_name = config.model_name;
  report.fps = config.frame_rate_fps;
  report.num_frames = options.num_frames > 0 ? options.num_frames : frames_for(config.frame_rate_fps);
  const auto stars = star_schedule(report.num_frames, options.iterations);
  report.iterations.resize(stars.size());

#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(stars.size()); ++k) {
    auto& it = report.iterations[k];
    it.star_frame_index = stars[k];
    try {
      auto [c, frames] = generate_case(report.num_frames, stars[k], options.frame_size, options.render);
      std::vector<std::vector<std::uint8_t>> images;
      for (auto& f : frames) images.push_back(std::move(f.png));
      Json doc;
      try {
        doc = harness::adapt_payload(config, harness::payload_from_images(images, config), capacity_prompt());
      } catch (const PayloadError& e) {
        it.payload_ok = false;
        it.error = e.what();
        continue;
      }
      const harness::ProviderRequest req{config.provider, config.access, config.model_name, doc,
                                         harness::request_key(doc), 0};
      it.response_text = responder(req, c).text;
      it.grade = grade_response(it.response_text, c, options.lexicon);
    } catch (const std::exception& e) {
      it.error = e.what();
    }
  }
  return report;
}

void write_case(const std::filesystem::path& dir, const CapacityCase& c,
                const std::vector<GeneratedFrame>& frames) {
  std::filesystem::create_directories(dir);
  Json names = Json::array();
  for (const auto& f : frames) {
    util::write_if_changed(dir / f.filename, std::string_view(reinterpret_cast<const char*>(f.png.data()), f.png.size()));
    names.push_back(f.filename);
  }
  Json balls = Json::array();
  for (const auto& p : c.ball_positions) balls.push_back({p.x, p.y});
  const Json meta{{"num_frames", c.num_frames},
                  {"star_frame_index", c.star_frame_index},
                  {"frame_size", {c.frame_size.width, c.frame_size.height}},
                  {"ball_positions", balls},
                  {"star_center", {c.star_center.x, c.star_center.y}},
                  {"frames", names}};
  util::write_if_changed(dir / "case.json", meta.dump(2) + "\n");
}

}  // namespace vqalign::capacity
