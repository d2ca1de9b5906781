#include "vqalign/questions.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "vqalign/errors.hpp"
#include "vqalign/util.hpp"

namespace vqalign::questions {

namespace {

constexpr std::string_view kSystemInstructions =
    "You are an AI assistant specialized in analyzing driving scenarios. You will receive a list "
    "of JSON objects, each containing partial metadata about different driving scenes. Be aware "
    "that the provided data is incomplete, and important elements of the scenes may be missing.\n"
    "\n"
    "For each JSON sample, your task is to:\n"
    "1. Read the JSON object.\n"
    "2. Include the \"#\" and \"Name\" from the JSON object at the beginning to indicate which "
    "sample you are analyzing.\n"
    "3. Generate **five** relevant and contextually appropriate questions based solely on the "
    "information available in the JSON object.\n"
    "4. Provide short and direct answers to each question.\n"
    "\n"
    "Focus on what is observed in the scene according to the metadata, and consider that there "
    "might be elements not explicitly mentioned.\n"
    "\n"
    "Example format:\n"
    "\n"
    "Sample #: 1\n"
    "Name: 2023_01_10_153834_044_clip_00_16_100\n"
    "\n"
    "Q1: [Question 1]\n"
    "A1: [Answer 1]\n"
    "\n"
    "Q2: [Question 2]\n"
    "A2: [Answer 2]\n"
    "\n"
    "Q3: [Question 3]\n"
    "A3: [Answer 3]\n"
    "\n"
    "Q4: [Question 4]\n"
    "A4: [Answer 4]\n"
    "\n"
    "Q5: [Question 5]\n"
    "A5: [Answer 5]";

constexpr std::string_view kStarter =
    "Below is a list of JSON samples, each containing partial information about different "
    "driving scenes. Please analyze each sample individually. For each one:\n"
    "\n"
    "- Generate five relevant questions based on the metadata. \n"
    "- Provide short and direct answers to each question. \n"
    "\n"
    "Remember that the metadata may be incomplete, and consider the possibility that there are "
    "other elements not mentioned in the file.  [Insert the list of JSON samples here]";

constexpr std::string_view kSlot = "[Insert the list of JSON samples here]";

std::string strip_bold(std::string s) {
  for (auto pos = s.find("**"); pos != std::string::npos; pos = s.find("**")) s.erase(pos, 2);
  return util::trim(s);
}

}  // namespace

const std::vector<MetaAttribute>& meta_attributes() {
  static const std::vector<MetaAttribute> kAttrs{
      {"vehicle_actions", "Vehicle Actions", LabelKind::Single},
      {"driving_action_reasoning", "Driving Action Reasoning", LabelKind::MultiOpen},
      {"vehicle_motion_behavior", "Vehicle Motion Behavior", LabelKind::Multi},
      {"traffic_signs", "Traffic Signs", LabelKind::Multi},
      {"traffic_lights", "Traffic Lights", LabelKind::Single},
      {"weather_conditions", "Weather Conditions", LabelKind::Multi},
      {"road_surface_conditions", "Road Surface Conditions", LabelKind::Multi},
      {"road_structures", "Road Structures", LabelKind::Multi},
      {"static_objects", "Static Objects", LabelKind::MultiOpen},
      {"other_vehicle_behaviors", "Other Vehicle Behaviors", LabelKind::Multi},
      {"pedestrian_behavior", "Pedestrian Behavior", LabelKind::Multi},
      {"unexpected_obstacles", "Unexpected Obstacles", LabelKind::MultiOpen},
      {"emergency_situations", "Emergency Situations", LabelKind::Single},
      {"lighting_conditions", "Lighting Conditions", LabelKind::Single},
      {"traffic_conditions", "Traffic Conditions", LabelKind::Single},
      {"driving_environment", "Driving Environment", LabelKind::Single},
  };
  return kAttrs;
}

MetaTagRecord parse_meta_tags(std::string_view json_text, std::string_view where) {
  const std::string w(where);
  std::map<std::string, int> seen;
  Json j;
  try {
    j = Json::parse(json_text, [&](int depth, Json::parse_event_t event, Json& parsed) {
      if (depth == 1 && event == Json::parse_event_t::key) ++seen[parsed.get<std::string>()];
      return true;
    });
  } catch (const Json::exception& e) {
    throw ValidationError(w + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError(w + ": expected an object");
  for (const auto& [k, n] : seen)
    if (n > 1) throw ValidationError(w + "." + k + ": appears " + std::to_string(n) + " times");

  MetaTagRecord r;
  if (!j.contains("video_id") || !j.at("video_id").is_string())
    throw ValidationError(w + ".video_id: missing field");
  r.video_id = j.at("video_id").get<std::string>();
  std::set<std::string> known{"video_id"};
  for (const auto& a : meta_attributes()) {
    known.insert(a.key);
    const std::string at = w + "." + a.key;
    if (!j.contains(a.key)) throw ValidationError(at + ": missing field");
    const auto& v = j.at(a.key);
    std::vector<std::string> values;
    if (a.kind == LabelKind::Single) {
      if (!v.is_string() || v.get<std::string>().empty())
        throw ValidationError(at + ": single-label attribute needs exactly one value");
      values.push_back(v.get<std::string>());
    } else {
      if (!v.is_array()) throw ValidationError(at + ": multi-label attribute must be a list");
      for (const auto& e : v) {
        if (!e.is_string()) throw ValidationError(at + ": labels must be strings");
        values.push_back(e.get<std::string>());
      }
    }
    r.values[a.key] = std::move(values);
  }
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ValidationError(w + "." + k + ": unknown field");
  return r;
}

MetaTagRecord load_meta_tags(const std::filesystem::path& path) {
  return parse_meta_tags(util::read_file(path), path.filename().string());
}

std::vector<MetaTagRecord> load_metadata_dir(const std::filesystem::path& dir,
                                             const std::vector<std::string>& video_ids) {
  std::vector<MetaTagRecord> out;
  for (const auto& id : video_ids) {
    const auto path = dir / (id + ".json");
    if (!std::filesystem::exists(path)) throw ValidationError("no metadata file for clip " + id);
    out.push_back(load_meta_tags(path));
    if (out.back().video_id != id)
      throw ValidationError(path.string() + ": video_id is '" + out.back().video_id + "'");
  }
  return out;
}

Json to_json(const MetaTagRecord& r) {
  Json j{{"video_id", r.video_id}};
  for (const auto& a : meta_attributes()) {
    const auto& v = r.values.at(a.key);
    if (a.kind == LabelKind::Single)
      j[a.key] = v.at(0);
    else
      j[a.key] = v;
  }
  return j;
}

OraclePrompt build_oracle_prompt(const std::vector<MetaTagRecord>& records) {
  if (records.empty()) throw ValidationError("oracle prompt needs at least one metadata record");
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < records.size(); ++i) {
    nlohmann::ordered_json s;
    s["#"] = i + 1;
    s["Name"] = records[i].video_id;
    for (const auto& a : meta_attributes()) {
      const auto it = records[i].values.find(a.key);
      if (it == records[i].values.end())
        throw ValidationError("metadata for " + records[i].video_id + " lacks " + a.key);
      if (a.kind == LabelKind::Single)
        s[a.key] = it->second.at(0);
      else
        s[a.key] = it->second;
    }
    samples.push_back(std::move(s));
  }
  std::string starter(kStarter);
  starter.replace(starter.find(kSlot), kSlot.size(), samples.dump(2));
  return {std::string(kSystemInstructions), std::move(starter)};
}

std::vector<OracleQA> parse_oracle_output(std::string_view text) {
  static const std::regex sample_re(R"(^[\s*#]*sample\s*#?\s*\**\s*:?\s*\**\s*(\d+)\b.*$)",
                                    std::regex::icase);
  static const std::regex name_re(R"(^[\s*]*name\s*\**\s*:\s*\**\s*(.*)$)", std::regex::icase);
  static const std::regex qa_re(R"(^[\s*]*([QA])\s*(\d+)\s*\**\s*[:.)]\s*\**\s*(.*)$)");

  struct Block {
    int number = 0;
    std::string name;
    std::map<int, std::string> q, a;
  };
  std::vector<Block> blocks;
  std::string* current = nullptr;  // field receiving continuation lines

  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (std::regex_match(line, m, sample_re)) {
      blocks.push_back({std::stoi(m[1].str()), {}, {}, {}});
      current = nullptr;
    } else if (blocks.empty()) {
      continue;
    } else if (std::regex_match(line, m, name_re)) {
      blocks.back().name = strip_bold(m[1].str());
      current = nullptr;
    } else if (std::regex_match(line, m, qa_re)) {
      auto& map = m[1].str() == "Q" ? blocks.back().q : blocks.back().a;
      const int n = std::stoi(m[2].str());
      if (map.count(n))
        throw ParseError("sample " + std::to_string(blocks.back().number) + ": " + m[1].str() +
                         std::to_string(n) + " appears twice");
      current = &(map[n] = strip_bold(m[3].str()));
    } else if (util::trim(line).empty()) {
      current = nullptr;
    } else if (current) {
      *current += " " + strip_bold(line);
    }
  }

  std::vector<OracleQA> out;
  for (const auto& b : blocks) {
    const std::string who = "sample " + std::to_string(b.number);
    if (b.name.empty()) throw ParseError(who + ": missing Name line");
    if (b.q.size() != 5 || b.a.size() != 5)
      throw ParseError(who + ": expected 5 question/answer pairs, found " +
                       std::to_string(b.q.size()) + " questions and " + std::to_string(b.a.size()) +
                       " answers");
    OracleQA qa;
    qa.sample_number = b.number;
    qa.video_id = b.name;
    for (int i = 1; i <= 5; ++i) {
      if (!b.q.count(i) || !b.a.count(i))
        throw ParseError(who + ": pair " + std::to_string(i) + " is missing");
      if (b.q.at(i).empty() || b.a.at(i).empty())
        throw ParseError(who + ": pair " + std::to_string(i) + " is empty");
      qa.pairs[i - 1] = {b.q.at(i), b.a.at(i)};
    }
    out.push_back(std::move(qa));
  }
  return out;
}

std::string render(const OracleQA& qa) {
  std::string out = "Sample #: " + std::to_string(qa.sample_number) + "\nName: " + qa.video_id + "\n";
  for (int i = 0; i < 5; ++i) {
    const auto n = std::to_string(i + 1);
    out += "\nQ" + n + ": " + qa.pairs[i].question + "\nA" + n + ": " + qa.pairs[i].answer + "\n";
  }
  return out;
}

std::string render(const std::vector<OracleQA>& qas) {
  std::string out;
  for (std::size_t i = 0; i < qas.size(); ++i) out += (i ? "\n" : "") + render(qas[i]);
  return out;
}

std::vector<OracleQA> run_oracle(const std::vector<MetaTagRecord>& records,
                                 harness::Transport& transport, const std::string& model_name) {
  const auto prompt = build_oracle_prompt(records);
  const Json doc{{"model", model_name},
                 {"messages", Json::array({{{"role", "system"}, {"content", prompt.system_instructions}},
                                           {{"role", "user"}, {"content", prompt.starter_message}}})}};
  const harness::ProviderRequest req{Provider::GenericHttp, Access::DirectApi, model_name, doc,
                                     harness::request_key(doc), 0};
  return parse_oracle_output(transport.send(req).text);
}

const std::vector<QuestionSpec>& question_bank() {
  static const std::vector<QuestionSpec> kBank{
      {6, Block::MultipleChoice,
       "Please rate the level of clutter from 1 to 10. Consider 10 as the highest level of clutter "
       "and 1 as the lowest.",
       AnswerFormat::Scale1To10, scale_options()},
      {7, Block::MultipleChoice, "Is this a recurrent driving scenario for you?", AnswerFormat::YesNo,
       yes_no_options()},
      {8, Block::MultipleChoice, "Estimate how many pedestrians are there in the scene?",
       AnswerFormat::CountInterval, pedestrian_count_options()},
      {9, Block::MultipleChoice, "Is this situation hazardous for the driver?", AnswerFormat::YesNo,
       yes_no_options()},
      {10, Block::MultipleChoice,
       "On a scale of 1-10, how well do you think an autonomous vehicle would drive in this scene? "
       "Consider 10 as perfect driving and 1 as terrible driving.",
       AnswerFormat::Scale1To10, scale_options()},
      {11, Block::Counterfactual,
       "What would have had to happen in this video for a crash to have occured involving the "
       "driver?",
       AnswerFormat::OpenText, std::nullopt},
      {12, Block::Counterfactual,
       "What would have had to happen in this video for an external crash to have occured not "
       "involving the driver?",
       AnswerFormat::OpenText, std::nullopt},
      {13, Block::Counterfactual,
       "Imagine if you had taken the opposite action in this scene (for example, braking instead "
       "of accelerating, or accelerating instead of braking). What do you think would have "
       "happened?",
       AnswerFormat::OpenText, std::nullopt},
      {14, Block::Counterfactual,
       "What would be the next action to perform a U-turn in the next frames if the driver was "
       "driving an ambulance instead?",
       AnswerFormat::OpenText, std::nullopt},
      {15, Block::Counterfactual,
       "What would be the next action to perform a U-turn in the next frames if the driver was "
       "driving a motorcycle instead?",
       AnswerFormat::OpenText, std::nullopt},
  };
  return kBank;
}

std::vector<QuestionSpec> full_question_set() {
  std::vector<QuestionSpec> out;
  for (int qid = 1; qid <= 5; ++qid)
    out.push_back({qid, Block::Variable, "Question " + std::to_string(qid), AnswerFormat::OpenText,
                   std::nullopt});
  const auto& bank = question_bank();
  out.insert(out.end(), bank.begin(), bank.end());
  return out;
}

void merge_into_manifest(RunManifest& manifest, const std::vector<OracleQA>& qas) {
  for (const auto& qa : qas) {
    if (!manifest.find_video(qa.video_id))
      throw ValidationError("oracle sample " + std::to_string(qa.sample_number) + " names unknown clip '" +
                            qa.video_id + "'");
    std::erase_if(manifest.variable_questions,
                  [&](const VariableQuestion& v) { return v.video_id == qa.video_id; });
    for (int i = 0; i < 5; ++i)
      manifest.variable_questions.push_back(
          {qa.video_id, i + 1, qa.pairs[i].question, qa.pairs[i].answer});
  }
  std::sort(manifest.variable_questions.begin(), manifest.variable_questions.end(),
            [](const auto& a, const auto& b) {
              return std::tie(a.video_id, a.qid) < std::tie(b.video_id, b.qid);
            });
}

}  // namespace vqalign::questions
