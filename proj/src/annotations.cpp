#include "vprobe/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"
#include "vprobe/metrics.hpp"

namespace vprobe {

const char* to_string(DatasetMode mode) { return mode == DatasetMode::kGqa ? "gqa" : "textvqa"; }

DatasetMode dataset_mode_from_string(std::string_view name) {
  if (name == "gqa") return DatasetMode::kGqa;
  if (name == "textvqa") return DatasetMode::kTextVqa;
  throw Error(ErrorCode::kValidation, "unknown dataset mode '" + std::string(name) + "' (gqa|textvqa)");
}

const char* to_string(SliceKey key) {
  return key == SliceKey::kRelativeSize ? "relative_size" : "distractor_count";
}

SliceKey slice_key_from_string(std::string_view name) {
  if (name == "relative_size") return SliceKey::kRelativeSize;
  if (name == "distractor_count") return SliceKey::kDistractorCount;
  throw Error(ErrorCode::kValidation,
              "unknown slice key '" + std::string(name) + "' (relative_size|distractor_count)");
}

namespace {

void check_box(const BoxF& b, int w, int h, const std::string& what) {
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h);
  if (!finite || b.w <= 0.0 || b.h <= 0.0 || b.x < 0.0 || b.y < 0.0 || b.x + b.w > w + 1e-6 ||
      b.y + b.h > h + 1e-6) {
    throw Error(ErrorCode::kValidation, what + " box lies outside the image or is empty");
  }
}

nlohmann::json box_json(const BoxF& b) { return nlohmann::json::array({b.x, b.y, b.w, b.h}); }

BoxF box_from(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kValidation, "box must be [x, y, w, h]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

struct IRect {
  std::int64_t x0, y0, x1, y1;
};

// Outward rounding onto the pixel grid, clipped to the image.
IRect pixel_cover(const BoxF& b, int w, int h) {
  return {std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(b.x)), 0, w),
          std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(b.y)), 0, h),
          std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(b.x + b.w)), 0, w),
          std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(b.y + b.h)), 0, h)};
}

// Area of a union of integer rects via coordinate compression. Equivalent to
// painting the pixels but independent of image size.
std::int64_t union_area(const std::vector<IRect>& rects) {
  std::vector<std::int64_t> xs;
  std::vector<std::int64_t> ys;
  for (const auto& r : rects) {
    xs.insert(xs.end(), {r.x0, r.x1});
    ys.insert(ys.end(), {r.y0, r.y1});
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  std::int64_t area = 0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
      const bool covered = std::any_of(rects.begin(), rects.end(), [&](const IRect& r) {
        return r.x0 <= xs[i] && xs[i + 1] <= r.x1 && r.y0 <= ys[j] && ys[j + 1] <= r.y1;
      });
      if (covered) area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
    }
  }
  return area;
}

double clipped_area(const BoxF& b, int w, int h) {
  const double x0 = std::max(0.0, b.x);
  const double y0 = std::max(0.0, b.y);
  const double x1 = std::min<double>(w, b.x + b.w);
  const double y1 = std::min<double>(h, b.y + b.h);
  return std::max(0.0, x1 - x0) * std::max(0.0, y1 - y0);
}

}  // namespace

void AnnotationRecord::validate() const {
  const std::string where = "question " + question_id + ": ";
  if (question_id.empty()) throw Error(ErrorCode::kValidation, "annotation without question_id");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::kValidation, where + "image dims must be positive");
  if (answers.empty()) throw Error(ErrorCode::kValidation, where + "answers must be non-empty");
  for (const auto& o : objects) check_box(o.box, width, height, where + "object " + o.id);
  for (const auto& t : ocr_tokens) check_box(t.box, width, height, where + "ocr token '" + t.text + "'");
}

nlohmann::json to_json(const AnnotationRecord& r) {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : r.objects) objects.push_back({{"id", o.id}, {"box", box_json(o.box)}});
  nlohmann::json tokens = nlohmann::json::array();
  for (const auto& t : r.ocr_tokens) tokens.push_back({{"text", t.text}, {"box", box_json(t.box)}});
  return {{"question_id", r.question_id}, {"mode", to_string(r.mode)}, {"width", r.width},
          {"height", r.height},           {"answers", r.answers},       {"prediction", r.prediction},
          {"objects", objects},           {"target_ids", r.target_ids}, {"ocr_tokens", tokens}};
}

AnnotationRecord annotation_from_json(const nlohmann::json& j) {
  AnnotationRecord r;
  try {
    r.question_id = j.at("question_id").is_string() ? j.at("question_id").get<std::string>()
                                                     : j.at("question_id").dump();
    r.mode = dataset_mode_from_string(j.at("mode").get<std::string>());
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.answers = j.at("answers").get<std::vector<std::string>>();
    r.prediction = j.value("prediction", "");
    for (const auto& o : j.value("objects", nlohmann::json::array())) {
      r.objects.push_back({o.at("id").get<std::string>(), box_from(o.at("box"))});
    }
    r.target_ids = j.value("target_ids", std::vector<std::string>{});
    for (const auto& t : j.value("ocr_tokens", nlohmann::json::array())) {
      r.ocr_tokens.push_back({t.at("text").get<std::string>(), box_from(t.at("box"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed annotation: ") + e.what());
  }
  r.validate();
  return r;
}

std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path) {
  std::vector<AnnotationRecord> out;
  int line = 0;
  for (const auto& j : read_jsonl(path)) {
    ++line;
    try {
      out.push_back(annotation_from_json(j));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": record " + std::to_string(line) + ": " + e.what());
    }
  }
  return out;
}

double relative_target_area(const AnnotationRecord& r) {
  const double image_area = static_cast<double>(r.width) * r.height;
  if (r.mode == DatasetMode::kGqa) {
    std::unordered_set<std::string> targets(r.target_ids.begin(), r.target_ids.end());
    std::vector<IRect> rects;
    for (const auto& o : r.objects) {
      if (targets.count(o.id)) rects.push_back(pixel_cover(o.box, r.width, r.height));
    }
    if (rects.empty()) throw Error(ErrorCode::kNoBoxes, "question " + r.question_id + " has no target boxes");
    return static_cast<double>(union_area(rects)) / image_area;
  }
  if (r.ocr_tokens.empty()) throw Error(ErrorCode::kNoBoxes, "question " + r.question_id + " has no OCR tokens");
  const std::string answer = normalize(r.answers.front());
  double best_score = -1.0;
  double best_area = -1.0;
  for (std::size_t i = 0; i < r.ocr_tokens.size(); ++i) {
    const double score = gpm(normalize(r.ocr_tokens[i].text), answer);
    const double area = clipped_area(r.ocr_tokens[i].box, r.width, r.height);
    if (score > best_score || (score == best_score && area > best_area)) {
      best_score = score;
      best_area = area;
    }
  }
  return best_area / image_area;
}

std::int64_t unified_pixel_count(double fraction) {
  if (!(fraction >= 0.0) || fraction > 1.0) throw Error(ErrorCode::kInvalidArgument, "fraction must be in [0, 1]");
  return static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(kUnifiedPixels) + 0.5));
}

int count_distractors(const AnnotationRecord& r) {
  if (r.mode == DatasetMode::kGqa) {
    std::unordered_set<std::string> targets(r.target_ids.begin(), r.target_ids.end());
    return static_cast<int>(std::count_if(r.objects.begin(), r.objects.end(),
                                          [&](const AnnotatedObject& o) { return !targets.count(o.id); }));
  }
  std::vector<std::string> answers;
  for (const auto& a : r.answers) answers.push_back(normalize(a));
  int n = 0;
  for (const auto& t : r.ocr_tokens) {
    const std::string text = normalize(t.text);
    const bool related = std::any_of(answers.begin(), answers.end(),
                                     [&](const std::string& a) { return a.find(text) != std::string::npos; });
    if (!related) ++n;
  }
  return n;
}

std::vector<SliceBucket> quantile_slice(const std::vector<AnnotationRecord>& records, SliceKey key, int q) {
  if (q < 1) throw Error(ErrorCode::kInvalidArgument, "q must be >= 1");
  if (records.size() < static_cast<std::size_t>(q)) {
    throw Error(ErrorCode::kTooFewRecords, "need at least " + std::to_string(q) + " records, got " +
                                               std::to_string(records.size()));
  }
  struct Row {
    double key;
    double area;
    int distractors;
    int inclusion;
    int exact;
    double gpm;
    const AnnotationRecord* rec;
  };
  std::vector<Row> rows;
  rows.reserve(records.size());
  for (const auto& r : records) {
    Row row{};
    row.rec = &r;
    row.area = relative_target_area(r);
    row.distractors = count_distractors(r);
    row.key = key == SliceKey::kRelativeSize ? row.area : static_cast<double>(row.distractors);
    row.inclusion = inclusion_match(r.prediction, r.answers);
    row.exact = exact_match(r.prediction, r.answers);
    const std::string pred = normalize(r.prediction);
    for (const auto& a : r.answers) row.gpm = std::max(row.gpm, gpm(pred, normalize(a)));
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.key < b.key; });

  const std::size_t n = rows.size();
  const std::size_t base = n / static_cast<std::size_t>(q);
  const std::size_t extra = n % static_cast<std::size_t>(q);
  std::vector<SliceBucket> out;
  std::size_t pos = 0;
  for (int b = 0; b < q; ++b) {
    const std::size_t size = base + (static_cast<std::size_t>(b) < extra ? 1 : 0);
    SliceBucket bucket;
    bucket.index = b;
    bucket.n = static_cast<int>(size);
    bucket.key_min = rows[pos].key;
    bucket.key_max = rows[pos + size - 1].key;
    bucket.area_min = 1.0;
    bucket.area_max = 0.0;
    std::int64_t distractors = 0;
    int inclusion = 0;
    int exact = 0;
    double gpm_sum = 0.0;
    for (std::size_t i = pos; i < pos + size; ++i) {
      const Row& row = rows[i];
      bucket.area_min = std::min(bucket.area_min, row.area);
      bucket.area_max = std::max(bucket.area_max, row.area);
      distractors += row.distractors;
      inclusion += row.inclusion;
      exact += row.exact;
      gpm_sum += row.gpm;
      bucket.question_ids.push_back(row.rec->question_id);
    }
    bucket.pixels_min = unified_pixel_count(bucket.area_min);
    bucket.pixels_max = unified_pixel_count(bucket.area_max);
    const double count = static_cast<double>(size);
    bucket.mean_distractors = static_cast<double>(distractors) / count;
    bucket.acc_inclusion = inclusion / count;
    bucket.acc_exact = exact / count;
    bucket.mean_gpm = gpm_sum / count;
    out.push_back(std::move(bucket));
    pos += size;
  }
  return out;
}

namespace {

std::string id_string(const nlohmann::json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// {qid: answer} or [{question_id|questionId, answer|prediction}]
std::map<std::string, std::string> prediction_map(const nlohmann::json& predictions) {
  std::map<std::string, std::string> out;
  if (predictions.is_null()) return out;
  if (predictions.is_object()) {
    for (const auto& [k, v] : predictions.items()) out[k] = v.get<std::string>();
    return out;
  }
  if (!predictions.is_array()) throw Error(ErrorCode::kValidation, "predictions must be an object or an array");
  for (const auto& p : predictions) {
    const auto& id = p.contains("question_id") ? p.at("question_id") : p.at("questionId");
    const auto& ans = p.contains("answer") ? p.at("answer") : p.at("prediction");
    out[id_string(id)] = ans.get<std::string>();
  }
  return out;
}

std::string lookup(const std::map<std::string, std::string>& m, const std::string& key) {
  const auto it = m.find(key);
  return it == m.end() ? std::string() : it->second;
}

}  // namespace

ConvertResult convert_gqa(const nlohmann::json& questions, const nlohmann::json& scene_graphs,
                          const nlohmann::json& predictions) {
  ConvertResult out;
  const auto preds = prediction_map(predictions);
  try {
    for (const auto& [qid, q] : questions.items()) {
      const std::string image_id = id_string(q.at("imageId"));
      if (!scene_graphs.contains(image_id)) {
        ++out.skipped;
        continue;
      }
      const auto& graph = scene_graphs.at(image_id);
      AnnotationRecord r;
      r.question_id = qid;
      r.mode = DatasetMode::kGqa;
      r.width = graph.at("width").get<int>();
      r.height = graph.at("height").get<int>();
      r.answers = {q.at("answer").get<std::string>()};
      r.prediction = lookup(preds, qid);
      for (const auto& [oid, o] : graph.at("objects").items()) {
        BoxF box{o.at("x").get<double>(), o.at("y").get<double>(), o.at("w").get<double>(), o.at("h").get<double>()};
        // scene graphs occasionally overhang the image by a pixel
        box.w = std::min(box.w, r.width - box.x);
        box.h = std::min(box.h, r.height - box.y);
        if (box.w <= 0.0 || box.h <= 0.0 || box.x < 0.0 || box.y < 0.0) continue;
        r.objects.push_back({oid, box});
      }
      std::set<std::string> targets;
      if (q.contains("annotations")) {
        for (const auto& [part, refs] : q.at("annotations").items()) {
          for (const auto& [pos, oid] : refs.items()) {
            // multi-object references look like "123,456"
            std::string ids = oid.get<std::string>();
            std::size_t start = 0;
            while (start <= ids.size()) {
              const std::size_t comma = std::min(ids.find(',', start), ids.size());
              if (comma > start) targets.insert(ids.substr(start, comma - start));
              start = comma + 1;
            }
          }
        }
      }
      std::set<std::string> present;
      for (const auto& o : r.objects) present.insert(o.id);
      for (const auto& t : targets) {
        if (present.count(t)) r.target_ids.push_back(t);
      }
      if (r.target_ids.empty()) {
        ++out.skipped;
        continue;
      }
      r.validate();
      out.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed GQA input: ") + e.what());
  }
  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const AnnotationRecord& a, const AnnotationRecord& b) { return a.question_id < b.question_id; });
  return out;
}

ConvertResult convert_textvqa(const nlohmann::json& questions, const nlohmann::json& ocr,
                              const nlohmann::json& predictions) {
  ConvertResult out;
  const auto preds = prediction_map(predictions);
  try {
    std::map<std::string, const nlohmann::json*> ocr_by_image;
    for (const auto& entry : ocr.at("data")) ocr_by_image[id_string(entry.at("image_id"))] = &entry;
    for (const auto& q : questions.at("data")) {
      AnnotationRecord r;
      r.question_id = id_string(q.at("question_id"));
      r.mode = DatasetMode::kTextVqa;
      r.width = q.at("image_width").get<int>();
      r.height = q.at("image_height").get<int>();
      r.answers = q.at("answers").get<std::vector<std::string>>();
      r.prediction = lookup(preds, r.question_id);
      const auto it = ocr_by_image.find(id_string(q.at("image_id")));
      if (it != ocr_by_image.end()) {
        for (const auto& info : it->second->value("ocr_info", nlohmann::json::array())) {
          const auto& bb = info.at("bounding_box");
          BoxF box{bb.at("top_left_x").get<double>() * r.width, bb.at("top_left_y").get<double>() * r.height,
                   bb.at("width").get<double>() * r.width, bb.at("height").get<double>() * r.height};
          box.x = std::max(0.0, box.x);
          box.y = std::max(0.0, box.y);
          box.w = std::min(box.w, r.width - box.x);
          box.h = std::min(box.h, r.height - box.y);
          if (box.w <= 0.0 || box.h <= 0.0) continue;
          r.ocr_tokens.push_back({info.at("word").get<std::string>(), box});
        }
      }
      if (r.ocr_tokens.empty() || r.answers.empty()) {
        ++out.skipped;
        continue;
      }
      r.validate();
      out.records.push_back(std::move(r));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kValidation, std::string("malformed TextVQA input: ") + e.what());
  }
  return out;
}

}  // namespace vprobe
