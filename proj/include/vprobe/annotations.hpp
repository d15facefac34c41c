#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vprobe {

enum class DatasetMode { kGqa, kTextVqa };

const char* to_string(DatasetMode mode);
DatasetMode dataset_mode_from_string(std::string_view name);

// Box in native image pixels; coordinates may be fractional.
struct BoxF {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;
};

struct OcrToken {
  std::string text;
  BoxF box;
};

struct AnnotatedObject {
  std::string id;
  BoxF box;
};

// One VQA question in the neutral schema the slicer consumes.
//   GQA:     objects + target_ids (objects related to the question)
//   TextVQA: ocr_tokens
struct AnnotationRecord {
  std::string question_id;
  DatasetMode mode = DatasetMode::kGqa;
  int width = 0;
  int height = 0;
  std::vector<std::string> answers;
  std::string prediction;
  std::vector<AnnotatedObject> objects;
  std::vector<std::string> target_ids;
  std::vector<OcrToken> ocr_tokens;

  void validate() const;
};

nlohmann::json to_json(const AnnotationRecord& record);
AnnotationRecord annotation_from_json(const nlohmann::json& j);
std::vector<AnnotationRecord> read_annotations(const std::filesystem::path& path);

// Fraction of the image covered by the target. GQA: union of the target
// objects rasterized on the native pixel grid (boxes rounded outward).
// TextVQA: the OCR box whose text best matches answers[0] by GPM, ties to the
// larger box and then the earlier token. Throws kNoBoxes.
double relative_target_area(const AnnotationRecord& record);

inline constexpr int kUnifiedSide = 224;
inline constexpr std::int64_t kUnifiedPixels = static_cast<std::int64_t>(kUnifiedSide) * kUnifiedSide;

// Pixel count of an area fraction once the image is resized to 224x224.
std::int64_t unified_pixel_count(double fraction);

// TextVQA: tokens whose normalized text is neither equal to nor inside any
// normalized answer. GQA: annotated objects outside the target set.
int count_distractors(const AnnotationRecord& record);

enum class SliceKey { kRelativeSize, kDistractorCount };

const char* to_string(SliceKey key);
SliceKey slice_key_from_string(std::string_view name);

struct SliceBucket {
  int index = 0;
  int n = 0;
  double key_min = 0.0;
  double key_max = 0.0;
  double area_min = 0.0;
  double area_max = 0.0;
  std::int64_t pixels_min = 0;
  std::int64_t pixels_max = 0;
  double mean_distractors = 0.0;
  double acc_inclusion = 0.0;
  double acc_exact = 0.0;
  double mean_gpm = 0.0;
  std::vector<std::string> question_ids;
};

// Stable sort by key, then q equal-count buckets; the first (n mod q)
// buckets take one extra record. Throws kTooFewRecords when n < q.
std::vector<SliceBucket> quantile_slice(const std::vector<AnnotationRecord>& records, SliceKey key, int q = 5);

// Native-format converters. Predictions map question ids to answers; missing
// predictions become "". Questions without usable boxes are skipped and
// counted in `skipped`.
struct ConvertResult {
  std::vector<AnnotationRecord> records;
  int skipped = 0;
};

// questions: {qid: {imageId, answer, annotations: {question|answer|fullAnswer: {pos: objId}}}}
// scene graphs: {imageId: {width, height, objects: {objId: {x, y, w, h}}}}
ConvertResult convert_gqa(const nlohmann::json& questions, const nlohmann::json& scene_graphs,
                          const nlohmann::json& predictions);

// questions: {data: [{question_id, image_id, image_width, image_height, answers}]}
// ocr: {data: [{image_id, ocr_info: [{word, bounding_box: {top_left_x, top_left_y,
// width, height}}]}]} with coordinates normalized to [0, 1].
ConvertResult convert_textvqa(const nlohmann::json& questions, const nlohmann::json& ocr,
                              const nlohmann::json& predictions);

}  // namespace vprobe
