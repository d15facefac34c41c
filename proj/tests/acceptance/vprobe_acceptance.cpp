// vprobe_acceptance: end-to-end checks against independent oracles. Prints one
// PASS/FAIL line per criterion and exits nonzero if any fails.
#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "vprobe/adapters.hpp"
#include "vprobe/analysis.hpp"
#include "vprobe/annotations.hpp"
#include "vprobe/commands.hpp"
#include "vprobe/error.hpp"
#include "vprobe/jsonl.hpp"
#include "vprobe/manifest.hpp"
#include "vprobe/metrics.hpp"
#include "vprobe/patchgeom.hpp"
#include "vprobe/probeforge.hpp"
#include "vprobe/raster.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace vprobe;

// Pinned budgets and tolerances.
constexpr double kGpmSpotTolerance = 1e-12;
constexpr double kGpmBudgetS = 60.0;
constexpr double kResampleBudgetS = 60.0;
constexpr double kGenerateBudgetS = 300.0;
constexpr double kOcrBudgetS = 600.0;
constexpr std::uint64_t kSeed = 20240601;

// Collects the first few failures of one criterion.
struct Check {
  int failures = 0;
  std::ostringstream first;

  void fail(const std::string& what) {
    if (failures++ < 3) first << (failures > 1 ? "; " : "") << what;
  }
  void expect(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- 1. GPM ---------------------------------------------------------------

// Every string over "abc" of length <= 8, indexed by length offset plus its
// base-3 value (first character most significant).
constexpr int kMaxLen = 8;

struct AbcStrings {
  std::vector<std::string> text;
  int offset[kMaxLen + 2] = {};

  AbcStrings() {
    int pow = 1;
    for (int len = 0; len <= kMaxLen; ++len) {
      offset[len] = static_cast<int>(text.size());
      for (int v = 0; v < pow; ++v) {
        std::string s(static_cast<std::size_t>(len), 'a');
        for (int i = len - 1, r = v; i >= 0; --i, r /= 3) s[static_cast<std::size_t>(i)] = static_cast<char>('a' + r % 3);
        text.push_back(std::move(s));
      }
      pow *= 3;
    }
    offset[kMaxLen + 1] = static_cast<int>(text.size());
  }

};

// Memoized form of the recursive definition: T[a][b] is the matched-character
// count, built from strictly shorter pairs. Substring indices come from the
// base-3 value: digits [s, s + l) of v are (v / 3^(len - s - l)) % 3^l.
std::vector<std::uint8_t> memo_matched(const AbcStrings& all) {
  const std::size_t n = all.text.size();
  std::vector<std::uint8_t> table(n * n, 0);
  int pow3[kMaxLen + 1] = {1};
  for (int i = 1; i <= kMaxLen; ++i) pow3[i] = pow3[i - 1] * 3;
  const auto sub = [&](int value, int len, int s, int l) { return all.offset[l] + (value / pow3[len - s - l]) % pow3[l]; };
  int run[kMaxLen + 1][kMaxLen + 1] = {};
  for (int la = 1; la <= kMaxLen; ++la) {
    for (int va = 0; va < pow3[la]; ++va) {
      const std::size_t ia = static_cast<std::size_t>(all.offset[la] + va);
      const char* a = all.text[ia].data();
      for (int lb = 1; lb <= kMaxLen; ++lb) {
        for (int vb = 0; vb < pow3[lb]; ++vb) {
          const std::size_t ib = static_cast<std::size_t>(all.offset[lb] + vb);
          const char* b = all.text[ib].data();
          // run[i][j]: length of the common run starting at a[i], b[j].
          for (int i = la - 1; i >= 0; --i) {
            run[i][lb] = 0;
            for (int j = lb - 1; j >= 0; --j) run[i][j] = (a[i] == b[j]) * (run[i + 1][j + 1] + 1);
          }
          for (int j = 0; j <= lb; ++j) run[la][j] = 0;
          int best = 0, bi = 0, bj = 0;
          for (int i = 0; i < la; ++i)
            for (int j = 0; j < lb; ++j)
              if (run[i][j] > best) {
                best = run[i][j];
                bi = i;
                bj = j;
              }
          if (best == 0) continue;
          const auto left = static_cast<std::size_t>(sub(va, la, 0, bi)) * n + static_cast<std::size_t>(sub(vb, lb, 0, bj));
          const auto right = static_cast<std::size_t>(sub(va, la, bi + best, la - bi - best)) * n +
                             static_cast<std::size_t>(sub(vb, lb, bj + best, lb - bj - best));
          table[ia * n + ib] = static_cast<std::uint8_t>(best + table[left] + table[right]);
        }
      }
    }
  }
  return table;
}

std::string criterion_gpm(Check& c) {
  const auto t0 = Clock::now();
  const AbcStrings all;
  const std::size_t n = all.text.size();
  const auto table = memo_matched(all);

  // Anchor the table to the plain recursion.
  std::mt19937_64 gen(kSeed);
  for (int k = 0; k < 20000; ++k) {
    const std::size_t ia = gen() % n, ib = gen() % n;
    c.expect(table[ia * n + ib] == oracle::matched(all.text[ia], all.text[ib]),
             "memo table disagrees with recursion on " + all.text[ia] + "/" + all.text[ib]);
  }

  const auto t_impl = Clock::now();
  std::size_t pairs = 0;
  for (std::size_t ia = 0; ia < n; ++ia) {
    const std::string& a = all.text[ia];
    for (std::size_t ib = 0; ib < n; ++ib) {
      const std::string& b = all.text[ib];
      const double want = (a.empty() && b.empty()) ? 1.0
                          : (a.empty() || b.empty())
                              ? 0.0
                              : 2.0 * table[ia * n + ib] / static_cast<double>(a.size() + b.size());
      if (gpm(a, b) != want) c.fail("gpm('" + a + "','" + b + "')");
      ++pairs;
    }
  }
  const double impl_s = seconds_since(t_impl);

  std::uniform_int_distribution<int> len(0, 12), sym(0, 3);
  for (int k = 0; k < 10000; ++k) {
    std::string a, b;
    const std::string alphabet = k % 2 ? "0123" : "5934";
    for (int i = len(gen); i > 0; --i) a += alphabet[static_cast<std::size_t>(sym(gen))];
    for (int i = len(gen); i > 0; --i) b += alphabet[static_cast<std::size_t>(sym(gen))];
    if (gpm(a, b) != oracle::gpm(a, b)) c.fail("random pair '" + a + "','" + b + "'");
  }

  const double spot = gpm("5934549", "593459");
  c.expect(std::abs(spot - 12.0 / 13.0) <= kGpmSpotTolerance, "spot value " + std::to_string(spot));
  const double total_s = seconds_since(t0);
  c.expect(total_s < kGpmBudgetS, "took " + std::to_string(total_s) + " s");
  std::ostringstream msg;
  msg << pairs << " exhaustive pairs + 10000 random, implementation " << impl_s << " s";
  return msg.str();
}

// ---- 2. Resampling --------------------------------------------------------

GrayImage random_image(std::mt19937_64& gen, int w, int h) {
  GrayImage img(w, h);
  const int mode = static_cast<int>(gen() % 3);
  for (auto& p : img.pixels()) {
    if (mode == 0) p = static_cast<std::uint8_t>(gen());
    else if (mode == 1) p = gen() % 3 == 0 ? 0 : 255;
    else p = static_cast<std::uint8_t>((gen() % 5) * 60);
  }
  return img;
}

std::string criterion_resampling(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(kSeed + 2);
  const int cases = 1000;
  for (int k = 0; k < cases; ++k) {
    // Round trip through the reference 300 -> 50 -> 300 shape, then a random one.
    const GrayImage fig = random_image(gen, 300, 300);
    const GrayImage small = downsample(fig, 6);
    c.expect(small.width() == 50 && small.height() == 50, "300/6 is not 50x50");
    const GrayImage back = downsample_upsample(fig, 6);
    c.expect(back.width() == 300 && back.height() == 300, "round trip is not 300x300");
    c.expect(small == oracle::box_downsample(fig, 6), "downsample differs from box mean");

    const int f = 2 + static_cast<int>(gen() % 7);
    const int w = f * (1 + static_cast<int>(gen() % 40)), h = f * (1 + static_cast<int>(gen() % 40));
    const GrayImage img = random_image(gen, w, h);
    const GrayImage down = downsample(img, f);
    c.expect(down == oracle::box_downsample(img, f), "downsample differs from box mean");
    const GrayImage up = upsample(down, f);
    c.expect(up.width() == w && up.height() == h, "upsample dims");
    const std::set<std::uint8_t> before(down.pixels().begin(), down.pixels().end());
    const std::set<std::uint8_t> after(up.pixels().begin(), up.pixels().end());
    c.expect(before == after, "upsample changed the value set");

    const int s = 1 + static_cast<int>(gen() % 6);
    const int rw = 1 + static_cast<int>(gen() % static_cast<unsigned>(w));
    const int rh = 1 + static_cast<int>(gen() % static_cast<unsigned>(h));
    const Rect rect{static_cast<int>(gen() % static_cast<unsigned>(w - rw + 1)),
                    static_cast<int>(gen() % static_cast<unsigned>(h - rh + 1)), rw, rh};
    GrayImage crop(rw, rh);
    for (int y = 0; y < rh; ++y)
      for (int x = 0; x < rw; ++x) crop.at(x, y) = img.at(rect.x + x, rect.y + y);
    const GrayImage big = crop_upsample(img, rect, Ratio{s, 1});
    c.expect(big.width() == rw * s && big.height() == rh * s, "crop_upsample dims");
    c.expect(count_dark(big) == static_cast<std::size_t>(s * s) * oracle::dark(crop), "dark count is not k^2 times");
    const std::set<std::uint8_t> crop_vals(crop.pixels().begin(), crop.pixels().end());
    const std::set<std::uint8_t> big_vals(big.pixels().begin(), big.pixels().end());
    c.expect(crop_vals == big_vals, "crop_upsample changed the value set");
  }
  const double s = seconds_since(t0);
  c.expect(s < kResampleBudgetS, "took " + std::to_string(s) + " s");
  return std::to_string(cases) + " randomized cases";
}

// ---- 3. Patch geometry ----------------------------------------------------

std::string criterion_geometry(Check& c) {
  const std::map<std::string, std::pair<int, int>> grids = {
      {"blip2", {16, 16}}, {"instructblip", {16, 16}}, {"llava-1.5", {24, 24}}, {"qwen-vl-chat", {32, 32}}, {"fuyu-8b", {10, 10}}};
  c.expect(builtin_profiles().size() == grids.size(), "profile count");
  std::mt19937_64 gen(kSeed + 3);
  const int per_profile = 2000;
  for (const auto& [name, rc] : grids) {
    const ModelProfile& p = find_profile(name);
    c.expect(p.rows() == rc.first && p.cols() == rc.second,
             name + " grid " + std::to_string(p.rows()) + "x" + std::to_string(p.cols()));
    for (int k = 0; k < per_profile; ++k) {
      const int w = 1 + static_cast<int>(gen() % static_cast<unsigned>(p.width));
      const int h = 1 + static_cast<int>(gen() % static_cast<unsigned>(p.height));
      const Rect box{static_cast<int>(gen() % static_cast<unsigned>(p.width - w + 1)),
                     static_cast<int>(gen() % static_cast<unsigned>(p.height - h + 1)), w, h};
      const auto v = classify_cut(box, p, Axis::kVertical);
      const auto hz = classify_cut(box, p, Axis::kHorizontal);
      const auto want_v = oracle::crossed(box.x, box.w, p.patch);
      const auto want_h = oracle::crossed(box.y, box.h, p.patch);
      if (v.crossed_boundaries != want_v || v.is_cut != !want_v.empty() || hz.crossed_boundaries != want_h ||
          hz.is_cut != !want_h.empty())
        c.fail(name + " disagrees at " + std::to_string(box.x) + "," + std::to_string(box.y) + " " +
               std::to_string(box.w) + "x" + std::to_string(box.h));
    }
  }
  return std::to_string(per_profile) + " random boxes x 2 axes per profile";
}

// ---- 4. Cardinalities -----------------------------------------------------

std::string criterion_cardinality(Check& c) {
  const ModelProfile& llava = find_profile("llava-1.5");
  const auto count = [&](SuiteKind kind, const ModelProfile& p) {
    return build_suite(default_suite_spec(kind, p, kSeed)).size();
  };
  const std::size_t q = count(SuiteKind::kQuality, llava);
  const std::size_t s = count(SuiteKind::kSize, llava);
  const std::size_t d = count(SuiteKind::kDistractor, llava);
  c.expect(q == 15000, "quality " + std::to_string(q));
  c.expect(s == 15000, "size " + std::to_string(s));
  c.expect(d == 10000, "distractor " + std::to_string(d));
  std::ostringstream msg;
  msg << "quality " << q << ", size " << s << ", distractor " << d << ", location cells";
  for (const auto& [name, want] : std::vector<std::pair<std::string, std::size_t>>{
           {"blip2", 64}, {"instructblip", 64}, {"fuyu-8b", 100}}) {
    std::set<std::pair<int, int>> cells;
    for (const auto& t : build_suite(default_suite_spec(SuiteKind::kLocation, find_profile(name), kSeed)))
      cells.insert({t.params.at("row").get<int>(), t.params.at("col").get<int>()});
    c.expect(cells.size() == want, name + " location cells " + std::to_string(cells.size()));
    msg << " " << name << "=" << cells.size();
  }
  return msg.str();
}

// ---- 5. Determinism -------------------------------------------------------

const char* kSmokeSpec = R"({
  "master_seed": 20240601,
  "profile": "llava-1.5",
  "suites": [
    {"kind": "quality", "trials_per_cell": 10},
    {"kind": "size", "trials_per_cell": 10},
    {"kind": "distractor", "trials_per_cell": 2},
    {"kind": "location", "profile": "blip2", "trials_per_cell": 2},
    {"kind": "boundary_cut", "profile": "fuyu-8b", "trials_per_cell": 2}
  ]
})";

std::map<std::string, std::uint64_t> hash_tree(const fs::path& root) {
  std::map<std::string, std::uint64_t> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = oracle::fnv1a(read_text_file(e.path()));
  return out;
}

std::string criterion_determinism(Check& c, const fs::path& work) {
  const auto t0 = Clock::now();
  atomic_write(work / "smoke.json", kSmokeSpec);
  std::ostringstream log;
  for (const char* dir : {"gen_a", "gen_b"}) {
    fs::remove_all(work / dir);
    GenerateOptions g;
    g.spec = work / "smoke.json";
    g.out = work / dir;
    c.expect(cmd_generate(g, log) == kExitOk, std::string("generate into ") + dir + " failed");
  }
  const auto a = hash_tree(work / "gen_a");
  const auto b = hash_tree(work / "gen_b");
  c.expect(a.size() > 1, "nothing generated");
  c.expect(a == b, "trees differ");
  const double s = seconds_since(t0);
  c.expect(s < kGenerateBudgetS, "took " + std::to_string(s) + " s");
  return std::to_string(a.size()) + " files hashed, two runs in " + std::to_string(s) + " s";
}

// ---- 6. Oracle pipeline ---------------------------------------------------

std::string criterion_oracle_pipeline(Check& c, const fs::path& work) {
  const fs::path manifest = work / "gen_a" / "manifest.jsonl";
  if (!fs::exists(manifest)) {
    c.fail("no manifest from the determinism run");
    return "";
  }
  std::ostringstream log;
  RunOptions run;
  run.manifest = manifest;
  run.backend = "oracle";
  run.out = work / "oracle_results.jsonl";
  fs::remove(run.out);
  c.expect(cmd_run(run, log) == kExitOk, "run failed");
  ScoreOptions score;
  score.manifest = manifest;
  score.results = run.out;
  score.out = work / "oracle_scored.jsonl";
  c.expect(cmd_score(score, log) == kExitOk, "score failed");

  std::vector<ScoredRecord> scored;
  for (const auto& j : read_jsonl(score.out)) scored.push_back(scored_from_json(j));
  std::set<SuiteKind> kinds;
  for (const auto& r : scored) {
    kinds.insert(r.suite);
    if (r.error || r.match.gpm != 1.0 || r.match.inclusion != 1) c.fail("trial " + r.trial_id);
  }
  c.expect(kinds.size() == 5, "suite kinds seen: " + std::to_string(kinds.size()));

  int cells = 0;
  std::vector<ScoredRecord> sweeps;
  for (const auto& r : scored)
    if (r.suite == SuiteKind::kQuality || r.suite == SuiteKind::kSize || r.suite == SuiteKind::kDistractor)
      sweeps.push_back(r);
  for (const auto& p : aggregate_curve(sweeps, default_curve_key)) {
    ++cells;
    if (p.mean_gpm != 1.0 || p.inclusion_acc != 1.0 || p.n_errors != 0) c.fail("curve cell " + p.series);
  }
  for (int k : {0, 1}) {
    for (const auto& h : aggregate_heatmap(scored, k)) {
      ++cells;
      if (h.n == 0 || h.mean_gpm != 1.0) c.fail("heatmap cell " + std::to_string(h.row) + "," + std::to_string(h.col));
    }
  }
  for (const auto& rep : boundary_cut_report(scored)) {
    for (const auto& bin : rep.full) {
      ++cells;
      if (bin.n > 0 && bin.mean_gpm != 1.0) c.fail("boundary bin " + std::to_string(bin.index));
    }
    c.expect(rep.summary.n_cut + rep.summary.n_uncut > 0, "empty boundary report");
    c.expect(rep.summary.n_cut == 0 || rep.summary.cut_mean == 1.0, "boundary cut mean");
    c.expect(rep.summary.n_uncut == 0 || rep.summary.uncut_mean == 1.0, "boundary uncut mean");
  }
  return std::to_string(scored.size()) + " trials over 5 kinds, " + std::to_string(cells) + " cells at 1.0";
}

// ---- 7. OCR degradation ---------------------------------------------------

std::string criterion_ocr(Check& c) {
  const auto t0 = Clock::now();
  SuiteSpec spec = default_suite_spec(SuiteKind::kQuality, find_profile("llava-1.5"), kSeed);
  spec.trials_per_cell = 50;
  const auto trials = build_suite(spec);
  TemplateOcrBackend ocr;
  std::map<int, std::pair<double, int>> by_rate;
  std::map<int, std::pair<double, int>> three_digit;
  for (const auto& t : trials) {
    Query q;
    q.prompt = t.prompt;
    q.image = render_trial(t, spec.profile);
    const Reply reply = ocr.ask(q);
    const double g = reply.ok() ? score_reply(reply.text, t.ground_truth).gpm : 0.0;
    const int rate = t.params.at("sampling_rate").get<int>();
    by_rate[rate].first += g;
    ++by_rate[rate].second;
    if (t.params.at("digits").get<int>() == 3) {
      three_digit[rate].first += g;
      ++three_digit[rate].second;
    }
  }
  const auto mean = [](const std::pair<double, int>& s) { return s.second ? s.first / s.second : 0.0; };
  const double m2 = mean(by_rate[2]), m20 = mean(by_rate[20]);
  c.expect(by_rate[2].second > 0 && by_rate[20].second > 0, "rates 2 and 20 missing");
  c.expect(m20 > m2, "rate 20 mean " + std::to_string(m20) + " <= rate 2 mean " + std::to_string(m2));
  for (const auto& [rate, s] : three_digit)
    if (rate >= 8 && mean(s) != 1.0) c.fail("3-digit mean at rate " + std::to_string(rate) + " = " + std::to_string(mean(s)));
  const double secs = seconds_since(t0);
  c.expect(secs < kOcrBudgetS, "took " + std::to_string(secs) + " s");
  std::ostringstream msg;
  msg << trials.size() << " trials, mean gpm rate 2 = " << m2 << ", rate 20 = " << m20;
  return msg.str();
}

// ---- 8. Slicer ------------------------------------------------------------

struct Fixture {
  std::vector<AnnotationRecord> records;
  std::vector<long long> area_px;  // known target area in native pixels
  std::vector<int> distractors;    // hand-assigned labels
};

// Records are built so the target area follows from integer box arithmetic
// and the distractor label from how the record was assembled.
Fixture slicer_fixture() {
  Fixture f;
  std::mt19937_64 gen(kSeed + 8);
  const auto uni = [&](int lo, int hi) { return lo + static_cast<int>(gen() % static_cast<unsigned>(hi - lo + 1)); };
  const std::vector<std::string> pool = {"pepsi", "sale", "open", "exit", "free", "b"};
  for (int i = 0; i < 1000; ++i) {
    AnnotationRecord r;
    r.question_id = "q" + std::to_string(i);
    r.width = uni(90, 480);
    r.height = uni(90, 480);
    long long area = 0;
    int dist = 0;
    if (i % 2 == 0) {
      r.mode = DatasetMode::kGqa;
      r.answers = {"yes"};
      r.prediction = gen() % 2 ? "yes" : "no";
      if (i == 0) {
        r.objects.push_back({"t0", {0, 0, static_cast<double>(r.width), static_cast<double>(r.height)}});
        r.target_ids.push_back("t0");
        area = static_cast<long long>(r.width) * r.height;
      } else {
        // Up to three targets in disjoint vertical strips; in each strip an
        // optional second box overlaps the first by a known offset.
        const int strips = uni(1, 3);
        const int sw = r.width / 3;
        for (int s = 0; s < strips; ++s) {
          const int w = uni(1, sw / 2), h = uni(1, r.height / 2);
          const int x = s * sw + uni(0, sw / 2 - w), y = uni(0, r.height / 2 - h);
          const std::string id = "t" + std::to_string(s);
          r.objects.push_back({id, {double(x), double(y), double(w), double(h)}});
          r.target_ids.push_back(id);
          area += static_cast<long long>(w) * h;
          if (gen() % 2) {
            const int dx = uni(0, w - 1), dy = uni(0, h - 1);
            r.objects.push_back({id + "o", {double(x + dx), double(y + dy), double(w), double(h)}});
            r.target_ids.push_back(id + "o");
            area += static_cast<long long>(w) * h - static_cast<long long>(w - dx) * (h - dy);
          }
        }
      }
      dist = uni(0, 6);
      for (int k = 0; k < dist; ++k)
        r.objects.push_back({"d" + std::to_string(k), {double(uni(0, r.width - 10)), double(uni(0, r.height - 10)), 10, 10}});
    } else {
      r.mode = DatasetMode::kTextVqa;
      const std::string answer = "a" + std::to_string(uni(1000, 9999));
      r.answers = {answer};
      r.prediction = gen() % 2 ? answer : "wrong";
      const int w = uni(4, r.width - 1), h = uni(4, r.height - 1);
      const int x = uni(0, r.width - w), y = uni(0, r.height - h);
      // The exact token; an equal-after-normalisation variant with a smaller
      // box that loses the tie; a substring of the answer. None are distractors.
      r.ocr_tokens.push_back({answer, {double(x), double(y), double(w), double(h)}});
      r.ocr_tokens.push_back({"A" + answer.substr(1) + ".", {double(x), double(y), double(w - 1), double(h - 1)}});
      r.ocr_tokens.push_back({answer.substr(1, 2), {0, 0, 3, 3}});
      area = static_cast<long long>(w) * h;
      dist = uni(0, 6);
      for (int k = 0; k < dist; ++k) r.ocr_tokens.push_back({pool[gen() % pool.size()], {1, 1, 2, 2}});
      std::shuffle(r.ocr_tokens.begin() + 2, r.ocr_tokens.end(), gen);
    }
    f.records.push_back(std::move(r));
    f.area_px.push_back(area);
    f.distractors.push_back(dist);
  }
  return f;
}

// Half-up rounding of area * 224^2 / (W * H) in integers.
std::int64_t unified_pixels(long long area, long long image_area) {
  return (2 * area * kUnifiedPixels + image_area) / (2 * image_area);
}

std::string criterion_slicer(Check& c) {
  const Fixture f = slicer_fixture();
  const std::size_t n = f.records.size();
  std::vector<double> areas(n), dists(n);
  std::vector<std::int64_t> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = f.records[i];
    const long long image_area = static_cast<long long>(r.width) * r.height;
    areas[i] = static_cast<double>(f.area_px[i]) / static_cast<double>(image_area);
    dists[i] = f.distractors[i];
    pixels[i] = unified_pixels(f.area_px[i], image_area);
    if (relative_target_area(r) != areas[i]) c.fail("area of " + r.question_id);
    if (count_distractors(r) != f.distractors[i]) c.fail("distractors of " + r.question_id);
    if (unified_pixel_count(areas[i]) != pixels[i]) c.fail("pixels of " + r.question_id);
  }
  std::int64_t max_px = 0;
  for (const auto& [key, keys] : {std::pair{SliceKey::kRelativeSize, &areas}, std::pair{SliceKey::kDistractorCount, &dists}}) {
    const auto buckets = quantile_slice(f.records, key, 5);
    const auto groups = oracle::split(*keys, 5);
    if (buckets.size() != groups.size()) {
      c.fail("bucket count");
      continue;
    }
    for (std::size_t g = 0; g < groups.size(); ++g) {
      const auto& b = buckets[g];
      const auto& idx = groups[g];
      double kmin = 1e300, kmax = -1e300, amin = 1e300, amax = -1e300;
      std::int64_t pmin = INT64_MAX, pmax = 0;
      long long dsum = 0;
      std::vector<std::string> ids;
      for (std::size_t i : idx) {
        kmin = std::min(kmin, (*keys)[i]);
        kmax = std::max(kmax, (*keys)[i]);
        amin = std::min(amin, areas[i]);
        amax = std::max(amax, areas[i]);
        pmin = std::min(pmin, pixels[i]);
        pmax = std::max(pmax, pixels[i]);
        dsum += f.distractors[i];
        ids.push_back(f.records[i].question_id);
      }
      const std::string where = std::string(to_string(key)) + " bucket " + std::to_string(g);
      c.expect(b.n == static_cast<int>(idx.size()), where + " size");
      c.expect(b.key_min == kmin && b.key_max == kmax, where + " key interval");
      c.expect(b.area_min == amin && b.area_max == amax, where + " area interval");
      c.expect(b.pixels_min == pmin && b.pixels_max == pmax, where + " pixel interval");
      c.expect(b.mean_distractors == static_cast<double>(dsum) / static_cast<double>(idx.size()), where + " mean #D");
      c.expect(b.question_ids == ids, where + " membership");
      max_px = std::max(max_px, b.pixels_max);
    }
  }
  c.expect(max_px == kUnifiedPixels, "max unified pixels " + std::to_string(max_px));
  return std::to_string(n) + " records, 2 keys x 5 buckets, max pixels " + std::to_string(max_px);
}

// ---- 9. Replay determinism ------------------------------------------------

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::vector<std::uint8_t> out(3 * text.size() / 4 + 3);
  const int len = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (len < 0) return {};
  std::size_t pad = 0;
  for (auto it = text.rbegin(); it != text.rend() && *it == '='; ++it) ++pad;
  out.resize(static_cast<std::size_t>(len) - pad);
  return out;
}

// Chat endpoint that reads the PNG with the template OCR. It answers 503 on
// the first sight of some requests and a schema-less body for others, so the
// log holds retries and terminal errors as well as answers.
class OcrEndpoint {
 public:
  OcrEndpoint() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) { handle(req, res); });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~OcrEndpoint() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  void handle(const httplib::Request& req, httplib::Response& res) {
    const std::uint64_t h = oracle::fnv1a(req.body);
    {
      std::lock_guard lock(mutex_);
      if (h % 5 == 0 && seen_.insert(h).second) {
        res.status = 503;
        return;
      }
    }
    if (h % 11 == 0) {
      res.set_content(R"({"choices": []})", "application/json");
      return;
    }
    const json body = json::parse(req.body);
    Query q;
    for (const auto& part : body.at("messages").at(0).at("content")) {
      if (part.at("type") == "text") q.prompt = part.at("text").get<std::string>();
      if (part.at("type") == "image_url") {
        const std::string url = part.at("image_url").at("url").get<std::string>();
        q.png = base64_decode(url.substr(url.find(',') + 1));
      }
    }
    const Reply reply = TemplateOcrBackend{}.ask(q);
    const json out = {{"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", reply.text}}}}}}};
    res.set_content(out.dump(), "application/json");
  }

  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mutex_;
  std::set<std::uint64_t> seen_;
};

std::map<std::string, std::string> read_tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_text_file(e.path());
  return out;
}

std::string criterion_replay(Check& c, const fs::path& work) {
  const fs::path dir = work / "replay";
  fs::remove_all(dir);
  fs::create_directories(dir);
  atomic_write(dir / "spec.json", R"({"master_seed": 20240601, "profile": "blip2",
"suites": [{"kind": "quality", "trials_per_cell": 4}, {"kind": "location", "trials_per_cell": 1, "param_grid": [0]}]})");
  std::ostringstream log;
  GenerateOptions g;
  g.spec = dir / "spec.json";
  g.out = dir / "gen";
  c.expect(cmd_generate(g, log) == kExitOk, "generate failed");

  OcrEndpoint endpoint;
  RunOptions run;
  run.manifest = dir / "gen" / "manifest.jsonl";
  run.backend = "http";
  run.endpoint.base_url = endpoint.url();
  run.endpoint.model_name = "ocr-stub";
  run.endpoint.timeout_s = 10.0;
  run.endpoint.max_retries = 2;
  run.endpoint.backoff_initial_ms = 1.0;
  run.endpoint.backoff_max_ms = 5.0;
  run.out = dir / "results.jsonl";
  run.replay_log = dir / "replay.jsonl";
  run.parallelism = 4;
  const int code = cmd_run(run, log);
  c.expect(code == kExitOk || code == kExitPartial, "run exit " + std::to_string(code));

  std::vector<std::map<std::string, std::string>> reports;
  for (const auto& [source, tag] : std::vector<std::pair<fs::path, std::string>>{
           {dir / "replay.jsonl", "a"}, {dir / "replay.jsonl", "b"}, {dir / "results.jsonl", "live"}}) {
    ScoreOptions s;
    s.manifest = run.manifest;
    s.results = source;
    s.out = dir / ("scored_" + tag + ".jsonl");
    c.expect(cmd_score(s, log) == kExitOk, "score " + tag);
    ReportOptions r;
    r.scored = s.out;
    r.out_dir = dir / ("report_" + tag);
    c.expect(cmd_report(r, log) == kExitOk, "report " + tag);
    reports.push_back(read_tree(r.out_dir));
  }
  std::size_t csvs = 0;
  for (const auto& [name, body] : reports[0]) csvs += name.ends_with(".csv") ? 1 : 0;
  c.expect(csvs >= 2, "only " + std::to_string(csvs) + " CSVs");
  c.expect(reports[0] == reports[1], "replay re-scoring differs");
  c.expect(reports[0] == reports[2], "replay differs from the live results");
  c.expect(read_text_file(dir / "scored_a.jsonl") == read_text_file(dir / "scored_b.jsonl"), "scored files differ");

  int errors = 0;
  for (const auto& j : read_jsonl(dir / "scored_a.jsonl")) errors += j.contains("error") && !j["error"].is_null() ? 1 : 0;
  return std::to_string(read_jsonl(dir / "replay.jsonl").size()) + " replay lines (" + std::to_string(errors) +
         " errors), " + std::to_string(csvs) + " CSVs identical";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vprobe acceptance checks"};
  fs::path work = fs::temp_directory_path() / "vprobe_acceptance";
  app.add_option("--work-dir", work, "Scratch directory for generated files");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(work);

  const std::vector<std::pair<std::string, std::function<std::string(Check&)>>> criteria = {
      {"gpm oracle equivalence", criterion_gpm},
      {"resampling contracts", criterion_resampling},
      {"patch geometry", criterion_geometry},
      {"suite cardinalities", criterion_cardinality},
      {"generate determinism", [&](Check& c) { return criterion_determinism(c, work); }},
      {"oracle pipeline integrity", [&](Check& c) { return criterion_oracle_pipeline(c, work); }},
      {"template OCR degradation", criterion_ocr},
      {"slicer correctness", criterion_slicer},
      {"replay determinism", [&](Check& c) { return criterion_replay(c, work); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check check;
    std::string detail;
    const auto t0 = Clock::now();
    try {
      detail = criteria[i].second(check);
    } catch (const std::exception& e) {
      check.fail(std::string("exception: ") + e.what());
    }
    const bool ok = check.failures == 0;
    failed += ok ? 0 : 1;
    std::cout << (ok ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first << " [" << std::fixed
              << std::setprecision(1) << seconds_since(t0) << " s] " << detail;
    if (!ok) std::cout << " :: " << check.failures << " failure(s): " << check.first.str();
    std::cout << std::defaultfloat << std::setprecision(6) << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
